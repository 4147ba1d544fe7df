"""The barrier and the mollifier used by the comparison arguments, checked numerically.

Run: python demos/barrier_and_mollifier.py
"""

import numpy as np

from isaacs_fd.grid import Disk
from isaacs_fd.harness import auto_tune_barrier, fit_rate, mollifier_error, verify_barrier

b = auto_tune_barrier(Disk(1.0), delta=0.2, k1=2.0)
print(f"barrier: mu={b.mu:g}, R={b.R:g}, psi(0)={b.value(np.zeros(2)):.3e}")
for k1 in (2.0, 4.0, 8.0):
    slack = verify_barrier(b, 0.2, k1, raise_on_fail=False)
    print(f"  k1={k1:g}: max a:D2 psi + b.D psi = {slack:.4g}{'' if slack <= -1 else '  (fails)'}")

fn = lambda x: np.linalg.norm(x, axis=-1) ** 1.3
eps = [0.2, 0.1, 0.05, 0.025]
errs = [mollifier_error(fn, e, spacing=0.025 / 16) for e in eps]
for e, err in zip(eps, errs):
    print(f"eps={e:<6} sup|u - u_eps| = {err:.4e}")
print(f"decay exponent {fit_rate(eps, errs).fitted_exponent:.4f} for |x|^1.3")
