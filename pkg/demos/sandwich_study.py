"""Watch the truncated solutions close in on the untruncated one as K grows.

Run: python demos/sandwich_study.py   (about ten seconds)
"""

from isaacs_fd import benchmarks
from isaacs_fd.grid import DEFAULT_STENCIL, build_grid
from isaacs_fd.harness import monotonicity_in_K, run_sandwich

problem = benchmarks.rough_problem()
grid = build_grid(problem.domain, DEFAULT_STENCIL, 1 / 16)
Ks = [2, 4, 8, 16, 32, 64, 128]
rep = run_sandwich(problem, grid, Ks, keep_solutions=True)
print(" K      gap      u_K - w    w - v_K   Pucci branch (u, v)")
for d in rep.details:
    print(f"{d['K']:4.0f}  {d['gap']:.3e}  {d['sup_u_minus_w']:.3e}  {d['sup_w_minus_v']:.3e}"
          f"   {d['p_active_u']:4d} {d['p_active_v']:4d}")
mu, mv = monotonicity_in_K(rep.solutions["u"], rep.solutions["v"])
print(f"fitted decay exponent {rep.fitted_exponent:.3f}; monotonicity violations u {mu:.1e}, v {mv:.1e}")
