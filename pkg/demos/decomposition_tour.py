"""Split elliptic matrices into lattice directions and see where each stencil gives out.

Run: python demos/decomposition_tour.py
"""

import numpy as np

from isaacs_fd import DecompositionInfeasible
from isaacs_fd.decomposition import decompose_batch, decompose_matrix, decomposition_floor, random_elliptic
from isaacs_fd.grid import NAMED_STENCILS

a = np.array([[2.0, 0.5], [0.5, 1.0]])
for name, stencil in NAMED_STENCILS.items():
    try:
        dec = decompose_matrix(a, stencil)
    except DecompositionInfeasible as exc:
        print(f"{name:>10}: infeasible ({exc.best if np.isfinite(exc.best) else 'off the span'})")
        continue
    rec, _ = dec.reconstruct(stencil)
    print(f"{name:>10}: min coefficient {dec.floor:.4f}, reconstruction error {np.abs(rec - a).max():.1e}")

# certified floors over the extreme matrices of S_delta
print("\nfloor over rotated diag(delta, 1/delta):")
for delta in (0.5, 0.3, 0.2):
    row = ", ".join(f"{name} {decomposition_floor(delta, st):.4f}"
                    for name, st in NAMED_STENCILS.items() if name != "axis")
    print(f"  delta={delta}: {row}")

# the floor bounds every matrix of the class, not just the probes
mats = random_elliptic(2000, 0.2, np.random.default_rng(0))
st = NAMED_STENCILS["extended16"]
_, floors = decompose_batch(mats, st)
print(f"\n2000 random matrices, 16 directions: worst coefficient {floors.min():.5f} "
      f">= floor {decomposition_floor(0.2, st):.5f}")
