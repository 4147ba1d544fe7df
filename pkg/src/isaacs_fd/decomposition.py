"""Nonnegative directional decompositions ``a = sum_k a_k l_k l_k^T`` over a stencil.

Among all decompositions the one maximizing ``min_k a_k`` is returned, ties
broken by the smallest Euclidean norm.  The max-min linear program has
``d(d+1)/2`` equality constraints, so its vertices are enumerated exactly:
a vertex fixes ``t = min_k a_k`` together with ``d(d+1)/2 - 1`` free
coefficients, all other coefficients sitting at ``t``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DecompositionInfeasible
from .grid import Stencil


@dataclass(frozen=True)
class DirectionalDecomposition:
    a_k: np.ndarray
    b_k: np.ndarray
    floor: float

    def reconstruct(self, stencil: Stencil):
        L = stencil.array.astype(float)
        a = np.einsum("k,ki,kj->ij", self.a_k, L, L)
        b = self.b_k @ L
        return a, b


def _sym_index(d):
    return [(i, j) for i in range(d) for j in range(i, d)]


@lru_cache(maxsize=None)
def _lp_tables(stencil: Stencil):
    L = stencil.array.astype(float)
    d = stencil.dim
    idx = _sym_index(d)
    E = np.array([[l[i] * l[j] for l in L] for i, j in idx])  # (m, n)
    m, n = E.shape
    col_t = E.sum(axis=1)
    bases, inverses = [], []
    for S in itertools.combinations(range(n), m - 1):
        B = np.column_stack([col_t, E[:, S]])
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        bases.append(S)
        inverses.append(np.linalg.inv(B))
    return E, np.array(bases, dtype=np.int64).reshape(len(bases), m - 1), np.array(inverses)


def _rhs(mats, d):
    return np.stack([mats[..., i, j] for i, j in _sym_index(d)], axis=-1)


def max_min_vertex(mats, stencil: Stencil):
    """Best LP vertex for a batch of symmetric matrices.

    Returns ``(t, a)`` with ``t`` the maximal attainable ``min_k a_k`` and
    ``a`` (shape ``(N, n)``) a vertex attaining it.  ``t`` may be negative,
    meaning no nonnegative decomposition exists.
    """
    mats = np.asarray(mats, dtype=float)
    E, bases, inverses = _lp_tables(stencil)
    m, n = E.shape
    rhs = _rhs(mats, stencil.dim)  # (N, m)
    N = rhs.shape[0]
    scale = np.maximum(np.abs(rhs).max(axis=1), 1e-300)
    if len(bases) == 0:
        return _deficient(E, rhs, scale)
    sol = np.einsum("bij,nj->bni", inverses, rhs)  # (nb, N, m)
    t = sol[..., 0]
    s = sol[..., 1:]
    feasible = np.all(s >= -1e-13 * scale[None, :, None], axis=-1)
    score = np.where(feasible, t, -np.inf)
    best = np.argmax(score, axis=0)  # first basis among ties
    rows = np.arange(N)
    t_best = t[best, rows]
    a = np.repeat(t_best[:, None], n, axis=1)
    a[rows[:, None], bases[best]] += np.maximum(s[best, rows], 0.0)
    return t_best, a


def _deficient(E, rhs, scale):
    # directions do not span the symmetric matrices: feasible only on the span
    if np.linalg.matrix_rank(E) < E.shape[1]:
        raise NotImplementedError("stencil directions give linearly dependent l l^T")
    a, *_ = np.linalg.lstsq(E, rhs.T, rcond=None)
    a = a.T
    miss = np.abs(a @ E.T - rhs).max(axis=1)
    t = np.where(miss <= 1e-13 * scale, a.min(axis=1), -np.inf)
    return t, a


def _min_norm_on_face(mats, stencil: Stencil, t, iters=100):
    # dual semismooth Newton for  min |a|^2/2  s.t.  E a = r, a >= t
    E, _, _ = _lp_tables(stencil)
    m, n = E.shape
    r = _rhs(mats, stencil.dim)
    N = len(r)
    scale = np.maximum(np.abs(r).max(axis=1), 1e-300)
    reg = 1e-13 * np.abs(E).max() ** 2
    lam = np.zeros((N, m))

    def dual(lam):
        z = lam @ E
        hz = np.where(z >= t[:, None], 0.5 * z * z, t[:, None] * z - 0.5 * t[:, None] ** 2)
        return hz.sum(axis=1) - np.einsum("nm,nm->n", r, lam)

    for _ in range(iters):
        z = lam @ E
        a = np.maximum(z, t[:, None])
        grad = a @ E.T - r
        if np.all(np.abs(grad).max(axis=1) <= 1e-15 * scale):
            break
        D = (z > t[:, None]).astype(float)
        H = np.einsum("mk,nk,jk->nmj", E, D, E) + reg * np.eye(m)
        step = -np.linalg.solve(H, grad[..., None])[..., 0]
        psi0 = dual(lam)
        slope = np.einsum("nm,nm->n", grad, step)
        alpha = np.ones(N)
        for _ in range(40):
            trial = lam + alpha[:, None] * step
            ok = dual(trial) <= psi0 + 1e-4 * alpha * slope + 1e-15 * np.abs(psi0)
            if ok.all():
                break
            alpha = np.where(ok, alpha, 0.5 * alpha)
        lam = lam + alpha[:, None] * step
    return np.maximum(lam @ E, t[:, None])


def decompose_batch(mats, stencil: Stencil, delta1: float = 0.0, where=None):
    """Decompose every matrix of ``mats`` (shape ``(N, d, d)``).

    Returns ``(coeffs, floors)``; ``floors[n]`` is the achieved minimum
    coefficient.  Raises ``DecompositionInfeasible`` for the first matrix
    whose best attainable minimum is below ``delta1``; ``where`` optionally
    labels matrices in that message.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.shape[0] == 0:
        return np.zeros((0, len(stencil))), np.zeros(0)
    flat = mats.reshape(len(mats), -1)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    umats = uniq.reshape((-1,) + mats.shape[1:])
    t, vertex = max_min_vertex(umats, stencil)
    rhs = _rhs(umats, stencil.dim)
    scale = np.maximum(np.abs(rhs).max(axis=1), 1e-300)
    bad = t < delta1 - 1e-13 * scale
    if bad.any():
        k = int(np.flatnonzero(bad[inverse])[0])
        u = inverse[k]
        label = f" at {where(k)}" if where is not None else ""
        why = ("it is outside the span of the direction matrices" if np.isinf(t[u])
               else f"best attainable minimum coefficient is {t[u]:.6g}")
        raise DecompositionInfeasible(
            f"matrix {np.array2string(umats[u], precision=6)}{label} has no decomposition on "
            f"stencil {stencil.vectors} with floor {delta1:g}; {why}", matrix=umats[u], best=float(t[u]))
    t_face = t
    E, bases, _ = _lp_tables(stencil)
    if len(bases) == 0:  # unique solution, nothing to tie-break
        return vertex[inverse], vertex.min(axis=1)[inverse]
    coeffs = _min_norm_on_face(umats, stencil, t_face)
    resid = np.abs(coeffs @ E.T - rhs).max(axis=1)
    lo = np.maximum(t_face, delta1) - 1e-13 * scale
    good = (resid <= 1e-12 * scale) & (coeffs.min(axis=1) >= lo)
    coeffs = np.where(good[:, None], coeffs, vertex)
    floors = coeffs.min(axis=1)
    return coeffs[inverse], floors[inverse]


def decompose_matrix(a, stencil: Stencil, delta1: float = 0.0) -> DirectionalDecomposition:
    a = np.asarray(a, dtype=float)
    if not np.allclose(a, a.T, atol=1e-14 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    coeffs, floors = decompose_batch(a[None], stencil, delta1)
    return DirectionalDecomposition(coeffs[0], np.zeros(len(stencil)), float(floors[0]))


def decompose_drift(b, stencil: Stencil) -> np.ndarray:
    """Expand ``b`` on the basis vectors of the stencil (zero on the others)."""
    b = np.asarray(b, dtype=float)
    out = np.zeros(b.shape[:-1] + (len(stencil),))
    for i in range(stencil.dim):
        out[..., stencil.basis_index(i)] = b[..., i]
    return out


def decompose(a, b, stencil: Stencil, delta1: float = 0.0) -> DirectionalDecomposition:
    dec = decompose_matrix(a, stencil, delta1)
    return DirectionalDecomposition(dec.a_k, decompose_drift(b, stencil), dec.floor)


def random_elliptic(n, delta, rng, dim=2):
    """Symmetric matrices with eigenvalues uniform in ``[delta, 1/delta]`` and uniform orientation."""
    lam = rng.uniform(delta, 1.0 / delta, size=(n, dim))
    if dim == 2:
        th = rng.uniform(0, np.pi, n)
        c, s = np.cos(th), np.sin(th)
        Q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    else:
        Q, _ = np.linalg.qr(rng.standard_normal((n, dim, dim)))
    return np.einsum("nij,nj,nkj->nik", Q, lam, Q)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def extreme_probes(delta: float, n_angles: int = 64):
    """Rotations of ``diag(delta, 1/delta)`` at angles ``pi j / n_angles``."""
    D = np.diag([delta, 1.0 / delta])
    return np.array([rotation(np.pi * j / n_angles) @ D @ rotation(np.pi * j / n_angles).T
                     for j in range(n_angles)])


def decomposition_floor(delta: float, stencil: Stencil, n_angles: int = 64) -> float:
    """Smallest max-min value over the extreme probe matrices; 0 if any is infeasible."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if stencil.dim != 2:
        raise NotImplementedError("probe set is defined for d = 2")
    t, _ = max_min_vertex(extreme_probes(delta, n_angles), stencil)
    return float(max(t.min(), 0.0))


def pucci_box(delta_hat: float, stencil: Stencil):
    """Per-direction coefficient range ``[lo_k, hi_k]`` for the discrete Pucci operator.

    Uses the max-min decomposition ``c`` of the identity: ``lo = delta_hat c``
    and ``hi = c / delta_hat``, so that the box reproduces ``delta_hat I`` and
    ``I / delta_hat`` exactly.
    """
    d = stencil.dim
    c = decompose_matrix(np.eye(d), stencil).a_k
    return delta_hat * c, c / delta_hat


def audit_rows(grid, pairs, coeffs_by_pair, resid_by_pair):
    """Rows ``(point, alpha, beta, a_1..a_n, residual, floor)`` for a decomposition dump."""
    for p, (al, be) in enumerate(pairs):
        A = coeffs_by_pair[p]
        R = resid_by_pair[p]
        for row, n in enumerate(grid.interior):
            yield (int(n), al, be, *(float(v) for v in A[row]), float(R[row]), float(A[row].min()))
