"""Finite-difference operators on a classified grid.

Every linear operator of the scheme is stored in stencil form: at interior
point ``n`` its value is ::

    sum_k plus[n, k] u(x + h l_k) + minus[n, k] u(x - h l_k) + center[n] u(x) + const[n]

Monotonicity of the scheme is the sign pattern ``plus, minus >= 0``,
``center <= -(sum plus + sum minus)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import decompose_batch, decompose_drift, pucci_box
from .errors import ConfigError, MissingNeighbor
from .grid import Grid, GridFunction
from .problem import EllipticityBounds, IsaacsProblem


@dataclass(frozen=True)
class PucciParams:
    delta_hat: float
    k1: float

    def __post_init__(self):
        if self.delta_hat <= 0:
            raise ConfigError(f"delta_hat must be positive, got {self.delta_hat}")
        if self.k1 < 0:
            raise ConfigError(f"k1 must be nonnegative, got {self.k1}")

    def check(self, bounds: EllipticityBounds):
        if not self.delta_hat < bounds.delta:
            raise ConfigError(f"delta_hat={self.delta_hat} must be below delta={bounds.delta}")
        if self.k1 < bounds.k0:
            raise ConfigError(f"k1={self.k1} must be at least k0={bounds.k0}")
        return self

    @classmethod
    def default(cls, bounds: EllipticityBounds) -> "PucciParams":
        return cls(delta_hat=bounds.delta / 2.0, k1=max(bounds.k0, 1.0) + 1.0)


def check_truncation(K: float) -> float:
    if not K >= 1.0:
        raise ConfigError(f"truncation level K must be at least 1, got {K}")
    return float(K)


def _neighbor(u: GridFunction, x, l, sign):
    grid = u.grid
    n = grid.locate(x)
    target = grid.coords[n] + sign * np.asarray(l, dtype=np.int64)
    m = int(grid._lookup(target))
    if m < 0:
        raise MissingNeighbor(f"{tuple(target)} (from {tuple(grid.coords[n])}) is not a grid point")
    return u.values[n], u.values[m]


def delta_h(u: GridFunction, x, l, h=None) -> float:
    """Forward difference ``(u(x + h l) - u(x)) / h``."""
    h = u.grid.h if h is None else h
    u0, up = _neighbor(u, x, l, +1)
    return (up - u0) / h


def delta2_h(u: GridFunction, x, l, h=None) -> float:
    """Second difference ``(u(x + h l) - 2 u(x) + u(x - h l)) / h^2``."""
    h = u.grid.h if h is None else h
    u0, up = _neighbor(u, x, l, +1)
    _, um = _neighbor(u, x, l, -1)
    return (up - 2.0 * u0 + um) / (h * h)


def eval_P(M, p, u, params: PucciParams):
    """Maximal Pucci value over ``S_delta_hat`` plus ``k1 |p| - k1 u``.

    Vectorized over leading axes of ``M`` (``(..., d, d)``), ``p`` and ``u``.
    """
    M = np.asarray(M, dtype=float)
    lam = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    dh = params.delta_hat
    second = (np.maximum(lam, 0.0) / dh - np.maximum(-lam, 0.0) * dh).sum(axis=-1)
    top = second + params.k1 * np.linalg.norm(p, axis=-1)
    x = params.k1 * np.asarray(u, dtype=float)
    out = top - x
    # keep P(M, p, 0) <= P(M, p, u) + k1 u_+ in floating point, at a cost of one ulp
    low = (x > 0) & (out + x < top)
    return np.where(low, np.nextafter(out, np.inf), out)


def eval_P0(M, params: PucciParams):
    return eval_P(M, np.zeros(np.shape(M)[:-1]), np.zeros(np.shape(M)[:-2]), params)


@dataclass
class StencilOp:
    plus: np.ndarray
    minus: np.ndarray
    center: np.ndarray
    const: np.ndarray

    def take(self, *index):
        return StencilOp(self.plus[index], self.minus[index], self.center[index], self.const[index])


class Scheme:
    """The discrete operator ``F_h`` of one problem on one grid.

    Decompositions of ``a^{ab}`` at every interior point are computed once
    here and reused by every evaluation.
    """

    def __init__(self, problem: IsaacsProblem, grid: Grid, pucci: PucciParams | None = None,
                 delta1: float = 0.0):
        if grid.stencil.dim != problem.dim:
            raise ConfigError("stencil and problem dimensions differ")
        self.problem = problem
        self.grid = grid
        self.pucci = pucci if pucci is not None else PucciParams.default(problem.bounds)
        self.delta1 = delta1
        st = grid.stencil
        h = grid.h
        x = grid.interior_points
        nA, nB = len(problem.controls_a), len(problem.controls_b)
        n, nd = grid.n_interior, len(st)
        self.pairs = problem.pairs()
        plus = np.empty((nA, nB, n, nd))
        minus = np.empty((nA, nB, n, nd))
        center = np.empty((nA, nB, n))
        const = np.empty((nA, nB, n))
        self.a_k = np.empty((nA, nB, n, nd))
        self.b_k = np.empty((nA, nB, n, nd))
        self.c = np.empty((nA, nB, n))
        self.decomposition_residual = np.empty((nA, nB, n))
        L = st.array.astype(float)
        co = problem.coeffs
        for i, al in enumerate(problem.controls_a):
            for j, be in enumerate(problem.controls_b):
                a = co.a(al, be, x)
                ak, _ = decompose_batch(
                    a, st, delta1,
                    where=lambda k, al=al, be=be: f"grid point {tuple(x[k])}, control pair ({al!r}, {be!r})")
                bk = decompose_drift(co.b(al, be, x), st)
                c = np.broadcast_to(co.c(al, be, x), (n,))
                f = np.broadcast_to(co.f(al, be, x), (n,))
                self.a_k[i, j] = ak
                self.b_k[i, j] = bk
                self.c[i, j] = c
                self.decomposition_residual[i, j] = np.abs(
                    np.einsum("nk,ki,kj->nij", ak, L, L) - a).max(axis=(1, 2))
                plus[i, j] = ak / h ** 2 + np.maximum(bk, 0.0) / h
                minus[i, j] = ak / h ** 2 + np.maximum(-bk, 0.0) / h
                center[i, j] = -(2.0 * ak / h ** 2 + np.abs(bk) / h).sum(axis=1) - c
                const[i, j] = f
        self.ops = StencilOp(plus, minus, center, const)
        self.box_lo, self.box_hi = pucci_box(self.pucci.delta_hat, st)
        self._basis = np.array([st.basis_index(i) for i in range(st.dim)])

    # -- evaluation helpers ---------------------------------------------
    @property
    def n_interior(self) -> int:
        return self.grid.n_interior

    def _vals(self, u):
        return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)

    def apply(self, op: StencilOp, u, rows=None):
        """Value of a stencil operator (leading axes broadcast) at interior points."""
        u = self._vals(u)
        g = self.grid
        if rows is None:
            up, um, uc = u[g.nbr_plus], u[g.nbr_minus], u[g.interior]
        else:
            up, um, uc = u[g.nbr_plus[rows]], u[g.nbr_minus[rows]], u[g.interior[rows]]
        return ((op.plus * up).sum(axis=-1) + (op.minus * um).sum(axis=-1)
                + op.center * uc + op.const)

    def second_differences(self, u):
        u = self._vals(u)
        g = self.grid
        return (u[g.nbr_plus] - 2.0 * u[g.interior][:, None] + u[g.nbr_minus]) / g.h ** 2

    def pair_values(self, u):
        """``L_h^{ab} u + f^{ab}`` at every interior point, shape ``(|A|, |B|, n)``."""
        return self.apply(self.ops, u)

    def Fh(self, u):
        """``F_h[u]`` at interior points with first-index arg-max/arg-min controls."""
        vals = self.pair_values(u)
        beta = np.argmin(vals, axis=1)  # (nA, n)
        inner = np.take_along_axis(vals, beta[:, None, :], axis=1)[:, 0, :]
        alpha = np.argmax(inner, axis=0)
        value = np.take_along_axis(inner, alpha[None, :], axis=0)[0]
        return value, alpha, np.take_along_axis(beta, alpha[None, :], axis=0)[0]

    def pucci_sup_op(self, u) -> StencilOp:
        """Linear operator attaining the sup in ``P_h[u]`` at each interior point."""
        u = self._vals(u)
        g = self.grid
        h = g.h
        k1 = self.pucci.k1
        d2 = self.second_differences(u)
        q = np.where(d2 > 0.0, self.box_hi, self.box_lo)
        plus = q / h ** 2
        minus = q / h ** 2
        center = -2.0 * q.sum(axis=1) / h ** 2 - k1
        uc = u[g.interior]
        fwd = (u[g.nbr_plus[:, self._basis]] - uc[:, None]) / h
        bwd = (u[g.nbr_minus[:, self._basis]] - uc[:, None]) / h
        gain = np.maximum(np.maximum(fwd, bwd), 0.0)
        norm = np.linalg.norm(gain, axis=1)
        w = np.divide(k1 * gain, norm[:, None], out=np.zeros_like(gain), where=norm[:, None] > 0)
        use_fwd = fwd >= bwd
        plus[:, self._basis] += np.where(use_fwd, w, 0.0) / h
        minus[:, self._basis] += np.where(use_fwd, 0.0, w) / h
        center = center - w.sum(axis=1) / h
        return StencilOp(plus, minus, center, np.zeros(len(center)))

    def Ph(self, u):
        """Discrete Pucci operator, closed form."""
        u = self._vals(u)
        g = self.grid
        h = g.h
        k1 = self.pucci.k1
        d2 = self.second_differences(u)
        second = (self.box_hi * np.maximum(d2, 0.0) - self.box_lo * np.maximum(-d2, 0.0)).sum(axis=1)
        uc = u[g.interior]
        fwd = (u[g.nbr_plus[:, self._basis]] - uc[:, None]) / h
        bwd = (u[g.nbr_minus[:, self._basis]] - uc[:, None]) / h
        gain = np.maximum(np.maximum(fwd, bwd), 0.0)
        return second + k1 * np.linalg.norm(gain, axis=1) - k1 * uc

    def Ph_lower(self, v):
        """``-P_h[-v]``."""
        return -self.Ph(-self._vals(v))

    def pucci_inf_op(self, v) -> StencilOp:
        """Linear operator attaining the inf in ``-P_h[-v]``."""
        return self.pucci_sup_op(-self._vals(v))

    def truncated_upper(self, u, K):
        K = check_truncation(K)
        return np.maximum(self.Fh(u)[0], self.Ph(u) - K)

    def truncated_lower(self, v, K):
        K = check_truncation(K)
        return np.minimum(self.Fh(v)[0], self.Ph_lower(v) + K)

    def max_diagonal(self) -> float:
        """Largest ``|center|`` any option of the scheme can produce (pseudo-time bound)."""
        h = self.grid.h
        pairs = float(np.max(-self.ops.center))
        k1 = self.pucci.k1
        pucci = 2.0 * self.box_hi.sum() / h ** 2 + k1 * np.sqrt(self.grid.stencil.dim) / h + k1
        return max(pairs, pucci)


def _interior_row(scheme: Scheme, x) -> int:
    return scheme.grid.interior_position(scheme.grid.locate(x))


def eval_Fh(problem: IsaacsProblem, grid: Grid, u: GridFunction, x, cache: Scheme | None = None):
    """``F_h[u](x)`` and the arg-max/arg-min control labels."""
    scheme = cache if cache is not None else Scheme(problem, grid)
    row = _interior_row(scheme, x)
    vals = scheme.apply(scheme.ops.take(slice(None), slice(None), row), u, rows=row)
    j = np.argmin(vals, axis=1)
    inner = vals[np.arange(vals.shape[0]), j]
    i = int(np.argmax(inner))
    return float(inner[i]), problem.controls_a.labels[i], problem.controls_b.labels[int(j[i])]


def eval_Ph(u: GridFunction, x, scheme: Scheme) -> float:
    return float(scheme.Ph(u)[_interior_row(scheme, x)])


def eval_truncated_upper(u: GridFunction, x, K, scheme: Scheme) -> float:
    return float(scheme.truncated_upper(u, K)[_interior_row(scheme, x)])


def eval_truncated_lower(v: GridFunction, x, K, scheme: Scheme) -> float:
    return float(scheme.truncated_lower(v, K)[_interior_row(scheme, x)])


def residual_rows(scheme: Scheme, u, K=None, side="upper"):
    """Rows ``(point, F_h, P_h, active branch, argmax alpha, argmin beta)``."""
    fh, ia, ib = scheme.Fh(u)
    if side == "upper":
        ph = scheme.Ph(u)
        active = (ph - K > fh) if K is not None else np.zeros(len(fh), bool)
    else:
        ph = scheme.Ph_lower(u)
        active = (ph + K < fh) if K is not None else np.zeros(len(fh), bool)
    A = scheme.problem.controls_a.labels
    B = scheme.problem.controls_b.labels
    for row, n in enumerate(scheme.grid.interior):
        yield (int(n), float(fh[row]), float(ph[row]), "P" if active[row] else "F",
               A[ia[row]], B[ib[row]])
