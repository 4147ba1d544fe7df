"""Policy iteration for the discrete Isaacs equation and its truncated variants.

The outer loop is Howard iteration on the maximizing control, the inner loop
Howard iteration on the minimizing control for the frozen outer policy.  Each
frozen pair of policies is a linear system whose matrix is an M-matrix.  If
the outer residual stalls, the solver falls back to explicit pseudo-time
marching ``w <- w + tau F_h[w]``, which is monotone under the step bound, and
returns to policy iteration every ``PSEUDO_BLOCK`` steps.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import ConfigError, NoConvergence
from .grid import Grid, GridFunction
from .operators import Scheme, StencilOp, check_truncation
from .problem import IsaacsProblem

logger = logging.getLogger(__name__)

PSEUDO_BLOCK = 500
STALL_LIMIT = 3


@dataclass(frozen=True)
class SolveConfig:
    residual_tol: float = 1e-9
    max_policy_iters: int = 200
    max_pseudo_steps: int = 2_000_000
    pseudo_step_safety: float = 0.9
    linear_tol: float = 1e-12

    def __post_init__(self):
        for name in ("residual_tol", "max_policy_iters", "max_pseudo_steps", "pseudo_step_safety", "linear_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"solver.{name} must be positive, got {getattr(self, name)}")
        if self.pseudo_step_safety > 1:
            raise ConfigError(f"solver.pseudo_step_safety must be at most 1, got {self.pseudo_step_safety}")


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    method_used: str
    wall_time: float
    pseudo_steps: int = 0
    linear_solves: int = 0
    equation: str = "isaacs"
    K: float | None = None
    active_branch: np.ndarray | None = field(default=None, repr=False)
    alpha: np.ndarray | None = field(default=None, repr=False)
    beta: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, with_time=True):
        out = {k: v for k, v in asdict(self).items() if not isinstance(v, np.ndarray) and v is not None}
        out.pop("active_branch", None)
        if not with_time:
            out.pop("wall_time", None)
        return out


class _Equation:
    """Max-min structure of ``F_h`` optionally augmented by the Pucci branch.

    ``side='upper'`` adds ``P_h - K`` as an extra maximizer option,
    ``side='lower'`` adds ``-P_h[-.] + K`` as an extra minimizer option.
    """

    def __init__(self, scheme: Scheme, side=None, K=None):
        self.scheme = scheme
        self.side = side
        self.K = None if side is None else check_truncation(K)
        self.nA = len(scheme.problem.controls_a)
        self.nB = len(scheme.problem.controls_b)

    def inner_values(self, u):
        """Minimizer values per maximizer option, shape ``(n_alpha_options, n)``, and arg-min."""
        s = self.scheme
        vals = s.pair_values(u)
        if self.side == "lower":
            extra = s.Ph_lower(u) + self.K
            vals = np.concatenate([vals, np.broadcast_to(extra, (self.nA, 1, len(extra)))], axis=1)
        beta = np.argmin(vals, axis=1)
        inner = np.take_along_axis(vals, beta[:, None, :], axis=1)[:, 0, :]
        if self.side == "upper":
            inner = np.concatenate([inner, (s.Ph(u) - self.K)[None]], axis=0)
            beta = np.concatenate([beta, np.zeros((1, beta.shape[1]), dtype=beta.dtype)], axis=0)
        return inner, beta

    def residual(self, u):
        inner, beta = self.inner_values(u)
        alpha = np.argmax(inner, axis=0)
        value = np.take_along_axis(inner, alpha[None], axis=0)[0]
        return value, alpha, np.take_along_axis(beta, alpha[None], axis=0)[0]


def _sticky_argmax(values, previous, eps):
    """Arg-max per column, keeping ``previous`` where it is within ``eps`` of the best."""
    best = np.argmax(values, axis=0)
    if previous is None:
        return best
    top = np.take_along_axis(values, best[None], axis=0)[0]
    prev = np.take_along_axis(values, previous[None], axis=0)[0]
    return np.where(prev >= top - eps, previous, best)


class _LinearSystem:
    def __init__(self, grid: Grid):
        self.grid = grid
        pos = np.full(grid.size, -1, dtype=np.int64)
        pos[grid.interior] = np.arange(grid.n_interior)
        self.pos = pos
        n, nd = grid.nbr_plus.shape
        self.rows = np.repeat(np.arange(n), nd)
        self.cols_p = pos[grid.nbr_plus].ravel()
        self.cols_m = pos[grid.nbr_minus].ravel()
        self.bnd_p = grid.nbr_plus.ravel()
        self.bnd_m = grid.nbr_minus.ravel()

    def solve(self, op: StencilOp, u, linear_tol):
        """Solve ``op[u] = 0`` on interior points with boundary values from ``u``."""
        g = self.grid
        n = g.n_interior
        P = op.plus.ravel()
        M = op.minus.ravel()
        ip = self.cols_p >= 0
        im = self.cols_m >= 0
        rows = np.concatenate([self.rows[ip], self.rows[im], np.arange(n)])
        cols = np.concatenate([self.cols_p[ip], self.cols_m[im], np.arange(n)])
        data = np.concatenate([P[ip], M[im], op.center])
        A = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        rhs = -op.const.copy()
        np.subtract.at(rhs, self.rows[~ip], P[~ip] * u[self.bnd_p[~ip]])
        np.subtract.at(rhs, self.rows[~im], M[~im] * u[self.bnd_m[~im]])
        lu = spla.splu(A.tocsc())
        x = lu.solve(rhs)
        scale = np.abs(A).max() * max(1.0, np.abs(x).max()) + np.abs(rhs).max()
        for _ in range(3):
            r = rhs - A @ x
            if np.abs(r).max() <= linear_tol * scale:
                break
            x = x + lu.solve(r)
        out = u.copy()
        out[g.interior] = x
        return out


class _PolicySolver:
    def __init__(self, eq: _Equation, config: SolveConfig):
        self.eq = eq
        self.s = eq.scheme
        self.cfg = config
        self.lin = _LinearSystem(self.s.grid)
        self.linear_solves = 0

    def _assemble(self, alpha, beta, u, frozen_sup):
        s, eq = self.s, self.eq
        n = s.n_interior
        rows = np.arange(n)
        a_idx = np.minimum(alpha, eq.nA - 1)
        b_idx = np.minimum(beta, eq.nB - 1)
        op = StencilOp(s.ops.plus[a_idx, b_idx, rows].copy(), s.ops.minus[a_idx, b_idx, rows].copy(),
                       s.ops.center[a_idx, b_idx, rows].copy(), s.ops.const[a_idx, b_idx, rows].copy())
        if eq.side == "lower":
            sel = beta == eq.nB
            if sel.any():
                inf_op = s.pucci_inf_op(u)
                op.plus[sel] = inf_op.plus[sel]
                op.minus[sel] = inf_op.minus[sel]
                op.center[sel] = inf_op.center[sel]
                op.const[sel] = eq.K
        if eq.side == "upper":
            sel = alpha == eq.nA
            if sel.any():
                op.plus[sel] = frozen_sup.plus[sel]
                op.minus[sel] = frozen_sup.minus[sel]
                op.center[sel] = frozen_sup.center[sel]
                op.const[sel] = -eq.K
        return op

    def _inner(self, u, alpha, frozen_sup, eps):
        """Howard iteration on the minimizer for the frozen maximizer policy."""
        beta = None
        for _ in range(self.cfg.max_policy_iters):
            # minimizer values for the frozen alpha at every point, all beta options
            vals = self._beta_values(u, alpha)
            new_beta = _sticky_argmax(-vals, beta, eps)
            cur = np.take_along_axis(vals, new_beta[None], axis=0)[0]
            if beta is not None and np.array_equal(new_beta, beta):
                if self.eq.side != "lower" or not np.any(new_beta == self.eq.nB):
                    break
                if np.abs(cur).max() <= 0.1 * self.cfg.residual_tol:
                    break
            beta = new_beta
            op = self._assemble(alpha, beta, u, frozen_sup)
            u = self.lin.solve(op, u, self.cfg.linear_tol)
            self.linear_solves += 1
        return u, beta

    def _beta_values(self, u, alpha):
        s, eq = self.s, self.eq
        n = s.n_interior
        rows = np.arange(n)
        vals = s.pair_values(u)  # (nA, nB, n)
        a_idx = np.minimum(alpha, eq.nA - 1)
        v = vals[a_idx, :, rows].T  # (nB, n)
        if eq.side == "lower":
            v = np.concatenate([v, (s.Ph_lower(u) + eq.K)[None]], axis=0)
        if eq.side == "upper":
            # points frozen on the Pucci branch have a single option
            psel = alpha == eq.nA
            if psel.any():
                v = v.copy()
                v[:, psel] = 0.0
        return v

    def run(self, u):
        cfg = self.cfg
        eq = self.eq
        s = self.s
        tol = cfg.residual_tol
        start = time.perf_counter()
        value, _, _ = eq.residual(u)
        res = float(np.abs(value).max()) if len(value) else 0.0
        best = res
        stall = 0
        outer = 0
        pseudo = 0
        used_policy = used_pseudo = False
        alpha = None
        scale = max(1.0, float(s.max_diagonal()) * s.grid.h ** 2)
        eps = 1e-13 * scale
        while res > tol:
            if outer >= cfg.max_policy_iters and pseudo >= cfg.max_pseudo_steps:
                raise NoConvergence(
                    f"residual {res:.3e} above tolerance {tol:.1e} after {outer} policy iterations "
                    f"and {pseudo} pseudo-time steps ({eq.side or 'isaacs'} equation)")
            if stall < STALL_LIMIT and outer < cfg.max_policy_iters:
                used_policy = True
                inner, _ = eq.inner_values(u)
                alpha = _sticky_argmax(inner, alpha, eps)
                frozen_sup = s.pucci_sup_op(u) if eq.side == "upper" else None
                u, _ = self._inner(u, alpha, frozen_sup, eps)
                outer += 1
            else:
                used_pseudo = True
                tau = cfg.pseudo_step_safety / s.max_diagonal()
                steps = min(PSEUDO_BLOCK, cfg.max_pseudo_steps - pseudo)
                if steps <= 0:
                    stall = 0
                    continue
                interior = s.grid.interior
                for _ in range(steps):
                    value, _, _ = eq.residual(u)
                    u = u.copy()
                    u[interior] += tau * value
                    pseudo += 1
                    if np.abs(value).max() <= tol:
                        break
                stall = 0
            value, _, _ = eq.residual(u)
            res = float(np.abs(value).max())
            logger.debug("outer=%d pseudo=%d residual=%.3e", outer, pseudo, res)
            if res < best * (1 - 1e-12):
                best = res
                stall = 0
            else:
                stall += 1
        value, alpha, beta = eq.residual(u)
        method = ("hybrid" if used_policy and used_pseudo
                  else "pseudo-time" if used_pseudo else "policy-iteration")
        branch = None
        if eq.side == "upper":
            branch = np.where(alpha == eq.nA, "P", "F")
        elif eq.side == "lower":
            branch = np.where(beta == eq.nB, "P", "F")
        rep = SolveReport(iterations=outer, final_residual=res, method_used=method,
                          wall_time=time.perf_counter() - start, pseudo_steps=pseudo,
                          linear_solves=self.linear_solves,
                          equation=eq.side or "isaacs", K=eq.K,
                          active_branch=branch, alpha=alpha, beta=beta)
        return u, rep


def _initial(problem: IsaacsProblem, grid: Grid):
    return np.asarray(problem.g.value(grid.points), dtype=float)


def solve_scheme(scheme: Scheme, config: SolveConfig | None = None, side=None, K=None):
    config = SolveConfig() if config is None else config
    eq = _Equation(scheme, side, K)
    u0 = _initial(scheme.problem, scheme.grid)
    u, rep = _PolicySolver(eq, config).run(u0)
    return GridFunction(scheme.grid, u), rep


def solve_isaacs(problem: IsaacsProblem, grid: Grid, config: SolveConfig | None = None,
                 scheme: Scheme | None = None):
    """Grid function with ``F_h[w] = 0`` on interior points and ``w = g`` on the rest."""
    scheme = Scheme(problem, grid) if scheme is None else scheme
    return solve_scheme(scheme, config)


def solve_truncated_pair(problem: IsaacsProblem, grid: Grid, K: float,
                         config: SolveConfig | None = None, scheme: Scheme | None = None):
    """Solutions ``u_K`` of ``max(F_h, P_h - K) = 0`` and ``v_K`` of ``min(F_h, -P_h[-.] + K) = 0``."""
    K = check_truncation(K)
    scheme = Scheme(problem, grid) if scheme is None else scheme
    u, ru = solve_scheme(scheme, config, "upper", K)
    v, rv = solve_scheme(scheme, config, "lower", K)
    return u, v, (ru, rv)


def solution_rows(scheme: Scheme, w: GridFunction, report: SolveReport | None = None):
    """Rows ``(i, j, x, y, value, residual, active branch, alpha, beta)`` for every grid point."""
    g = scheme.grid
    side = report.equation if report is not None and report.equation != "isaacs" else None
    eq = _Equation(scheme, side, report.K if side else None)
    value, alpha, beta = eq.residual(w.values)
    A = scheme.problem.controls_a.labels
    B = scheme.problem.controls_b.labels
    nA, nB = len(A), len(B)
    resid = np.zeros(g.size)
    resid[g.interior] = value
    row_of = np.full(g.size, -1)
    row_of[g.interior] = np.arange(g.n_interior)
    pts = g.points
    for n in range(g.size):
        r = row_of[n]
        if r < 0:
            branch, al, be = "boundary", "", ""
        else:
            pb = (side == "upper" and alpha[r] == nA) or (side == "lower" and beta[r] == nB)
            branch = "P" if pb else "F"
            al = "" if alpha[r] >= nA else A[alpha[r]]
            be = "" if beta[r] >= nB else B[beta[r]]
        yield (*(int(c) for c in g.coords[n]), *(float(v) for v in pts[n]),
               float(w.values[n]), float(resid[n]), branch, al, be)
