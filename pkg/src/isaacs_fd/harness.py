"""Manufactured solutions, barrier and mollifier utilities, and the rate studies."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import BarrierInvalid, ConfigError, OrderingViolation, SaddleValueNonzero, SupportEscapesRegion
from .grid import Disk, Grid, GridFunction, build_grid, get_stencil
from .operators import Scheme
from .problem import (CoefficientField, ControlSet, EllipticityBounds, IsaacsProblem,
                      SmoothTestFunction, eval_F, eval_L, sample_domain)
from .solver import SolveConfig, solve_isaacs, solve_truncated_pair

logger = logging.getLogger(__name__)

CONSTRUCTION_TOL = 1e-12


# -- manufactured solutions ---------------------------------------------

@dataclass(frozen=True)
class ManufacturedCase:
    exact: SmoothTestFunction
    problem: IsaacsProblem
    family: str

    def construction_error(self, n_probe: int = 100, seed: int = 0) -> float:
        x = sample_domain(self.problem.domain, n_probe, np.random.default_rng(seed))
        return float(np.abs(eval_F(self.problem, self.exact, x)).max())

    def check(self, n_probe: int = 100, seed: int = 0):
        err = self.construction_error(n_probe, seed)
        scale = max(1.0, float(np.abs(self.exact.value(
            sample_domain(self.problem.domain, n_probe, np.random.default_rng(seed)))).max()))
        if err > CONSTRUCTION_TOL * scale:
            raise ConfigError(f"manufactured case {self.problem.name!r}: F[u*] = {err:.3e} at probe points")
        return err


def make_bellman_case(exact: SmoothTestFunction, coeffs: CoefficientField, domain,
                      bounds: EllipticityBounds, name="bellman") -> ManufacturedCase:
    """Single-control case whose right-hand side makes ``exact`` a solution.

    Any ``f`` already present in ``coeffs`` is replaced.
    """
    A = ControlSet([0])
    B = ControlSet([0])
    draft = IsaacsProblem(domain, A, B, coeffs, exact, bounds, name)

    def f(al, be, x):
        return -eval_L(draft, 0, 0, exact, x)

    problem = IsaacsProblem(domain, A, B, _with_f(coeffs, f), exact, bounds, name)
    case = ManufacturedCase(exact, problem, "bellman-single")
    case.check()
    return case


def saddle_value(table) -> float:
    """``max_i min_j table[i, j]``."""
    table = np.asarray(table, dtype=float)
    return float(table.min(axis=1).max())


def make_isaacs_saddle_case(exact: SmoothTestFunction, coeffs: CoefficientField, domain,
                            bounds: EllipticityBounds, controls_a, controls_b, table=None,
                            name="isaacs-saddle") -> ManufacturedCase:
    """Two-player case with ``f = -L u* + table[alpha, beta]``.

    ``table`` defaults to ``alpha - beta`` (labels must then be numeric).  Its
    max-min value must vanish, so that ``F[u*] = 0`` identically.
    """
    A = ControlSet(controls_a)
    B = ControlSet(controls_b)
    if table is None:
        table = np.array([[float(al) - float(be) for be in B] for al in A])
    table = np.asarray(table, dtype=float)
    if table.shape != (len(A), len(B)):
        raise ConfigError(f"saddle table must have shape {(len(A), len(B))}, got {table.shape}")
    val = saddle_value(table)
    if val != 0.0:
        raise SaddleValueNonzero(f"saddle table has max-min value {val}, expected 0")
    draft = IsaacsProblem(domain, A, B, coeffs, exact, bounds, name)

    def f(al, be, x):
        return -eval_L(draft, al, be, exact, x) + table[A.index(al), B.index(be)]

    problem = IsaacsProblem(domain, A, B, _with_f(coeffs, f), exact, bounds, name)
    case = ManufacturedCase(exact, problem, "isaacs-saddle")
    case.check()
    return case


def _with_f(coeffs: CoefficientField, f) -> CoefficientField:
    return CoefficientField(coeffs.a, coeffs.b, coeffs.c, f, coeffs.gamma, coeffs.tau, coeffs.dim)


# -- rate fitting --------------------------------------------------------

@dataclass
class RateReport:
    abscissae: list
    errors: list
    fitted_exponent: float
    fit_residual: float
    kind: str = "h"
    drop_threshold: float = 0.0
    n_fitted: int = 0
    details: list = field(default_factory=list)
    solutions: dict = field(default_factory=dict, repr=False)

    def summary(self):
        def clean(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {"kind": self.kind, "abscissae": [float(a) for a in self.abscissae],
                "errors": [float(e) for e in self.errors],
                "fitted_exponent": clean(self.fitted_exponent), "fit_residual": clean(self.fit_residual),
                "drop_threshold": self.drop_threshold, "n_fitted": self.n_fitted}


def fit_rate(abscissae, errors, kind="h", drop_below=0.0) -> RateReport:
    """Least-squares slope of ``log error`` against ``log abscissa``.

    For ``kind='h'`` the exponent is the slope (errors shrink with ``h``);
    for ``kind='K'`` it is minus the slope.  Errors below ``drop_below`` are
    left out of the fit; with fewer than two points left the exponent is nan.
    """
    x = np.asarray(abscissae, dtype=float)
    e = np.asarray(errors, dtype=float)
    if x.shape != e.shape:
        raise ValueError("abscissae and errors differ in length")
    steps = np.diff(x)
    if kind == "h" and not np.all(steps < 0):
        raise ValueError("h abscissae must be strictly decreasing")
    if kind == "K" and not np.all(steps > 0):
        raise ValueError("K abscissae must be strictly increasing")
    keep = e > drop_below
    if keep.sum() < 2:
        slope, resid = np.nan, np.nan
    else:
        lx, le = np.log(x[keep]), np.log(e[keep])
        slope, icpt = np.polyfit(lx, le, 1)
        resid = float(np.sqrt(np.mean((le - (slope * lx + icpt)) ** 2)))
    exponent = slope if kind == "h" else -slope
    return RateReport(list(map(float, x)), list(map(float, e)), float(exponent), float(resid),
                      kind, float(drop_below), int(keep.sum()))


def _map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_grid_rate(case: ManufacturedCase, hs, config: SolveConfig | None = None, stencil="default",
                  threads=1) -> RateReport:
    """Sup-norm error of ``w_h`` against ``u*`` over ``G_(h)`` for each ``h``."""
    config = SolveConfig() if config is None else config
    case.check()
    st = get_stencil(stencil)
    problem = case.problem

    def one(h):
        grid = build_grid(problem.domain, st, h)
        w, rep = solve_isaacs(problem, grid, config)
        err = float(np.abs(w.values - case.exact.value(grid.points)).max())
        logger.info("h=%g error=%.3e iterations=%d", h, err, rep.iterations)
        return err, {"h": float(h), "error": err, "n_interior": grid.n_interior,
                     "iterations": rep.iterations, "final_residual": rep.final_residual,
                     "method_used": rep.method_used}, rep

    out = _map(one, list(hs), threads)
    report = fit_rate(hs, [o[0] for o in out], "h", 100 * config.residual_tol)
    report.details = [o[1] for o in out]
    report.solutions = {"reports": [o[2] for o in out]}
    return report


def run_sandwich(problem: IsaacsProblem, grid: Grid, Ks, config: SolveConfig | None = None,
                 scheme: Scheme | None = None, threads=1, keep_solutions=False) -> RateReport:
    """Gap ``sup |u_K - v_K|`` over the K sequence, with ordering checks against ``w``."""
    config = SolveConfig() if config is None else config
    Ks = [float(K) for K in Ks]
    if Ks[0] < 1 or any(b <= a for a, b in zip(Ks, Ks[1:])):
        raise ConfigError(f"K sequence must be increasing and start at 1 or more: {Ks}")
    scheme = Scheme(problem, grid) if scheme is None else scheme
    w, wrep = solve_isaacs(problem, grid, config, scheme=scheme)
    tol = 10 * config.residual_tol

    def one(K):
        return solve_truncated_pair(problem, grid, K, config, scheme=scheme)

    out = _map(one, Ks, threads)
    gaps, details = [], []
    for K, (u, v, (ru, rv)) in zip(Ks, out):
        below = w.values - u.values
        above = v.values - w.values
        for viol, what in ((below, "w <= u_K"), (above, "v_K <= w")):
            k = int(np.argmax(viol))
            if viol[k] > tol:
                raise OrderingViolation(
                    f"{what} fails by {viol[k]:.3e} at grid point {tuple(grid.coords[k])} for K={K:g}")
        gap = float(np.abs(u.values - v.values).max())
        gaps.append(gap)
        details.append({"K": K, "gap": gap,
                        "ordering_violation": max(float(below.max()), float(above.max()), 0.0),
                        "sup_u_minus_w": float(np.abs(u.values - w.values).max()),
                        "sup_w_minus_v": float(np.abs(w.values - v.values).max()),
                        "iterations_u": ru.iterations, "iterations_v": rv.iterations,
                        "residual_u": ru.final_residual, "residual_v": rv.final_residual,
                        "method_u": ru.method_used, "method_v": rv.method_used,
                        "p_active_u": int(np.sum(ru.active_branch == "P")),
                        "p_active_v": int(np.sum(rv.active_branch == "P"))})
    report = fit_rate(Ks, gaps, "K", 100 * config.residual_tol)
    report.details = details
    if keep_solutions:
        report.solutions = {"w": w, "u": [o[0] for o in out], "v": [o[1] for o in out],
                            "reports": [o[2] for o in out], "w_report": wrep}
    return report


def monotonicity_in_K(us, vs):
    """Largest violations of ``u_K`` nonincreasing and ``v_K`` nondecreasing in K."""
    du = max((float(np.max(b.values - a.values)) for a, b in zip(us, us[1:])), default=0.0)
    dv = max((float(np.max(a.values - b.values)) for a, b in zip(vs, vs[1:])), default=0.0)
    return max(du, 0.0), max(dv, 0.0)


def boundary_constant(grid: Grid, g, *functions) -> float:
    """Smallest ``N`` with ``sum_f |f - g| <= N rho`` at all grid points."""
    gv = g.value(grid.points) if isinstance(g, SmoothTestFunction) else np.asarray(g)
    dev = sum(np.abs((f.values if isinstance(f, GridFunction) else f) - gv) for f in functions)
    rho = grid.rho
    pos = rho > 0
    if np.any(dev[~pos] > 0):
        return np.inf
    return float(np.max(dev[pos] / rho[pos])) if pos.any() else 0.0


def fit_boundary_constant(problem: IsaacsProblem, hs, K, config: SolveConfig | None = None,
                          stencil="default"):
    """Fitted ``N`` in ``|u_K - g| + |v_K - g| <= N rho`` for each ``h``."""
    st = get_stencil(stencil)
    out = []
    for h in hs:
        grid = build_grid(problem.domain, st, h)
        u, v, _ = solve_truncated_pair(problem, grid, K, config)
        out.append(boundary_constant(grid, problem.g, u, v))
    return out


# -- barrier -----------------------------------------------------------

def _sinhc(z):
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z * z / 6.0, np.sinh(safe) / safe)


@dataclass(frozen=True)
class Barrier:
    """``psi(x) = cosh(mu R) - cosh(mu |x|)``."""

    mu: float
    R: float

    def value(self, x):
        r = np.linalg.norm(x, axis=-1)
        return np.cosh(self.mu * self.R) - np.cosh(self.mu * r)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return -(self.mu ** 2 * _sinhc(self.mu * r))[..., None] * x

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        r = np.linalg.norm(x, axis=-1)
        mu = self.mu
        ch = np.cosh(mu * r)
        sc = mu * mu * _sinhc(mu * r)  # mu sinh(mu r) / r
        safe = np.where(r > 0, r, 1.0)
        n = x / safe[..., None]
        nn = np.einsum("...i,...j->...ij", n, n)
        nn = np.where((r > 0)[..., None, None], nn, 0.0)
        eye = np.eye(d)
        return -(mu * mu * ch)[..., None, None] * nn - sc[..., None, None] * (eye - nn)

    def as_test_function(self) -> SmoothTestFunction:
        return SmoothTestFunction(self.value, self.gradient, self.hessian, f"barrier(mu={self.mu}, R={self.R})")


def barrier_samples(domain, delta, k1, samples, seed=0):
    """Sample ``(x, a, b)``: points of the domain (plus the origin), rotated
    extreme matrices of ``S_delta`` (eigenvalues ``delta`` or ``1/delta``)
    and drifts on the radius-``k1`` sphere."""
    rng = np.random.default_rng(seed)
    x = sample_domain(domain, samples, rng)
    x[0] = 0.0
    th = rng.uniform(0, np.pi, samples)
    c, s = np.cos(th), np.sin(th)
    Rm = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    # eigenvalue pairs from the corners {delta, 1/delta}^2
    lam = np.where(rng.random((samples, 2)) < 0.5, delta, 1 / delta)
    a = np.einsum("nij,nj,nkj->nik", Rm, lam, Rm)
    phi = rng.uniform(0, 2 * np.pi, samples)
    b = k1 * np.stack([np.cos(phi), np.sin(phi)], -1)
    return x, a, b


def verify_barrier(barrier: Barrier, delta, k1, samples=10_000, domain=None, seed=0, raise_on_fail=True):
    """Largest ``a_ij D_ij psi + b_i D_i psi`` over the sample set.

    Raises ``BarrierInvalid`` if it exceeds ``-1 + 1e-9`` or if ``psi < 1``
    at a sampled point.
    """
    domain = Disk(1.0) if domain is None else domain
    x, a, b = barrier_samples(domain, delta, k1, samples, seed)
    expr = (np.einsum("nij,nij->n", a, barrier.hessian(x))
            + np.einsum("ni,ni->n", b, barrier.gradient(x)))
    slack = float(expr.max())
    low = float(barrier.value(x).min())
    if raise_on_fail and (slack > -1 + 1e-9 or low < 1):
        k = int(np.argmax(expr))
        raise BarrierInvalid(
            f"barrier mu={barrier.mu}, R={barrier.R}: max slack {slack:.6g} at x={tuple(x[k])} "
            f"(need <= -1 + 1e-9), min psi {low:.6g}")
    return slack


def auto_tune_barrier(domain, delta, k1, samples=10_000, seed=0, mu0=1.0, max_doublings=30):
    """``R = 2 (1 + sup |x|)``; ``mu`` doubled from ``mu0`` until verification passes."""
    R = 2.0 * (1.0 + domain.max_norm())
    mu = float(mu0)
    for _ in range(max_doublings):
        b = Barrier(mu, R)
        if verify_barrier(b, delta, k1, samples, domain, seed, raise_on_fail=False) <= -1 + 1e-9 \
                and b.value(np.zeros((1, domain.dim))).min() >= 1:
            return b
        mu *= 2.0
    raise BarrierInvalid(f"no mu up to {mu} passes verification for delta={delta}, k1={k1}")


# -- mollifier -------------------------------------------------------------

def bump(y):
    """Unnormalized radial bump ``exp(-1 / (1 - |y|^2))`` on the unit ball."""
    r2 = np.sum(np.asarray(y, dtype=float) ** 2, axis=-1)
    inside = r2 < 1.0
    out = np.zeros_like(r2)
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def mollifier_kernel(spacing, eps, dim=2):
    """Weights of ``zeta_eps`` on the lattice, normalized to sum 1."""
    m = int(np.ceil(eps / spacing))
    ax = np.arange(-m, m + 1) * spacing
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    k = bump(np.stack(grids, -1) / eps)
    return k / k.sum(), m


@dataclass
class LatticeSamples:
    """Values on the regular lattice ``origin + spacing * index``."""

    values: np.ndarray
    origin: np.ndarray
    spacing: float

    def coords(self):
        axes = [self.origin[i] + self.spacing * np.arange(n) for i, n in enumerate(self.values.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1)

    @classmethod
    def sample(cls, fn, lo, hi, spacing):
        lo = np.asarray(lo, dtype=float)
        n = np.floor((np.asarray(hi, dtype=float) - lo) / spacing + 1e-9).astype(int) + 1
        obj = cls(np.zeros(tuple(n)), lo, float(spacing))
        obj.values = np.asarray(fn(obj.coords()), dtype=float)
        return obj


def mollify(samples: LatticeSamples, eps, index=None):
    """``u * zeta_eps`` on the sub-lattice where the kernel support fits.

    Returns a ``LatticeSamples`` over that sub-lattice, or, when ``index``
    (integer lattice positions, shape ``(..., d)``) is given, the values at
    those positions; ``SupportEscapesRegion`` if any of them is within
    ``eps`` of the sampled region's edge.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    kernel, m = mollifier_kernel(samples.spacing, eps, samples.values.ndim)
    shape = np.array(samples.values.shape)
    if np.any(shape <= 2 * m):
        raise SupportEscapesRegion(f"sampled region of shape {tuple(shape)} is narrower than 2 eps = {2 * eps}")
    if index is None:
        vals = fftconvolve(samples.values, kernel, mode="valid")
        return LatticeSamples(vals, samples.origin + m * samples.spacing, samples.spacing)
    index = np.asarray(index, dtype=np.int64)
    if np.any(index < m) or np.any(index >= shape - m):
        raise SupportEscapesRegion(f"evaluation point closer than eps={eps} to the sampled region's edge")
    flat = index.reshape(-1, index.shape[-1])
    out = np.empty(len(flat))
    for n, p in enumerate(flat):
        window = samples.values[tuple(slice(c - m, c + m + 1) for c in p)]
        out[n] = np.sum(window * kernel)  # kernel is symmetric
    return out.reshape(index.shape[:-1])


def mollifier_error(fn, eps, window=0.2, spacing=None, per_radius=16):
    """``sup |u - u^(eps)|`` over the box ``|x|_inf <= window``."""
    spacing = eps / per_radius if spacing is None else spacing
    reach = window + eps + 2 * spacing
    s = LatticeSamples.sample(fn, (-reach, -reach), (reach, reach), spacing)
    moll = mollify(s, eps)
    x = moll.coords()
    sel = np.all(np.abs(x) <= window + 1e-12, axis=-1)
    return float(np.max(np.abs(moll.values - fn(x))[sel]))


# -- interior seminorm -------------------------------------------------------

def discrete_gradient(w: GridFunction):
    """Central differences along the basis directions at interior points."""
    g = w.grid
    st = g.stencil
    cols = [st.basis_index(i) for i in range(st.dim)]
    u = w.values
    return (u[g.nbr_plus[:, cols]] - u[g.nbr_minus[:, cols]]) / (2 * g.h)


def holder_seminorm(points, grads, chi, chunk=2048):
    """``max |grad(x) - grad(y)| / |x - y|^chi`` over pairs of distinct points."""
    n = len(points)
    best = 0.0
    for s in range(0, n, chunk):
        p = points[s:s + chunk]
        q = grads[s:s + chunk]
        dist = np.linalg.norm(p[:, None, :] - points[None, :, :], axis=-1)
        dg = np.linalg.norm(q[:, None, :] - grads[None, :, :], axis=-1)
        ok = dist > 0
        if ok.any():
            best = max(best, float(np.max(dg[ok] / dist[ok] ** chi)))
    return best


def interior_seminorm_diagnostic(w: GridFunction, eps_seq, chi=0.1):
    """Rows ``(eps, n_points, seminorm, seminorm * eps^(1+chi))`` over ``G_eps``."""
    g = w.grid
    grads = discrete_gradient(w)
    pts = g.interior_points
    rho = g.rho[g.interior]
    rows = []
    for eps in eps_seq:
        sel = rho > eps
        semi = holder_seminorm(pts[sel], grads[sel], chi) if sel.sum() > 1 else 0.0
        rows.append({"eps": float(eps), "n_points": int(sel.sum()), "seminorm": semi,
                     "product": semi * float(eps) ** (1 + chi)})
    return rows
