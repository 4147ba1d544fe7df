"""Continuous problem data and the operators ``L^{ab}`` and ``F``.

Coefficient callables are vectorized: each takes ``(alpha, beta, x)`` with
``x`` of shape ``(..., d)`` and returns arrays with the same leading shape
(``(..., d, d)`` for ``a``, ``(..., d)`` for ``b``, ``(...)`` for ``c`` and
``f``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .errors import ConfigError, UnknownControl


def gamma_for_chi(chi: float) -> float:
    """Hoelder exponent of ``a`` paired with the regularity exponent ``chi``.

    ``gamma = (4 - 3 chi) / (8 - 4 chi)``, which stays below 1/2 for
    ``chi`` in (0, 1).
    """
    if not 0.0 < chi < 1.0:
        raise ValueError(f"chi must lie in (0, 1), got {chi}")
    return (4.0 - 3.0 * chi) / (8.0 - 4.0 * chi)


@dataclass(frozen=True)
class EllipticityBounds:
    delta: float
    k0: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.k0 < 0.0:
            raise ConfigError(f"k0 must be nonnegative, got {self.k0}")


@dataclass(frozen=True)
class ControlSet:
    labels: tuple

    def __init__(self, labels: Sequence[Hashable]):
        labels = tuple(labels)
        if not labels:
            raise ConfigError("control set must be nonempty")
        if len(set(labels)) != len(labels):
            raise ConfigError(f"control labels must be unique: {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownControl(f"unknown control {label!r}; known: {self.labels}") from None


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients ``a, b, c, f`` of the family of linear operators.

    ``gamma`` is the declared Hoelder exponent of ``a``; ``tau`` the exponent
    of the power modulus ``t**tau`` shared by ``b``, ``c`` and ``f``.
    """

    a: Callable
    b: Callable
    c: Callable
    f: Callable
    gamma: float
    tau: float
    dim: int = 2

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise ConfigError(f"gamma must lie in (0, 1/2), got {self.gamma}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class SmoothTestFunction:
    """A function with analytically supplied gradient and Hessian."""

    value: Callable
    gradient: Callable
    hessian: Callable
    name: str = ""

    def consistency_error(self, points, step=1e-4):
        """Largest mismatch between the supplied derivatives and central differences.

        Returns ``(gradient_error, hessian_error)``; both are ``O(step**2)``
        for a consistent triple.
        """
        x = np.atleast_2d(np.asarray(points, dtype=float))
        d = x.shape[-1]
        eye = np.eye(d)
        g_err = 0.0
        h_err = 0.0
        for i in range(d):
            e = step * eye[i]
            fd_grad = (self.value(x + e) - self.value(x - e)) / (2 * step)
            g_err = max(g_err, float(np.max(np.abs(fd_grad - self.gradient(x)[..., i]))))
            fd_hess = (self.gradient(x + e) - self.gradient(x - e)) / (2 * step)
            h_err = max(h_err, float(np.max(np.abs(fd_hess - self.hessian(x)[..., i, :]))))
        return g_err, h_err


def constant_function(kappa: float, dim: int = 2) -> SmoothTestFunction:
    return SmoothTestFunction(
        value=lambda x: np.full(np.shape(x)[:-1], float(kappa)),
        gradient=lambda x: np.zeros(np.shape(x)),
        hessian=lambda x: np.zeros(np.shape(x)[:-1] + (dim, dim)),
        name=f"constant({kappa})",
    )


def quadratic_function(M, p=None, q: float = 0.0) -> SmoothTestFunction:
    """``phi(x) = x.M.x / 2 + p.x + q`` for symmetric ``M``."""
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    p = np.zeros(M.shape[0]) if p is None else np.asarray(p, dtype=float)
    return SmoothTestFunction(
        value=lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, M, x) + x @ p + q,
        gradient=lambda x: x @ M + p,
        hessian=lambda x: np.broadcast_to(M, np.shape(x)[:-1] + M.shape).copy(),
        name="quadratic",
    )


def affine_function(p, q: float = 0.0) -> SmoothTestFunction:
    p = np.asarray(p, dtype=float)
    return quadratic_function(np.zeros((p.size, p.size)), p, q)


@dataclass(frozen=True)
class IsaacsProblem:
    domain: Any
    controls_a: ControlSet
    controls_b: ControlSet
    coeffs: CoefficientField
    g: SmoothTestFunction
    bounds: EllipticityBounds
    name: str = field(default="", compare=False)

    @property
    def dim(self) -> int:
        return self.coeffs.dim

    def pairs(self):
        """All control pairs in (A-order, B-order) lexicographic order."""
        return [(al, be) for al in self.controls_a for be in self.controls_b]

    def with_coeffs(self, **changes) -> "IsaacsProblem":
        return replace(self, coeffs=replace(self.coeffs, **changes))

    def check_control(self, alpha, beta):
        self.controls_a.index(alpha)
        self.controls_b.index(beta)

    def validate(self, points=None, seed: int = 0, n_probe: int = 200):
        """Spot-check the standing assumptions on probe points.

        Raises ``ConfigError`` naming the violated quantity. Returns a dict of
        the worst observed values.
        """
        rng = np.random.default_rng(seed)
        if points is None:
            points = sample_domain(self.domain, n_probe, rng)
        report = check_coefficients(self.coeffs, self.bounds, self.pairs(), points, rng)
        report.update(check_boundary_data(self.g, self.bounds.k0, points, rng))
        return report


def sample_domain(domain, n, rng):
    """Rejection-sample ``n`` points of the domain."""
    lo, hi = (np.asarray(v, dtype=float) for v in domain.bounding_box)
    out = []
    count = 0
    while count < n:
        x = rng.uniform(lo, hi, size=(4 * n, lo.size))
        x = x[domain.inside(x)]
        out.append(x)
        count += len(x)
    return np.concatenate(out)[:n]


def probe_directions(d: int, n: int = 32) -> np.ndarray:
    if d == 2:
        th = np.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((n, d))
    return np.concatenate([np.eye(d), v / np.linalg.norm(v, axis=1, keepdims=True)])


def check_coefficients(coeffs: CoefficientField, bounds: EllipticityBounds, pairs, points, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = coeffs.dim
    xi = probe_directions(d)
    delta, k0 = bounds.delta, bounds.k0
    slack = 1e-12 * max(1.0, k0)
    # Hoelder probes: partners at random offsets on several scales
    scales = 10.0 ** rng.uniform(-4, -1, size=len(x))
    offs = rng.standard_normal(x.shape)
    offs *= (scales / np.linalg.norm(offs, axis=1))[:, None]
    y = x + offs
    worst = {"ellipticity_low": np.inf, "ellipticity_high": -np.inf, "sup_a": 0.0,
             "sup_b": 0.0, "sup_c": 0.0, "sup_f": 0.0, "holder_a": 0.0, "min_c": np.inf}
    for al, be in pairs:
        a = coeffs.a(al, be, x)
        if not np.allclose(a, np.swapaxes(a, -1, -2), atol=1e-14):
            raise ConfigError(f"a({al!r}, {be!r}) is not symmetric")
        quad = np.einsum("ki,nij,kj->nk", xi, a, xi)
        lo, hi = float(quad.min()), float(quad.max())
        worst["ellipticity_low"] = min(worst["ellipticity_low"], lo)
        worst["ellipticity_high"] = max(worst["ellipticity_high"], hi)
        if lo < delta - slack or hi > 1.0 / delta + slack:
            raise ConfigError(
                f"a({al!r}, {be!r}) leaves S_delta (delta={delta}): "
                f"quadratic form range [{lo:.6g}, {hi:.6g}]")
        b = coeffs.b(al, be, x)
        c = coeffs.c(al, be, x)
        f = coeffs.f(al, be, x)
        vals = {"sup_a": np.linalg.norm(a, axis=(-2, -1)).max(),
                "sup_b": np.linalg.norm(b, axis=-1).max(),
                "sup_c": np.abs(c).max(), "sup_f": np.abs(f).max()}
        for key, v in vals.items():
            worst[key] = max(worst[key], float(v))
            if v > k0 + slack:
                raise ConfigError(f"{key[4:]}({al!r}, {be!r}) exceeds k0={k0}: {float(v):.6g}")
        worst["min_c"] = min(worst["min_c"], float(c.min()))
        if c.min() < 0.0:
            raise ConfigError(f"c({al!r}, {be!r}) is negative somewhere: {float(c.min()):.6g}")
        da = np.linalg.norm(coeffs.a(al, be, y) - a, axis=(-2, -1))
        q = float(np.max(da / np.linalg.norm(y - x, axis=1) ** coeffs.gamma))
        worst["holder_a"] = max(worst["holder_a"], q)
        if q > k0 + slack:
            raise ConfigError(f"Hoelder quotient of a({al!r}, {be!r}) exceeds k0={k0}: {q:.6g}")
    return worst


def check_boundary_data(g: SmoothTestFunction, k0: float, points, rng=None):
    """Probe ``|g|``, ``|Dg|`` and difference quotients of ``Dg`` against ``k0``."""
    rng = np.random.default_rng(1) if rng is None else rng
    x = np.atleast_2d(np.asarray(points, dtype=float))
    offs = rng.standard_normal(x.shape) * 1e-2
    gv = float(np.abs(g.value(x)).max())
    gg = float(np.linalg.norm(g.gradient(x), axis=-1).max())
    lip = float(np.max(np.linalg.norm(g.gradient(x + offs) - g.gradient(x), axis=-1)
                       / np.linalg.norm(offs, axis=-1)))
    slack = 1e-12 * max(1.0, k0)
    for name, v in (("|g|", gv), ("|Dg|", gg), ("Lip(Dg)", lip)):
        if v > k0 + slack:
            raise ConfigError(f"boundary data: {name} = {v:.6g} exceeds k0={k0}")
    return {"sup_g": gv, "sup_grad_g": gg, "lip_grad_g": lip}


def eval_L(problem: IsaacsProblem, alpha, beta, phi: SmoothTestFunction, x):
    """``a_ij D_ij phi + b_i D_i phi - c phi`` at ``x`` (vectorized over leading axes)."""
    problem.check_control(alpha, beta)
    x = np.asarray(x, dtype=float)
    co = problem.coeffs
    a = co.a(alpha, beta, x)
    b = co.b(alpha, beta, x)
    c = co.c(alpha, beta, x)
    return (np.einsum("...ij,...ij->...", a, phi.hessian(x))
            + np.einsum("...i,...i->...", b, phi.gradient(x))
            - c * phi.value(x))


def control_table(problem: IsaacsProblem, phi: SmoothTestFunction, x):
    """Values ``L^{ab} phi + f^{ab}`` with shape ``(|A|, |B|) + leading``."""
    x = np.asarray(x, dtype=float)
    rows = []
    for al in problem.controls_a:
        rows.append([eval_L(problem, al, be, phi, x) + problem.coeffs.f(al, be, x)
                     for be in problem.controls_b])
    return np.asarray(rows)


def eval_F(problem: IsaacsProblem, phi: SmoothTestFunction, x):
    """``max_a min_b [L^{ab} phi + f^{ab}]`` at ``x``."""
    table = control_table(problem, phi, x)
    return table.min(axis=1).max(axis=0)
