"""Built-in coefficient families.

Each family returns a ``CoefficientField`` for given control sets.  Per-pair
parameters may be given once (shared by every pair) or as a nested list
indexed ``[i][j]`` by the positions of ``alpha`` in A and ``beta`` in B.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .problem import CoefficientField, ControlSet


def pair_table(value, nA: int, nB: int, shape=(), name="value"):
    """Broadcast a shared or per-pair parameter to shape ``(nA, nB) + shape``."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == tuple(shape):
        return np.broadcast_to(arr, (nA, nB) + tuple(shape)).copy()
    if arr.shape == (nA, nB) + tuple(shape):
        return arr.copy()
    raise ConfigError(f"{name}: expected shape {tuple(shape)} or {(nA, nB) + tuple(shape)}, got {arr.shape}")


class _Table:
    """Look up per-pair arrays by control label."""

    def __init__(self, controls_a: ControlSet, controls_b: ControlSet):
        self.A = controls_a
        self.B = controls_b

    def __call__(self, table, alpha, beta):
        return table[self.A.index(alpha), self.B.index(beta)]


def _lead(x):
    return np.shape(x)[:-1]


def constant_family(controls_a, controls_b, a, b=None, c=0.0, f=0.0,
                    gamma=0.45, tau=0.5, dim=2) -> CoefficientField:
    nA, nB = len(controls_a), len(controls_b)
    A = pair_table(a, nA, nB, (dim, dim), "a")
    Bv = pair_table(np.zeros(dim) if b is None else b, nA, nB, (dim,), "b")
    C = pair_table(c, nA, nB, (), "c")
    Fv = pair_table(f, nA, nB, (), "f")
    look = _Table(controls_a, controls_b)
    return CoefficientField(
        a=lambda al, be, x: np.broadcast_to(look(A, al, be), _lead(x) + (dim, dim)).copy(),
        b=lambda al, be, x: np.broadcast_to(look(Bv, al, be), _lead(x) + (dim,)).copy(),
        c=lambda al, be, x: np.full(_lead(x), look(C, al, be)),
        f=lambda al, be, x: np.full(_lead(x), look(Fv, al, be)),
        gamma=gamma, tau=tau, dim=dim)


def smooth_periodic_family(controls_a, controls_b, a, b=None, c=0.0, f=0.0, amplitude=0.2,
                           wavenumber=(1.0, 1.0), gamma=0.45, tau=0.5, dim=2) -> CoefficientField:
    """Constant tables modulated by ``1 + amplitude sin(2 pi k.x)``.

    ``a`` is scaled by the modulation, so any stencil decomposition of the
    base matrices carries over; ``b`` and ``f`` are multiplied by the
    modulation and ``c`` by ``1 + amplitude cos(2 pi k.x)``.
    """
    if not 0.0 <= amplitude < 1.0:
        raise ConfigError(f"amplitude must lie in [0, 1), got {amplitude}")
    k = np.asarray(wavenumber, dtype=float)
    base = constant_family(controls_a, controls_b, a, b, c, f, gamma, tau, dim)

    def mod(x):
        return 1.0 + amplitude * np.sin(2 * np.pi * (np.asarray(x) @ k))

    def cmod(x):
        return 1.0 + amplitude * np.cos(2 * np.pi * (np.asarray(x) @ k))

    return CoefficientField(
        a=lambda al, be, x: base.a(al, be, x) * mod(x)[..., None, None],
        b=lambda al, be, x: base.b(al, be, x) * mod(x)[..., None],
        c=lambda al, be, x: base.c(al, be, x) * cmod(x),
        f=lambda al, be, x: base.f(al, be, x) * mod(x),
        gamma=gamma, tau=tau, dim=dim)


def holder_rough_family(controls_a, controls_b, a, b=None, c=0.0, f=0.0, theta=0.5, center=(0.0, 0.0),
                        f_rough=0.0, c_rough=0.0, b_rough=0.0,
                        gamma=0.45, tau=0.5, dim=2) -> CoefficientField:
    """Fractional-power radial perturbations around ``center``.

    With ``r = |x - center|``::

        a = a0 (1 + theta r**gamma)
        b = b0 (1 + b_rough r**tau)
        c = c0 + c_rough r**tau
        f = f0 + f_rough r**tau
    """
    if theta < 0 or c_rough < 0:
        raise ConfigError("theta and c_rough must be nonnegative")
    x0 = np.asarray(center, dtype=float)
    base = constant_family(controls_a, controls_b, a, b, c, f, gamma, tau, dim)

    def r(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - x0, axis=-1)

    return CoefficientField(
        a=lambda al, be, x: base.a(al, be, x) * (1.0 + theta * r(x) ** gamma)[..., None, None],
        b=lambda al, be, x: base.b(al, be, x) * (1.0 + b_rough * r(x) ** tau)[..., None],
        c=lambda al, be, x: base.c(al, be, x) + c_rough * r(x) ** tau,
        f=lambda al, be, x: base.f(al, be, x) + f_rough * r(x) ** tau,
        gamma=gamma, tau=tau, dim=dim)


FAMILIES = {
    "constant": constant_family,
    "smooth_periodic": smooth_periodic_family,
    "holder_rough": holder_rough_family,
}


def make_family(name, controls_a, controls_b, **params) -> CoefficientField:
    try:
        fn = FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown coefficient family {name!r}; choose from {sorted(FAMILIES)}") from None
    try:
        return fn(controls_a, controls_b, **params)
    except TypeError as exc:
        raise ConfigError(f"coefficient family {name!r}: {exc}") from None
