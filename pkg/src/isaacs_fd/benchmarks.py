"""Shipped benchmark problems and named exact solutions."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .families import constant_family, holder_rough_family
from .grid import Disk
from .harness import make_bellman_case, make_isaacs_saddle_case
from .problem import (ControlSet, EllipticityBounds, IsaacsProblem, SmoothTestFunction, affine_function,
                      constant_function, gamma_for_chi, quadratic_function)


def sine_product() -> SmoothTestFunction:
    """``sin(pi x) sin(pi y)``."""
    pi = np.pi

    def value(x):
        return np.sin(pi * x[..., 0]) * np.sin(pi * x[..., 1])

    def gradient(x):
        s0, s1 = np.sin(pi * x[..., 0]), np.sin(pi * x[..., 1])
        c0, c1 = np.cos(pi * x[..., 0]), np.cos(pi * x[..., 1])
        return pi * np.stack([c0 * s1, s0 * c1], -1)

    def hessian(x):
        s0, s1 = np.sin(pi * x[..., 0]), np.sin(pi * x[..., 1])
        c0, c1 = np.cos(pi * x[..., 0]), np.cos(pi * x[..., 1])
        d = -s0 * s1
        o = c0 * c1
        return pi ** 2 * np.stack([np.stack([d, o], -1), np.stack([o, d], -1)], -2)

    return SmoothTestFunction(value, gradient, hessian, "sine_product")


def exp_sum() -> SmoothTestFunction:
    """``exp(x + y)``."""

    def value(x):
        return np.exp(x[..., 0] + x[..., 1])

    def gradient(x):
        return np.repeat(value(x)[..., None], 2, axis=-1)

    def hessian(x):
        return value(x)[..., None, None] * np.ones((2, 2))

    return SmoothTestFunction(value, gradient, hessian, "exp_sum")


def exact_function(name, **params) -> SmoothTestFunction:
    if name == "zero":
        return constant_function(0.0)
    if name == "constant":
        return constant_function(params.get("value", 0.0))
    if name == "sine_product":
        return sine_product()
    if name == "exp_sum":
        return exp_sum()
    if name == "affine":
        return affine_function(params.get("p", (0.0, 0.0)), params.get("q", 0.0))
    if name == "quadratic":
        return quadratic_function(params["M"], params.get("p"), params.get("q", 0.0))
    raise ConfigError(f"unknown function {name!r}; choose from affine, constant, exp_sum, quadratic, "
                      f"sine_product, zero")


SADDLE_A = [[[[1.3, 0.2], [0.2, 0.8]], [[1.2, -0.3], [-0.3, 0.9]]],
            [[[0.8, 0.1], [0.1, 1.4]], [[0.9, -0.2], [-0.2, 1.1]]]]
SADDLE_B = [[[0.5, -0.5], [1.0, 0.0]], [[0.0, 1.0], [-0.5, 0.5]]]
SADDLE_C = [[0.1, 0.3], [0.2, 0.0]]

ROUGH_A = [[[[1.3, 0.2], [0.2, 0.7]], [[1.3, -0.2], [-0.2, 0.7]]],
           [[[0.7, 0.2], [0.2, 1.3]], [[0.7, -0.2], [-0.2, 1.3]]]]
ROUGH_B = [[[0.5, 0.0], [0.0, 0.5]], [[-0.5, 0.0], [0.0, -0.5]]]


def bellman_disk_case(delta=0.2, k0=25.0):
    """``a = I``, ``b = 0``, ``c = 0`` on the unit disk with ``u* = sin(pi x) sin(pi y)``."""
    one = ControlSet([0])
    co = constant_family(one, one, np.eye(2), gamma=gamma_for_chi(0.1), tau=0.5)
    return make_bellman_case(sine_product(), co, Disk(1.0), EllipticityBounds(delta, k0), "bellman-disk")


def saddle_case(delta=0.2, k0=50.0):
    """Two-by-two controls, distinct ``a`` per pair, upwinded drift, ``u* = exp(x + y)``."""
    A = ControlSet([-1, 1])
    B = ControlSet([-1, 1])
    co = constant_family(A, B, SADDLE_A, SADDLE_B, SADDLE_C, gamma=gamma_for_chi(0.1), tau=0.5)
    return make_isaacs_saddle_case(exp_sum(), co, Disk(1.0), EllipticityBounds(delta, k0), A, B,
                                   name="saddle-disk")


def rough_problem(forcing=10.0, chi=0.1, tau=0.5, delta=0.2, k0=35.0):
    """Hoelder-rough Isaacs problem on the unit disk with ``g = 0``.

    The right-hand side changes sign across a circle around ``(0.2, 0.1)``, so
    the solution is convex in one region and concave in the other and both
    truncations stay active for a wide range of ``K``.
    """
    A = ControlSet([-1, 1])
    B = ControlSet([-1, 1])
    F = float(forcing)
    co = holder_rough_family(A, B, a=ROUGH_A, b=ROUGH_B, c=0.5,
                             f=[[-F + 1, -F - 1], [-F + 1, -F - 1]], f_rough=2 * F,
                             theta=0.5, c_rough=0.5, b_rough=1.0, center=(0.2, 0.1),
                             gamma=gamma_for_chi(chi), tau=tau)
    return IsaacsProblem(Disk(1.0), A, B, co, constant_function(0.0), EllipticityBounds(delta, k0),
                         "holder-rough")


def trivial_problem(delta=0.2, k0=1.0):
    one = ControlSet([0])
    co = constant_family(one, one, np.eye(2))
    return IsaacsProblem(Disk(1.0), one, one, co, constant_function(0.0), EllipticityBounds(delta, k0), "trivial")


BENCHMARKS = {
    "bellman_disk": bellman_disk_case,
    "saddle_disk": saddle_case,
}
PROBLEMS = {
    "holder_rough": rough_problem,
    "trivial": trivial_problem,
}
