import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isaacs_fd.errors import ConfigError, UnknownControl
from isaacs_fd.families import constant_family, holder_rough_family, make_family, smooth_periodic_family
from isaacs_fd.grid import Disk
from isaacs_fd.problem import (CoefficientField, ControlSet, EllipticityBounds, IsaacsProblem,
                               affine_function, constant_function, control_table, eval_F, eval_L,
                               gamma_for_chi, quadratic_function)


def test_gamma_for_chi_values():
    # (4 - 3 chi) / (8 - 4 chi)
    assert gamma_for_chi(0.1) == pytest.approx(3.7 / 7.6, abs=1e-15)
    assert gamma_for_chi(0.5) == pytest.approx(2.5 / 6.0, abs=1e-15)
    with pytest.raises(ValueError):
        gamma_for_chi(1.0)


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_gamma_below_half(chi):
    g = gamma_for_chi(chi)
    assert 0.25 < g < 0.5


def test_bounds_and_controls_validation():
    with pytest.raises(ConfigError):
        EllipticityBounds(1.2, 1.0)
    with pytest.raises(ConfigError):
        EllipticityBounds(0.2, -1.0)
    with pytest.raises(ConfigError):
        ControlSet([])
    with pytest.raises(ConfigError):
        ControlSet([1, 1])
    A = ControlSet(["x", "y"])
    assert A.index("y") == 1
    with pytest.raises(UnknownControl, match="'z'"):
        A.index("z")


def test_coefficient_exponent_ranges():
    f = lambda al, be, x: np.zeros(x.shape[:-1])
    with pytest.raises(ConfigError, match="gamma"):
        CoefficientField(f, f, f, f, gamma=0.6, tau=0.5)
    with pytest.raises(ConfigError, match="tau"):
        CoefficientField(f, f, f, f, gamma=0.4, tau=1.0)


def _problem(coeffs, k0=5.0, g=None):
    return IsaacsProblem(Disk(1.0), ControlSet([0, 1]), ControlSet([0]), coeffs,
                         g or constant_function(0.0), EllipticityBounds(0.2, k0))


def test_validate_rejects_leaving_S_delta():
    A, B = ControlSet([0, 1]), ControlSet([0])
    co = constant_family(A, B, a=[[np.diag([1.0, 6.0])], [np.eye(2)]])
    with pytest.raises(ConfigError, match=r"a\(0, 0\) leaves S_delta"):
        _problem(co, k0=10.0).validate()


def test_validate_names_offending_field():
    A, B = ControlSet([0, 1]), ControlSet([0])
    co = constant_family(A, B, a=np.eye(2), c=[[-0.1], [0.0]])
    with pytest.raises(ConfigError, match="negative"):
        _problem(co).validate()
    co = constant_family(A, B, a=np.eye(2), f=[[1.0], [9.0]])
    with pytest.raises(ConfigError, match=r"f\(1, 0\) exceeds k0"):
        _problem(co).validate()
    co = constant_family(A, B, a=np.eye(2))
    g = quadratic_function(np.eye(2) * 20.0)
    with pytest.raises(ConfigError, match="boundary data"):
        _problem(co, g=g).validate()


def test_validate_holder_quotient():
    A, B = ControlSet([0]), ControlSet([0])
    co = holder_rough_family(A, B, a=np.eye(2), theta=0.5, gamma=gamma_for_chi(0.1))
    p = IsaacsProblem(Disk(1.0), A, B, co, constant_function(0.0), EllipticityBounds(0.2, 5.0))
    rep = p.validate()
    # |a(x) - a(y)| <= theta sqrt(2) |x - y|^gamma for the radial power perturbation
    assert 0 < rep["holder_a"] <= 0.5 * np.sqrt(2) + 1e-12


def test_eval_L_and_F_on_quadratic():
    A, B = ControlSet([0, 1]), ControlSet([0, 1])
    a = [[np.eye(2), 2 * np.eye(2)], [np.diag([1.0, 3.0]), np.eye(2)]]
    co = constant_family(A, B, a=a, b=[1.0, 0.0], c=0.5, f=[[0.0, 1.0], [-1.0, 2.0]])
    p = IsaacsProblem(Disk(1.0), A, B, co, constant_function(0.0), EllipticityBounds(0.2, 10.0))
    phi = quadratic_function(np.eye(2), p=[1.0, 0.0], q=1.0)
    x = np.array([[0.2, -0.1]])
    val = phi.value(x)[0]
    # tr(a) + b . (x + p) - c phi
    grad = x[0] + np.array([1.0, 0.0])
    expect = [[np.trace(a[i][j]) + grad[0] - 0.5 * val + [[0.0, 1.0], [-1.0, 2.0]][i][j]
               for j in range(2)] for i in range(2)]
    table = control_table(p, phi, x)[..., 0]
    np.testing.assert_allclose(table, expect, atol=1e-14)
    assert eval_F(p, phi, x)[0] == pytest.approx(max(min(r) for r in expect), abs=1e-14)
    assert eval_L(p, 1, 0, phi, x)[0] == pytest.approx(4.0 + grad[0] - 0.5 * val, abs=1e-14)
    with pytest.raises(UnknownControl):
        eval_L(p, 5, 0, phi, x)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_F_of_constant_function_is_table_saddle(vals):
    # with phi = 0 the operator reduces to max_a min_b f^{ab}
    A, B = ControlSet([0, 1]), ControlSet([0, 1])
    f = np.array(vals).reshape(2, 2)
    co = constant_family(A, B, a=np.eye(2), f=f)
    p = IsaacsProblem(Disk(1.0), A, B, co, constant_function(0.0), EllipticityBounds(0.2, 10.0))
    x = np.zeros((3, 2))
    assert np.allclose(eval_F(p, constant_function(0.0), x), f.min(axis=1).max())


def test_smooth_test_function_consistency():
    for fn in (constant_function(2.0), affine_function([1.0, -2.0], 0.5),
               quadratic_function([[2.0, 0.5], [0.5, -1.0]], [0.3, 0.1])):
        g_err, h_err = fn.consistency_error(np.random.default_rng(0).uniform(-1, 1, (20, 2)))
        assert g_err < 1e-8 and h_err < 1e-8


def test_families_shapes_and_errors():
    A, B = ControlSet([0, 1]), ControlSet(["p", "q", "r"])
    x = np.zeros((4, 5, 2))
    for name in ("constant", "smooth_periodic", "holder_rough"):
        co = make_family(name, A, B, a=np.eye(2))
        assert co.a(1, "q", x).shape == (4, 5, 2, 2)
        assert co.b(1, "q", x).shape == (4, 5, 2)
        assert co.c(0, "r", x).shape == (4, 5)
        assert co.f(0, "p", x).shape == (4, 5)
    with pytest.raises(ConfigError, match="unknown coefficient family"):
        make_family("wild", A, B, a=np.eye(2))
    with pytest.raises(ConfigError, match="expected shape"):
        constant_family(A, B, a=np.ones((3, 3)))
    with pytest.raises(ConfigError, match="amplitude"):
        smooth_periodic_family(A, B, a=np.eye(2), amplitude=1.5)
