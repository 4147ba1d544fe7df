import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isaacs_fd.errors import ConfigError, EmptyInterior, UnclassifiedPoint
from isaacs_fd.grid import (AXIS_STENCIL, DEFAULT_STENCIL, EXTENDED8_STENCIL, EXTENDED16_STENCIL, Box, Disk,
                            Ellipse, GridFunction, RoundedBox, Stencil, build_grid, distance_to_boundary,
                            get_stencil, grid_header, grid_rows)


def _boundary_samples(domain, n=200_000):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    if isinstance(domain, Ellipse):
        a, b = domain.semi_axes
        return domain.center + np.stack([a * np.cos(t), b * np.sin(t)], -1)
    if isinstance(domain, RoundedBox):
        r = domain.corner
        lo, hi = domain.lo + r, domain.hi - r
        s = np.linspace(0, 1, n // 8)
        pts = [np.stack([lo[0] + s * (hi[0] - lo[0]), np.full_like(s, domain.lo[1])], -1),
               np.stack([lo[0] + s * (hi[0] - lo[0]), np.full_like(s, domain.hi[1])], -1),
               np.stack([np.full_like(s, domain.lo[0]), lo[1] + s * (hi[1] - lo[1])], -1),
               np.stack([np.full_like(s, domain.hi[0]), lo[1] + s * (hi[1] - lo[1])], -1)]
        arc = r * np.stack([np.cos(t[::4]), np.sin(t[::4])], -1)
        for cx, sx in ((lo[0], -1), (hi[0], 1)):
            for cy, sy in ((lo[1], -1), (hi[1], 1)):
                # only the outward quarter of each corner circle is boundary
                keep = (arc[:, 0] * sx >= 0) & (arc[:, 1] * sy >= 0)
                pts.append(np.array([cx, cy]) + arc[keep])
        return np.concatenate(pts)
    raise TypeError(domain)


@pytest.mark.parametrize("domain", [Ellipse((1.0, 0.6)), Ellipse((0.5, 1.2), (0.3, -0.2)),
                                    RoundedBox((0.0, 0.0), (1.0, 0.8), 0.2)])
def test_signed_distance_matches_boundary_sampling(domain):
    rng = np.random.default_rng(3)
    lo, hi = (np.asarray(v) for v in domain.bounding_box)
    x = rng.uniform(lo - 0.3, hi + 0.3, size=(300, 2))
    bnd = _boundary_samples(domain)
    brute = np.min(np.linalg.norm(x[:, None, :] - bnd[None, :, :], axis=-1), axis=1)
    sd = domain.signed_distance(x)
    np.testing.assert_allclose(np.abs(sd), brute, atol=2e-4)
    assert np.all((sd > 0) == domain.inside(x))


def test_disk_and_box_distance():
    d = Disk(2.0, (1.0, 0.0))
    assert d.signed_distance(np.array([1.0, 0.0])) == 2.0
    assert d.signed_distance(np.array([4.0, 0.0])) == -1.0
    b = Box((0, 0), (1, 2))
    np.testing.assert_allclose(b.signed_distance(np.array([[0.5, 0.5], [2.0, 3.0], [0.5, -1.0]])),
                               [0.5, -np.sqrt(2.0), -1.0])
    assert d.max_norm() == 3.0


def test_ellipse_special_points():
    e = Ellipse((1.0, 0.6))
    np.testing.assert_allclose(e.signed_distance(np.array([[0.0, 0.0], [0.0, 0.5], [2.0, 0.0]])),
                               [0.6, 0.1, -1.0], atol=1e-14)


def test_stencil_validation():
    with pytest.raises(ConfigError, match="basis"):
        Stencil([(1, 1), (1, -1)])
    with pytest.raises(ConfigError, match="distinct"):
        Stencil([(1, 0), (0, 1), (1, 0)])
    with pytest.raises(ConfigError, match="both l and -l"):
        Stencil([(1, 0), (0, 1), (-1, 0)])
    with pytest.raises(ConfigError, match="nonzero"):
        Stencil([(1, 0), (0, 1), (0, 0)])
    assert len(EXTENDED8_STENCIL) == 8 and len(EXTENDED16_STENCIL) == 16
    assert DEFAULT_STENCIL.ball_radius == pytest.approx(np.sqrt(2))
    assert get_stencil("axis") is AXIS_STENCIL
    with pytest.raises(ConfigError):
        get_stencil("nope")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([1 / 4, 1 / 5, 1 / 8, 1 / 11, 1 / 16]),
       st.sampled_from(["disk", "ellipse", "rounded"]),
       st.sampled_from(["axis", "default", "extended8"]))
def test_classification_invariants(h, kind, stencil_name):
    domain = {"disk": Disk(1.0), "ellipse": Ellipse((1.0, 0.7)),
              "rounded": RoundedBox((-1, -1), (1, 1), 0.3)}[kind]
    st_ = get_stencil(stencil_name)
    g = build_grid(domain, st_, h)
    # every grid point is inside the domain, every interior point sees all neighbours
    assert np.all(g.rho > 0)
    assert np.all(g.nbr_plus >= 0) and np.all(g.nbr_minus >= 0)
    assert np.all(g.rho[g.interior] > h * st_.ball_radius)
    # interior and boundary partition the grid
    assert len(np.intersect1d(g.interior, g.boundary)) == 0
    assert len(g.interior) + len(g.boundary) == g.size
    # points are in lexicographic order of their integer coordinates
    c = g.coords
    assert np.all(np.lexsort(c.T[::-1]) == np.arange(len(c)))
    # every lattice point of the domain is present
    lo, hi = (np.asarray(v) for v in domain.bounding_box)
    ii, jj = np.meshgrid(np.arange(np.floor(lo[0] / h) - 1, np.ceil(hi[0] / h) + 2),
                         np.arange(np.floor(lo[1] / h) - 1, np.ceil(hi[1] / h) + 2), indexing="ij")
    lattice = np.stack([ii.ravel(), jj.ravel()], -1) * h
    assert np.sum(domain.signed_distance(lattice) > 0) == g.size


def test_empty_interior_and_lookup():
    with pytest.raises(EmptyInterior):
        build_grid(Disk(0.1), DEFAULT_STENCIL, 0.25)
    g = build_grid(Disk(1.0), DEFAULT_STENCIL, 0.25)
    n = g.locate([0.25, -0.5])
    assert tuple(g.coords[n]) == (1, -2)
    assert distance_to_boundary(g, [0.0, 0.0]) == 1.0
    with pytest.raises(UnclassifiedPoint):
        g.locate([0.1, 0.0])
    with pytest.raises(UnclassifiedPoint):
        g.locate([1.25, 0.0])
    rows = list(grid_rows(g))
    assert len(rows) == g.size and len(rows[0]) == len(grid_header(2))
    w = GridFunction.from_function(g, lambda x: x[..., 0])
    assert w.at([0.5, 0.25]) == 0.5
    assert (-w).at([0.5, 0.25]) == -0.5
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(3))
