"""Domains, lattice stencils and the interior/boundary classification of ``G ∩ hZ^d``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, EmptyInterior, MissingNeighbor, UnclassifiedPoint


class Domain:
    """Bounded open set described by its signed distance ``rho``.

    ``signed_distance`` is positive inside and equals ``dist(x, G^c)`` there.
    Subclasses set ``bounding_box`` and ``diameter``.
    """

    bounding_box: tuple
    diameter: float

    def signed_distance(self, x) -> np.ndarray:
        raise NotImplementedError

    def inside(self, x) -> np.ndarray:
        return self.signed_distance(x) > 0.0

    @property
    def dim(self) -> int:
        return len(self.bounding_box[0])

    def max_norm(self) -> float:
        """``sup |x|`` over the closure, from the bounding box corners."""
        lo, hi = (np.asarray(v, dtype=float) for v in self.bounding_box)
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))


class Disk(Domain):
    def __init__(self, radius: float = 1.0, center=(0.0, 0.0)):
        if radius <= 0:
            raise ConfigError(f"disk radius must be positive, got {radius}")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.bounding_box = (tuple(self.center - radius), tuple(self.center + radius))
        self.diameter = 2.0 * self.radius

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def max_norm(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def __repr__(self):
        return f"Disk(radius={self.radius}, center={tuple(self.center)})"


class Box(Domain):
    """Axis-aligned open box; corners make it fall outside the C^2 class."""

    def __init__(self, lo=(0.0, 0.0), hi=(1.0, 1.0)):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.hi <= self.lo):
            raise ConfigError(f"box needs lo < hi, got {lo}, {hi}")
        self.bounding_box = (tuple(self.lo), tuple(self.hi))
        self.diameter = float(np.linalg.norm(self.hi - self.lo))

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        inner = np.minimum(x - self.lo, self.hi - x)
        q = np.maximum(-inner, 0.0)
        outside = np.linalg.norm(q, axis=-1)
        return np.where(outside > 0.0, -outside, inner.min(axis=-1))

    def __repr__(self):
        return f"Box(lo={tuple(self.lo)}, hi={tuple(self.hi)})"


class RoundedBox(Domain):
    """Box whose corners are replaced by quarter circles of radius ``corner``."""

    def __init__(self, lo=(0.0, 0.0), hi=(1.0, 1.0), corner: float = 0.2):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.corner = float(corner)
        if not 0.0 < 2 * corner < float(np.min(self.hi - self.lo)):
            raise ConfigError(f"corner radius {corner} does not fit the box")
        self._core = Box(self.lo + corner, self.hi - corner)
        self.bounding_box = (tuple(self.lo), tuple(self.hi))
        self.diameter = float(np.linalg.norm(self.hi - self.lo - 2 * corner) + 2 * corner)

    def signed_distance(self, x):
        return self.corner + self._core.signed_distance(x)

    def __repr__(self):
        return f"RoundedBox(lo={tuple(self.lo)}, hi={tuple(self.hi)}, corner={self.corner})"


def _ellipse_root(r0, z0, z1, g, iters=200):
    # bisection for the projection parameter, following Eberly's formulation
    n0 = r0 * z0
    s0 = z1 - 1.0
    s1 = np.where(g < 0.0, 0.0, np.hypot(n0, z1) - 1.0)
    s = 0.5 * (s0 + s1)
    for _ in range(iters):
        s = 0.5 * (s0 + s1)
        val = (n0 / (s + r0)) ** 2 + (z1 / (s + 1.0)) ** 2 - 1.0
        s0 = np.where(val > 0.0, s, s0)
        s1 = np.where(val < 0.0, s, s1)
    return s


class Ellipse(Domain):
    def __init__(self, semi_axes=(1.0, 0.6), center=(0.0, 0.0)):
        a, b = (float(v) for v in semi_axes)
        if a <= 0 or b <= 0:
            raise ConfigError(f"ellipse semi-axes must be positive, got {semi_axes}")
        self.semi_axes = (a, b)
        self.center = np.asarray(center, dtype=float)
        self.bounding_box = (tuple(self.center - (a, b)), tuple(self.center + (a, b)))
        self.diameter = 2.0 * max(a, b)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float) - self.center
        shape = x.shape[:-1]
        y = np.abs(x.reshape(-1, 2))
        e0, e1 = self.semi_axes
        if e0 < e1:
            y = y[:, ::-1]
            e0, e1 = e1, e0
        y0, y1 = y[:, 0], y[:, 1]
        dist = np.empty(len(y))

        gen = (y0 > 0) & (y1 > 0)
        z0 = y0[gen] / e0
        z1 = y1[gen] / e1
        g = z0 ** 2 + z1 ** 2 - 1.0
        r0 = (e0 / e1) ** 2
        sbar = _ellipse_root(r0, z0, z1, g)
        x0 = r0 * y0[gen] / (sbar + r0)
        x1 = y1[gen] / (sbar + 1.0)
        dist[gen] = np.where(g == 0.0, 0.0, np.hypot(x0 - y0[gen], x1 - y1[gen]))

        on_y = (y0 == 0) & (y1 > 0)
        dist[on_y] = np.abs(y1[on_y] - e1)

        on_x = y1 == 0
        numer = e0 * y0[on_x]
        denom = e0 ** 2 - e1 ** 2
        if denom > 0:
            xde = np.minimum(numer / denom, 1.0)
            px = e0 * xde
            py = e1 * np.sqrt(1.0 - xde ** 2)
            d_in = np.hypot(px - y0[on_x], py)
            dist[on_x] = np.where(numer < denom, d_in, np.abs(y0[on_x] - e0))
        else:
            dist[on_x] = np.abs(y0[on_x] - e0)

        inside = (y0 / e0) ** 2 + (y1 / e1) ** 2 < 1.0
        return np.where(inside, dist, -dist).reshape(shape)

    def __repr__(self):
        return f"Ellipse(semi_axes={self.semi_axes}, center={tuple(self.center)})"


@dataclass(frozen=True)
class Stencil:
    """Finite set of integer lattice directions containing the basis vectors."""

    vectors: tuple

    def __init__(self, vectors: Sequence[Sequence[int]]):
        vecs = tuple(tuple(int(c) for c in v) for v in vectors)
        if not vecs:
            raise ConfigError("stencil must be nonempty")
        d = len(vecs[0])
        if any(len(v) != d for v in vecs):
            raise ConfigError("stencil vectors must share one dimension")
        if len(set(vecs)) != len(vecs):
            raise ConfigError(f"stencil vectors must be distinct: {vecs}")
        if any(all(c == 0 for c in v) for v in vecs):
            raise ConfigError("stencil vectors must be nonzero")
        if any(tuple(-c for c in v) in vecs for v in vecs):
            raise ConfigError("stencil must not contain both l and -l")
        for i in range(d):
            e = tuple(int(i == j) for j in range(d))
            if e not in vecs:
                raise ConfigError(f"stencil must contain basis vector {e}")
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return len(self.vectors[0])

    def __len__(self):
        return len(self.vectors)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vectors, dtype=np.int64)

    @property
    def ball_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.array, axis=1)))

    def basis_index(self, i: int) -> int:
        e = tuple(int(i == j) for j in range(self.dim))
        return self.vectors.index(e)


AXIS_STENCIL = Stencil([(1, 0), (0, 1)])
DEFAULT_STENCIL = Stencil([(1, 0), (0, 1), (1, 1), (1, -1)])
EXTENDED8_STENCIL = Stencil([(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)])
EXTENDED16_STENCIL = Stencil([(1, 0), (0, 1), (1, 1), (1, -1),
                              (2, 1), (1, 2), (2, -1), (1, -2),
                              (3, 1), (1, 3), (3, -1), (1, -3),
                              (3, 2), (2, 3), (3, -2), (2, -3)])

NAMED_STENCILS = {
    "axis": AXIS_STENCIL,
    "default": DEFAULT_STENCIL,
    "extended8": EXTENDED8_STENCIL,
    "extended16": EXTENDED16_STENCIL,
}


def get_stencil(spec) -> Stencil:
    if isinstance(spec, Stencil):
        return spec
    if isinstance(spec, str):
        try:
            return NAMED_STENCILS[spec]
        except KeyError:
            raise ConfigError(f"unknown stencil {spec!r}; choose from {sorted(NAMED_STENCILS)}") from None
    return Stencil(spec)


class Grid:
    """Lattice points of ``G`` at spacing ``h``, split into interior and boundary.

    Points are enumerated lexicographically in their integer coordinates.
    ``nbr_plus[n, k]`` and ``nbr_minus[n, k]`` are the ordinals of
    ``x ± h l_k`` for the ``n``-th interior point.
    """

    def __init__(self, domain: Domain, stencil: Stencil, h: float, coords, rho, interior_mask):
        self.domain = domain
        self.stencil = stencil
        self.h = float(h)
        self.coords = coords
        self.rho = rho
        self.interior_mask = interior_mask
        self.interior = np.flatnonzero(interior_mask)
        self.boundary = np.flatnonzero(~interior_mask)
        self._lo = coords.min(axis=0)
        shape = tuple(coords.max(axis=0) - self._lo + 1)
        self._lut = np.full(shape, -1, dtype=np.int64)
        self._lut[tuple((coords - self._lo).T)] = np.arange(len(coords))
        L = stencil.array
        ic = coords[self.interior]
        self.nbr_plus = self._lookup(ic[:, None, :] + L[None, :, :])
        self.nbr_minus = self._lookup(ic[:, None, :] - L[None, :, :])

    def _lookup(self, c):
        c = np.asarray(c, dtype=np.int64)
        rel = c - self._lo
        ok = np.all((rel >= 0) & (rel < np.array(self._lut.shape)), axis=-1)
        out = np.full(c.shape[:-1], -1, dtype=np.int64)
        out[ok] = self._lut[tuple(rel[ok].T)]
        return out

    @property
    def points(self) -> np.ndarray:
        return self.h * self.coords

    @property
    def interior_points(self) -> np.ndarray:
        return self.points[self.interior]

    @property
    def boundary_points(self) -> np.ndarray:
        return self.points[self.boundary]

    @property
    def size(self) -> int:
        return len(self.coords)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def index(self, coord) -> int:
        """Ordinal of the lattice point with integer coordinates ``coord``."""
        n = int(self._lookup(np.asarray(coord, dtype=np.int64)))
        if n < 0:
            raise UnclassifiedPoint(f"lattice point {tuple(coord)} is not a grid point")
        return n

    def locate(self, x) -> int:
        """Ordinal of the grid point at real coordinates ``x``."""
        x = np.asarray(x, dtype=float)
        k = np.rint(x / self.h).astype(np.int64)
        if np.max(np.abs(x - self.h * k)) > 1e-9 * self.h:
            raise UnclassifiedPoint(f"{tuple(x)} is not on the lattice of spacing {self.h}")
        return self.index(k)

    def interior_position(self, ordinal: int) -> int:
        """Row of an interior point in the interior-only arrays."""
        pos = np.searchsorted(self.interior, ordinal)
        if pos >= len(self.interior) or self.interior[pos] != ordinal:
            raise MissingNeighbor(f"grid point {tuple(self.coords[ordinal])} is not interior")
        return int(pos)

    def __repr__(self):
        return (f"Grid(h={self.h}, interior={self.n_interior}, "
                f"boundary={len(self.boundary)}, domain={self.domain!r})")


def build_grid(domain: Domain, stencil: Stencil, h: float) -> Grid:
    """Classify ``G ∩ hZ^d`` into interior points (``rho > h * r_B``) and the rest."""
    if h <= 0:
        raise ConfigError(f"h must be positive, got {h}")
    lo, hi = (np.asarray(v, dtype=float) for v in domain.bounding_box)
    axes = [np.arange(int(np.floor(l / h)), int(np.ceil(u / h)) + 1) for l, u in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1).astype(np.int64)
    rho = domain.signed_distance(h * coords)
    keep = rho > 0.0
    coords, rho = coords[keep], rho[keep]
    interior = rho > h * stencil.ball_radius
    if not interior.any():
        raise EmptyInterior(
            f"no interior lattice point for h={h} with stencil radius {stencil.ball_radius:.4g}")
    grid = Grid(domain, stencil, h, coords, rho, interior)
    missing = (grid.nbr_plus < 0).any(axis=1) | (grid.nbr_minus < 0).any(axis=1)
    if missing.any():
        # only reachable through rounding in signed_distance; demote those points
        interior = interior.copy()
        interior[grid.interior[missing]] = False
        grid = Grid(domain, stencil, h, coords, rho, interior)
    return grid


def distance_to_boundary(grid: Grid, x) -> float:
    return float(grid.rho[grid.locate(x)])


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {self.values.shape}")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, np.asarray(fn(grid.points), dtype=float))

    def at(self, x) -> float:
        return float(self.values[self.grid.locate(x)])

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


def grid_rows(grid: Grid):
    """Rows ``(i, j, x, y, class, rho)`` in grid order."""
    pts = grid.points
    for n in range(grid.size):
        yield (*(int(c) for c in grid.coords[n]), *(float(v) for v in pts[n]),
               "interior" if grid.interior_mask[n] else "boundary", float(grid.rho[n]))


def grid_header(d: int):
    if d == 2:
        return ["i", "j", "x", "y", "class", "rho"]
    return [f"i{k}" for k in range(d)] + [f"x{k}" for k in range(d)] + ["class", "rho"]
