"""Uniform Cartesian grids with a Dirichlet portion, node masks, toughness and drives.

Nodes are stored in ``ij`` order: axis 0 is x, axis 1 is y. Inactive nodes
(the hole of an annulus, the corners of its bounding square) carry no
unknowns and are always False in masks and zero in fields.

Each node owns the cell that has it as its lower corner. Cells that stick
out of the active region have zero measure, so the last node of an
interval owns nothing and the domain measure is exactly the physical one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage, sparse

from .errors import DriveError, GridError, GridMismatch, ToughnessError

SHAPES = ("interval", "rectangle", "annulus")
_FACES = {
    "interval": ("left", "right"),
    "rectangle": ("left", "right", "bottom", "top"),
    "annulus": ("inner", "outer"),
}


def _node_count(length, h):
    n = length / h
    m = int(round(n))
    if m < 1 or abs(n - m) > 1e-9 * max(1.0, n):
        raise GridError(f"extent {length} is not an integer multiple of spacing {h}")
    return m


@dataclass(frozen=True, eq=False)
class Grid:
    dim: int
    shape: tuple
    spacing: float
    origin: tuple
    extents: tuple
    kind: str
    active: np.ndarray
    gamma: np.ndarray

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def h(self):
        return self.spacing

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @cached_property
    def coords(self):
        axes = [self.origin[k] + self.spacing * np.arange(self.shape[k]) for k in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    @cached_property
    def radius(self):
        return np.sqrt(sum(c * c for c in self.coords))

    @cached_property
    def edges(self):
        """Flat index pairs of all 4-neighbour edges between active nodes."""
        idx = np.arange(self.size).reshape(self.shape)
        left, right = [], []
        for ax in range(self.dim):
            lo = [slice(None)] * self.dim
            hi = [slice(None)] * self.dim
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            ok = self.active[tuple(lo)] & self.active[tuple(hi)]
            left.append(idx[tuple(lo)][ok])
            right.append(idx[tuple(hi)][ok])
        return np.concatenate(left), np.concatenate(right)

    @cached_property
    def stiffness(self):
        """Matrix K with v.K.v / 2 equal to the discrete Dirichlet energy."""
        i, j = self.edges
        n = self.size
        scale = self.spacing ** (self.dim - 2)
        w = np.full(i.size, scale)
        off = sparse.coo_matrix((-w, (i, j)), shape=(n, n))
        deg = np.bincount(i, weights=w, minlength=n) + np.bincount(j, weights=w, minlength=n)
        K = off + off.T + sparse.diags(deg)
        return K.tocsr()

    @cached_property
    def weight_units(self):
        """Integer share of cell measure per node, in units of ``cell_volume / weight_denominator``.

        In 1D a node owns its forward cell [x, x + h) when that cell lies in
        the domain, so a run of nodes [0, m) measures exactly m h. In 2D each
        fully active cell gives a quarter to each corner; nodes touching no
        full cell (isolated tips of a masked circle) keep one quarter so that
        no node can be debonded for free.
        """
        a = self.active
        if self.dim == 1:
            own = a.copy()
            own[:-1] &= a[1:]
            own[-1] = False
            return own.astype(np.int64)
        cell = a[:-1, :-1] & a[1:, :-1] & a[:-1, 1:] & a[1:, 1:]
        n = np.zeros(self.shape, dtype=np.int64)
        n[:-1, :-1] += cell
        n[1:, :-1] += cell
        n[:-1, 1:] += cell
        n[1:, 1:] += cell
        return np.where(a, np.maximum(n, 1), 0)

    @property
    def weight_denominator(self):
        return 1 if self.dim == 1 else 4

    @cached_property
    def weights(self):
        return self.weight_units * (self.cell_volume / self.weight_denominator)

    @cached_property
    def owns_cell(self):
        return self.weights > 0

    @cached_property
    def measure(self):
        return int(self.weight_units.sum()) * self.cell_volume / self.weight_denominator

    @cached_property
    def neighbour_count(self):
        i, j = self.edges
        return (np.bincount(i, minlength=self.size) + np.bincount(j, minlength=self.size)).reshape(self.shape)

    def same_as(self, other):
        return self is other or (
            self.shape == other.shape
            and self.spacing == other.spacing
            and self.origin == other.origin
            and np.array_equal(self.active, other.active)
            and np.array_equal(self.gamma, other.gamma)
        )

    def mask(self, indicator):
        return RegionMask(self, np.asarray(indicator, dtype=bool) & self.active)

    def empty(self):
        return RegionMask(self, np.zeros(self.shape, dtype=bool))

    def full(self):
        return RegionMask(self, self.active.copy())

    def field(self, value=0.0):
        out = np.zeros(self.shape)
        out[self.active] = value
        return out

    def distance_to(self, indicator):
        """Euclidean distance from every node to the nearest true node."""
        indicator = np.asarray(indicator, dtype=bool)
        if not indicator.any():
            return np.full(self.shape, np.inf)
        return ndimage.distance_transform_edt(~indicator, sampling=self.spacing)

    def dilate(self, indicator, steps=1):
        """Grow by the active 4-neighbours, ``steps`` times."""
        out = np.asarray(indicator, dtype=bool) & self.active
        if steps <= 0:
            return out
        st = ndimage.generate_binary_structure(self.dim, 1)
        return ndimage.binary_dilation(out, structure=st, iterations=steps) & self.active

    def boundary_layer(self, indicator):
        """True nodes that have an active 4-neighbour outside the set."""
        ind = np.asarray(indicator, dtype=bool) & self.active
        outside = self.active & ~ind
        return ind & self.dilate(outside, 1)


def build_grid(shape, extents, spacing, gamma=None):
    """Build a grid for an interval, rectangle or annulus.

    ``extents`` is ``L`` (interval), ``(Lx, Ly)`` (rectangle) or ``(r0, R)``
    (annulus, realised as a masked square ``[-R, R]^2``). ``gamma`` lists the
    Dirichlet faces; it defaults to ``left`` or ``inner``.
    """
    if shape not in SHAPES:
        raise GridError(f"unknown domain shape {shape!r}")
    h = float(spacing)
    if not h > 0 or not np.isfinite(h):
        raise GridError("spacing must be positive")
    ext = tuple(float(e) for e in np.atleast_1d(extents))
    if any(not e > 0 for e in ext):
        raise GridError("extents must be positive")
    if gamma is None:
        gamma = "inner" if shape == "annulus" else "left"
    faces = (gamma,) if isinstance(gamma, str) else tuple(gamma)
    if shape != "annulus" and "both" in faces:
        faces = tuple(f for f in faces if f != "both") + ("left", "right")
    if shape == "annulus" and "both" in faces:
        faces = ("inner", "outer")
    bad = [f for f in faces if f not in _FACES[shape]]
    if bad or not faces:
        raise GridError(f"invalid Gamma faces {faces!r} for {shape}")

    if shape == "interval":
        if len(ext) != 1:
            raise GridError("interval takes one extent")
        n = _node_count(ext[0], h) + 1
        dims, origin = (n,), (0.0,)
        active = np.ones(dims, dtype=bool)
        g = np.zeros(dims, dtype=bool)
        if "left" in faces:
            g[0] = True
        if "right" in faces:
            g[-1] = True
    elif shape == "rectangle":
        if len(ext) != 2:
            raise GridError("rectangle takes two extents")
        dims = (_node_count(ext[0], h) + 1, _node_count(ext[1], h) + 1)
        origin = (0.0, 0.0)
        active = np.ones(dims, dtype=bool)
        g = np.zeros(dims, dtype=bool)
        if "left" in faces:
            g[0, :] = True
        if "right" in faces:
            g[-1, :] = True
        if "bottom" in faces:
            g[:, 0] = True
        if "top" in faces:
            g[:, -1] = True
    else:
        if len(ext) != 2:
            raise GridError("annulus takes (r0, R)")
        r0, R = ext
        if not r0 < R:
            raise GridError("annulus needs r0 < R")
        m = _node_count(R, h)
        dims = (2 * m + 1, 2 * m + 1)
        origin = (-R, -R)
        ax = -R + h * np.arange(dims[0])
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        r = np.sqrt(X * X + Y * Y)
        slack = 1e-9 * h
        active = (r >= r0 - slack) & (r <= R + slack)
        hole = r < r0 - slack
        outer = ~active & ~hole
        st = ndimage.generate_binary_structure(2, 1)
        g = np.zeros(dims, dtype=bool)
        if "inner" in faces:
            g |= active & ndimage.binary_dilation(hole, structure=st)
        if "outer" in faces:
            edge = np.zeros(dims, dtype=bool)
            edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
            g |= active & (ndimage.binary_dilation(outer, structure=st) | edge)

    if not g.any():
        raise GridError("Gamma is empty")
    labels, count = ndimage.label(active, structure=ndimage.generate_binary_structure(len(dims), 1))
    if count != 1:
        raise GridError(f"active region has {count} connected components")
    return Grid(len(dims), dims, h, origin, ext, shape, active, g)


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: Grid
    indicator: np.ndarray

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=bool)
        if ind.shape != self.grid.shape:
            raise GridMismatch(f"mask shape {ind.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "indicator", ind & self.grid.active)
        self.indicator.setflags(write=False)

    @property
    def count(self):
        return int(np.count_nonzero(self.indicator))

    @property
    def weighted_count(self):
        """Measure in integer units of ``cell_volume / weight_denominator``."""
        return int(self.grid.weight_units[self.indicator].sum())

    @property
    def measure(self):
        g = self.grid
        return self.weighted_count * g.cell_volume / g.weight_denominator

    def _check(self, other):
        if not isinstance(other, RegionMask):
            raise TypeError("expected a RegionMask")
        if not self.grid.same_as(other.grid):
            raise GridMismatch("masks live on different grids")

    def __or__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.indicator | other.indicator)

    def __and__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.indicator & other.indicator)

    def __sub__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.indicator & ~other.indicator)

    def issubset(self, other):
        self._check(other)
        return not np.any(self.indicator & ~other.indicator)

    __le__ = issubset

    def __eq__(self, other):
        if not isinstance(other, RegionMask):
            return NotImplemented
        return self.grid.same_as(other.grid) and np.array_equal(self.indicator, other.indicator)

    def __hash__(self):
        return hash(self.indicator.tobytes())

    def complement(self):
        return RegionMask(self.grid, self.grid.active & ~self.indicator)

    def is_empty(self):
        return not self.indicator.any()


def fatten_initial_set(grid, a0, eps):
    """Union of ``a0`` with every node strictly closer than ``eps`` to Gamma."""
    if eps < 0:
        raise GridError("eps must be nonnegative")
    if eps == 0:
        return a0
    d = grid.distance_to(grid.gamma)
    near = d < eps - 1e-9 * grid.spacing
    return a0 | grid.mask(near)


def interval_mask(grid, length):
    """Nodes with x in [0, length): the discrete counterpart of (0, length)."""
    x = grid.coords[0]
    return grid.mask(x < length - 1e-9 * grid.spacing)


def band_mask(grid, outer, inner=None):
    """Annulus nodes with inner <= |x| < outer (inner defaults to the hole radius)."""
    r = grid.radius
    lo = -np.inf if inner is None else inner - 1e-9 * grid.spacing
    return grid.mask((r >= lo) & (r < outer - 1e-9 * grid.spacing))


# -- toughness ------------------------------------------------------------


@dataclass(frozen=True)
class ConstantProfile:
    value: float
    breakpoints = ()

    def point(self, x):
        return np.full(np.shape(x), float(self.value))

    def integral(self, a, b):
        return self.value * (b - a)


@dataclass(frozen=True)
class InverseSquareProfile:
    """c / x^2, frozen at c / cap^2 for x beyond ``cap`` when a cap is given."""

    c: float
    cap: float | None = None

    @property
    def breakpoints(self):
        return () if self.cap is None else (self.cap,)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        xe = x if self.cap is None else np.minimum(x, self.cap)
        with np.errstate(divide="ignore"):
            return self.c / (xe * xe)

    def integral(self, a, b):
        if b < a:
            return -self.integral(b, a)
        if a <= 0:
            raise ToughnessError("c/x^2 is not integrable up to x = 0")
        if self.cap is None or b <= self.cap:
            return self.c * (1.0 / a - 1.0 / b)
        if a >= self.cap:
            return self.c * (b - a) / self.cap**2
        return self.c * (1.0 / a - 1.0 / self.cap) + self.c * (b - self.cap) / self.cap**2


@dataclass(frozen=True)
class RadialProfile:
    """c * |x|^power."""

    c: float
    power: float = 0.0
    breakpoints = ()

    def point_nd(self, coords):
        r = np.sqrt(sum(c * c for c in coords))
        return self.c * r**self.power


@dataclass(frozen=True, eq=False)
class ToughnessField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatch("toughness shape does not match grid")
        v[~self.grid.active] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def penalty(self):
        """Cost of debonding each node: toughness times owned measure."""
        return self.values * self.grid.weights

    def dissipation(self, a, a0):
        return float(np.sum(self.penalty[a.indicator & ~a0.indicator]))


def _first_bad(grid, bad):
    idx = np.argwhere(bad)[0]
    flat = int(np.ravel_multi_index(tuple(idx), grid.shape))
    pos = tuple(float(c[tuple(idx)]) for c in grid.coords)
    return flat, pos


def make_toughness(grid, values, a0):
    """Validate nodal toughness, zero it on ``a0`` and check positivity elsewhere."""
    v = np.array(values, dtype=float)
    if v.shape == ():
        v = np.full(grid.shape, float(v))
    if v.shape != grid.shape:
        raise ToughnessError(f"toughness shape {v.shape} does not match grid {grid.shape}")
    act = grid.active
    bad = act & ~np.isfinite(v)
    if bad.any():
        n, p = _first_bad(grid, bad)
        raise ToughnessError(f"non-finite toughness at node {n} {p}")
    bad = act & (v < 0)
    if bad.any():
        n, p = _first_bad(grid, bad)
        raise ToughnessError(f"negative toughness {v.flat[n]} at node {n} {p}")
    v = np.where(a0.indicator, 0.0, v)
    bad = act & ~a0.indicator & ~(v > 0)
    if bad.any():
        n, p = _first_bad(grid, bad)
        raise ToughnessError(f"toughness must be positive outside the initial set; node {n} {p}")
    return ToughnessField(grid, v)


def toughness_from_profile(grid, profile, a0):
    """Nodal toughness from a closed-form profile.

    Profiles depending on x alone are averaged exactly over the x-range of
    each node's share of cells, so that dissipation integrals carry no
    quadrature error. Radial profiles are sampled at the share's centre.
    """
    h = grid.spacing
    if isinstance(profile, RadialProfile):
        # 1D keeps the forward-cell convention; 2D weights are centred on nodes
        shift = 0.5 * h if grid.dim == 1 else 0.0
        vals = profile.point_nd([c + shift for c in grid.coords])
    else:
        x = grid.coords[0]
        vals = np.empty(grid.shape)
        if grid.dim == 1:
            lo, hi = x, x + h
        else:
            x0, x1 = grid.origin[0], grid.origin[0] + h * (grid.shape[0] - 1)
            lo, hi = np.maximum(x - 0.5 * h, x0), np.minimum(x + 0.5 * h, x1)
        owned = grid.owns_cell & ~a0.indicator & (hi > lo)
        if owned.any():
            vals[owned] = np.array([profile.integral(p, q) for p, q in zip(lo[owned], hi[owned])]) / (hi - lo)[owned]
        rest = ~owned
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[rest] = profile.point(x[rest])
        vals[a0.indicator] = 0.0
    return make_toughness(grid, vals, a0)


# -- boundary drive -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryDrive:
    """Piecewise-linear-in-time Dirichlet data on Gamma.

    ``values`` has one row per sample time and one column per Gamma node
    (in flat-index order). ``extension`` optionally holds full-grid fields
    that agree with the data on Gamma and vanish outside the initial set.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    extension: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        ng = int(np.count_nonzero(self.grid.gamma))
        if t.ndim != 1 or t.size < 1:
            raise DriveError("drive needs at least one sample time")
        if np.any(np.diff(t) <= 0):
            raise DriveError("sample times must be strictly increasing")
        if v.ndim == 1:
            v = np.repeat(v[:, None], ng, axis=1)
        if v.shape != (t.size, ng):
            raise DriveError(f"drive values must have shape ({t.size}, {ng})")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DriveError("drive values must be finite and nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.extension is not None:
            e = np.asarray(self.extension, dtype=float)
            if e.shape != (t.size,) + self.grid.shape:
                raise DriveError("extension must hold one full field per sample")
            if not np.allclose(e[:, self.grid.gamma], v, rtol=0, atol=1e-12 * max(1.0, v.max())):
                raise DriveError("extension must agree with the drive on Gamma")
            object.__setattr__(self, "extension", e)

    @classmethod
    def uniform(cls, grid, times, values, extension=None):
        """Spatially constant data on Gamma."""
        return cls(grid, np.asarray(times, float), np.asarray(values, float), extension)

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def bound(self):
        return float(self.values.max())

    def check_extension(self, a0):
        if self.extension is None:
            return
        outside = self.grid.active & ~a0.indicator & ~self.grid.gamma
        if np.any(np.abs(self.extension[:, outside]) > 0):
            raise DriveError("extension must vanish outside the initial set")

    def _locate(self, t):
        t = float(t)
        ts = self.times
        if ts.size == 1 or t <= ts[0]:
            return 0, 0.0
        if t >= ts[-1]:
            return ts.size - 2, 1.0
        k = int(np.searchsorted(ts, t, side="right")) - 1
        return k, (t - ts[k]) / (ts[k + 1] - ts[k])

    def _interp(self, rows, t):
        if self.times.size == 1:
            return rows[0].copy()
        k, s = self._locate(t)
        return (1 - s) * rows[k] + s * rows[k + 1]

    def gamma_values(self, t):
        return self._interp(self.values, t)

    def at(self, t):
        """Full-grid array holding the data on Gamma and zero elsewhere."""
        out = np.zeros(self.grid.shape)
        out[self.grid.gamma] = self.gamma_values(t)
        return out

    def max_at(self, t):
        return float(self.gamma_values(t).max())

    def secant(self, t0, t1):
        """Average slope over [t0, t1] on Gamma, as a full-grid array."""
        return (self.at(t1) - self.at(t0)) / (t1 - t0)

    def segment(self, t, side="left"):
        """Index of the sample segment containing ``t`` (None outside the samples)."""
        ts = self.times
        if ts.size < 2 or t < ts[0] or t > ts[-1]:
            return None
        if side == "left" and t > ts[0]:
            return int(np.searchsorted(ts, t, side="left")) - 1
        return min(int(np.searchsorted(ts, t, side="right")) - 1, ts.size - 2)

    def rate(self, t, side="left"):
        """Segment slope at ``t``; ``side`` picks the segment at a breakpoint."""
        out = np.zeros(self.grid.shape)
        k = self.segment(t, side)
        if k is None:
            return out
        ts = self.times
        out[self.grid.gamma] = (self.values[k + 1] - self.values[k]) / (ts[k + 1] - ts[k])
        return out

    def extension_rate(self, t, side="left"):
        if self.extension is None:
            return None
        k = self.segment(t, side)
        if k is None:
            return np.zeros(self.grid.shape)
        ts = self.times
        return (self.extension[k + 1] - self.extension[k]) / (ts[k + 1] - ts[k])

    def extension_at(self, t):
        if self.extension is None:
            return None
        return self._interp(self.extension, t)

    def extension_secant(self, t0, t1):
        if self.extension is None:
            return None
        return (self._interp(self.extension, t1) - self._interp(self.extension, t0)) / (t1 - t0)
