"""Rectangular lattices with an interior mask and the fields living on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .errors import GridError, StructuralError


@dataclass(frozen=True)
class Disk:
    center: tuple[float, ...]
    radius: float

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return np.sum((pts - c) ** 2, axis=-1) < self.radius**2


@dataclass(frozen=True)
class SubBox:
    """Open axis-aligned box ``low < x < high`` used as a mask predicate."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.low, float), np.asarray(self.high, float)
        tol = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        return np.all((pts > lo + tol) & (pts < hi - tol), axis=-1)


@dataclass(frozen=True)
class Domain:
    """A box, optionally cut down by a mask predicate on node coordinates."""

    bounds: tuple[tuple[float, float], ...]
    mask: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def ndim(self) -> int:
        return len(self.bounds)


def box(*bounds: Sequence[float]) -> Domain:
    return Domain(tuple((float(lo), float(hi)) for lo, hi in bounds))


def unit_box(n: int) -> Domain:
    return box(*[(0.0, 1.0)] * n)


@dataclass(frozen=True, eq=False)
class Grid:
    """Node lattice over a box; the outer layer of nodes is always exterior.

    Hashes by identity so that discrete operators can be cached per grid.
    """

    bounds: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    interior_mask: np.ndarray = field(repr=False)

    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / (r - 1) for (lo, hi), r in zip(self.bounds, self.resolution)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        out = []
        for (lo, hi), r in zip(self.bounds, self.resolution):
            a = np.linspace(lo, hi, r)
            # exact zeros keep degenerate sets (e.g. the Grushin line) on the lattice
            a[np.abs(a) < 1e-13 * max(1.0, hi - lo)] = 0.0
            out.append(a)
        return out

    @cached_property
    def points(self) -> np.ndarray:
        """All node coordinates, shape ``(*shape, ndim)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def interior_index(self) -> np.ndarray:
        """Flat (C-order) box indices of interior nodes, lexicographic."""
        return np.flatnonzero(self.interior_mask.ravel())

    @property
    def n_interior(self) -> int:
        return int(self.interior_index.size)

    @cached_property
    def interior_points(self) -> np.ndarray:
        return self.points.reshape(-1, self.ndim)[self.interior_index]

    @property
    def measure(self) -> float:
        """Discrete ``|Omega|``: interior node count times cell volume."""
        return self.n_interior * self.cell_volume

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Interior values -> full box array (zeros outside Omega)."""
        values = np.asarray(values)
        full = np.zeros((int(np.prod(self.shape)),) + values.shape[1:])
        full[self.interior_index] = values
        return full.reshape(self.shape + values.shape[1:])

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full).reshape(-1)[self.interior_index]

    def nearest_interior(self, x) -> int:
        """Ordinal of the interior node closest to ``x``."""
        d = np.sum((self.interior_points - np.asarray(x, float)) ** 2, axis=1)
        return int(np.argmin(d))

    def sample_points(self) -> np.ndarray:
        """Nodes of the box together with the cell centres (dual lattice)."""
        pts = self.points.reshape(-1, self.ndim)
        mids = [0.5 * (a[1:] + a[:-1]) for a in self.axes]
        for m in mids:
            m[np.abs(m) < 1e-13] = 0.0
        dual = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1).reshape(-1, self.ndim)
        return np.concatenate([pts, dual])

    def interior_neighbors(self) -> np.ndarray:
        """Boolean per interior node: has a face neighbour outside Omega."""
        pad = np.pad(self.interior_mask, 1, constant_values=False)
        touch = np.zeros(self.shape, dtype=bool)
        core = tuple(slice(1, -1) for _ in range(self.ndim))
        for ax in range(self.ndim):
            for s in (-1, 1):
                touch |= ~np.roll(pad, s, axis=ax)[core]
        return self.restrict(touch & self.interior_mask)


def build_grid(domain: Domain, resolution) -> Grid:
    """Lattice with ``resolution`` nodes per axis (boundary nodes included).

    Examples
    --------
    >>> g = build_grid(unit_box(2), 5)
    >>> g.n_interior, float(g.spacing[0])
    (9, 0.25)
    """
    n = domain.ndim
    res = (int(resolution),) * n if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    if len(res) != n:
        raise StructuralError(f"resolution has {len(res)} entries for a {n}-dimensional box")
    if min(res) < 4:
        raise GridError(f"resolution must be >= 4 per axis, got {res}")
    for lo, hi in domain.bounds:
        if not hi > lo:
            raise GridError(f"empty box side ({lo}, {hi})")
    mask = np.zeros(res, dtype=bool)
    mask[tuple(slice(1, -1) for _ in range(n))] = True
    grid = Grid(domain.bounds, res, mask)
    if domain.mask is not None:
        keep = np.asarray(domain.mask(grid.points), dtype=bool)
        mask = mask & keep
        grid = Grid(domain.bounds, res, mask)
    if not mask.any():
        raise GridError("interior is empty")
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise GridError(f"interior is not edge-connected ({ncomp} components)")
    mask.setflags(write=False)
    return grid


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values on the interior of ``grid`` (zero outside Omega)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_interior,):
            raise StructuralError(
                f"field has {v.shape} values, grid has {self.grid.n_interior} interior nodes"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ScalarField":
        pts = grid.interior_points
        return cls(grid, np.asarray(f(*pts.T), dtype=float))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n_interior))

    def full(self) -> np.ndarray:
        return self.grid.embed(self.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def __abs__(self) -> "ScalarField":
        return ScalarField(self.grid, np.abs(self.values))


@dataclass(frozen=True, eq=False)
class HField:
    """Horizontal gradient samples.

    ``values`` has shape ``(2, m, *grid.shape)``: the forward and backward
    one-sided discretisations of ``(X_1 u, ..., X_m u)`` at every box node.
    Quadrature gives each orientation weight 1/2.
    """

    grid: Grid
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def magnitude(self) -> np.ndarray:
        """``|Xu|`` per orientation and node, shape ``(2, *grid.shape)``."""
        return np.sqrt(np.sum(self.values**2, axis=1))

    def central(self) -> np.ndarray:
        """Average of both orientations: the central-difference gradient ``(m, *shape)``."""
        return 0.5 * (self.values[0] + self.values[1])

    def __mul__(self, c: float) -> "HField":
        return HField(self.grid, self.values * c)

    __rmul__ = __mul__
