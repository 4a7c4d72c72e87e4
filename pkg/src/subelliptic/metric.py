"""Graph approximation of the Carnot–Carathéodory control distance.

Each interior node is linked to the lattice neighbours within a square
stencil whose displacement is a horizontal vector at the base node, i.e.
``y - x = sum_i a_i X_i I(x)`` solvable in least squares with negligible
residual.  The edge cost is ``|a|``.  Shortest paths then give an upper
approximation of ``d_X`` relative to the interior.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import GridError, ParameterError, PreconditionError
from .frames import VectorFieldFrame
from .grid import Grid


@dataclass(frozen=True, eq=False)
class ReachabilityGraph:
    grid: Grid
    matrix: sp.csr_matrix  # matrix[i, j] = cost of the directed edge i -> j
    stencil_radius: int
    span_tol: float

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.grid.n_interior)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


@dataclass(frozen=True, eq=False)
class DistanceField:
    grid: Grid
    source: int
    values: np.ndarray

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.values)


def build_reachability_graph(
    frame: VectorFieldFrame,
    grid: Grid,
    stencil_radius: int = 2,
    span_tol: float = 1e-8,
) -> ReachabilityGraph:
    if grid.n_interior == 0:
        raise GridError("empty interior")
    if stencil_radius < 1:
        raise ParameterError("stencil_radius must be >= 1")
    if frame.n != grid.ndim:
        raise PreconditionError(f"frame dimension {frame.n} != grid dimension {grid.ndim}")
    shape = np.array(grid.shape)
    ordinal = np.full(grid.shape, -1, dtype=np.int64)
    ordinal.ravel()[grid.interior_index] = np.arange(grid.n_interior)
    multi = np.array(np.unravel_index(grid.interior_index, grid.shape)).T  # (N, n)

    B = frame.coeff(grid.interior_points)  # (N, m, n)
    pinv = np.linalg.pinv(np.swapaxes(B, 1, 2))  # (N, m, n): a = pinv @ v

    rows, cols, costs = [], [], []
    rng = range(-stencil_radius, stencil_radius + 1)
    for off in itertools.product(rng, repeat=grid.ndim):
        off = np.array(off)
        if not off.any():
            continue
        tgt = multi + off
        inside = np.all((tgt >= 0) & (tgt < shape), axis=1)
        j = np.full(len(multi), -1, dtype=np.int64)
        j[inside] = ordinal[tuple(tgt[inside].T)]
        ok = j >= 0
        if not ok.any():
            continue
        v = off * grid.spacing
        a = pinv[ok] @ v  # (K, m)
        resid = np.linalg.norm(np.einsum("kmn,km->kn", B[ok], a) - v, axis=1)
        vnorm = np.linalg.norm(v)
        good = resid <= span_tol * vnorm
        src = np.flatnonzero(ok)[good]
        rows.append(src)
        cols.append(j[ok][good])
        costs.append(np.linalg.norm(a[good], axis=1))
    N = grid.n_interior
    M = sp.csr_matrix(
        (np.concatenate(costs), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    return ReachabilityGraph(grid, M, stencil_radius, span_tol)


def resolve_node(grid: Grid, source) -> int:
    """Interior ordinal from an ordinal or a point that sits on an interior node."""
    if np.isscalar(source) and float(source).is_integer():
        idx = int(source)
        if not 0 <= idx < grid.n_interior:
            raise PreconditionError(f"source ordinal {idx} is not an interior node")
        return idx
    x = np.asarray(source, dtype=float)
    if x.shape != (grid.ndim,):
        raise PreconditionError(f"source point must have {grid.ndim} coordinates")
    idx = grid.nearest_interior(x)
    if np.any(np.abs(grid.interior_points[idx] - x) > 0.5 * grid.spacing + 1e-12):
        raise PreconditionError(f"source {x.tolist()} is not inside Omega")
    return idx


def control_distance_field(g: ReachabilityGraph, source) -> DistanceField:
    """Dijkstra distances from ``source`` (+inf where unreachable)."""
    s = resolve_node(g.grid, source)
    d = csgraph.dijkstra(g.matrix, directed=True, indices=s)
    return DistanceField(g.grid, s, np.asarray(d, dtype=float))


def metric_ball(df: DistanceField, r: float) -> np.ndarray:
    """Interior ordinals with ``d_X(source, y) < r``."""
    if not r > 0:
        raise ParameterError(f"ball radius must be positive, got {r}")
    return np.flatnonzero(df.values < r)
