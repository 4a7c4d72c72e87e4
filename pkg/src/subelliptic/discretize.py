"""Discrete horizontal gradient, its exact adjoint, energies and the p-Laplacian.

The gradient is sampled twice at every box node: once with forward and once
with backward one-sided differences, each weighted 1/2 in quadrature.  The
average of the two is the central-difference gradient, while the split keeps
the composed operator free of the odd/even null space that a pure central
stencil has.  The adjoint is the literal matrix transpose, so summation by
parts holds to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, PreconditionError
from .frames import VectorFieldFrame
from .grid import Grid, HField, ScalarField

ORIENTATIONS = (1, -1)
QUAD_WEIGHT = 0.5


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


@dataclass(frozen=True, eq=False)
class GradientOperator:
    """Sparse matrix ``G`` of shape ``(2*m*N_box, N_interior)``."""

    frame: VectorFieldFrame
    grid: Grid
    matrix: sp.csr_matrix

    @property
    def hshape(self) -> tuple[int, ...]:
        return (2, self.frame.m) + self.grid.shape

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Interior values ``(N,)`` or ``(N, k)`` -> gradient ``(2, m, *shape[, k])``."""
        out = self.matrix @ u
        return out.reshape(self.hshape + u.shape[1:])

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        k = v.shape[len(self.hshape):]
        return QUAD_WEIGHT * (self.matrix.T @ v.reshape((-1,) + k))

    def stiffness(self, weights: np.ndarray | None = None) -> sp.csr_matrix:
        """Nodal operator ``sum_s 1/2 G_s^T diag(w_s) G_s`` (weights per orientation/node)."""
        G = self.matrix
        if weights is None:
            return (QUAD_WEIGHT * (G.T @ G)).tocsr()
        w = np.broadcast_to(np.asarray(weights)[:, None], self.hshape).reshape(-1)
        return (QUAD_WEIGHT * (G.T @ sp.diags(w) @ G)).tocsr()

    def stiffness_blocks(self, blocks: np.ndarray) -> sp.csr_matrix:
        """Like ``stiffness`` with an ``m x m`` weight block per orientation and node.

        ``blocks`` has shape ``(2, m, m, *grid.shape)``.
        """
        m = self.frame.m
        nbox = int(np.prod(self.grid.shape))
        node = np.arange(nbox)
        rows, cols, vals = [], [], []
        for s in range(2):
            for i in range(m):
                for j in range(m):
                    w = blocks[s, i, j].reshape(-1)
                    nz = w != 0
                    rows.append((s * m + i) * nbox + node[nz])
                    cols.append((s * m + j) * nbox + node[nz])
                    vals.append(w[nz])
        size = 2 * m * nbox
        D = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
        )
        G = self.matrix
        return (QUAD_WEIGHT * (G.T @ D @ G)).tocsr()


def _assemble(frame: VectorFieldFrame, grid: Grid) -> sp.csr_matrix:
    if frame.n != grid.ndim:
        raise PreconditionError(
            f"frame {frame.label!r} lives in R^{frame.n} but the grid is {grid.ndim}-dimensional"
        )
    shape = grid.shape
    nbox = int(np.prod(shape))
    col = np.full(nbox, -1, dtype=np.int64)
    col[grid.interior_index] = np.arange(grid.n_interior)
    col = col.reshape(shape)
    idx = np.arange(nbox).reshape(shape)
    b = frame.coeff(grid.points)  # (*shape, m, n)
    h = grid.spacing
    rows, cols, vals = [], [], []
    for s_ord, s in enumerate(ORIENTATIONS):
        for k in range(grid.ndim):
            # node r and its neighbour r + s*e_k; difference s*(u(r+s e_k) - u(r))/h_k
            here = [slice(None)] * grid.ndim
            there = [slice(None)] * grid.ndim
            if s > 0:
                here[k], there[k] = slice(0, -1), slice(1, None)
            else:
                here[k], there[k] = slice(1, None), slice(0, -1)
            r_here = idx[tuple(here)].ravel()
            c_there = col[tuple(there)].ravel()
            c_here = col[tuple(here)].ravel()
            # nodes at the open end of the box see a zero neighbour
            edge = [slice(None)] * grid.ndim
            edge[k] = slice(-1, None) if s > 0 else slice(0, 1)
            r_edge = idx[tuple(edge)].ravel()
            c_edge = col[tuple(edge)].ravel()
            for i in range(frame.m):
                coef_here = b[tuple(here)][..., i, k].ravel() / h[k]
                coef_edge = b[tuple(edge)][..., i, k].ravel() / h[k]
                row_off = (s_ord * frame.m + i) * nbox
                for r, c, v in (
                    (r_here, c_there, s * coef_here),
                    (r_here, c_here, -s * coef_here),
                    (r_edge, c_edge, -s * coef_edge),
                ):
                    keep = (c >= 0) & (v != 0)
                    rows.append(r[keep] + row_off)
                    cols.append(c[keep])
                    vals.append(v[keep])
    G = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * frame.m * nbox, grid.n_interior),
    )
    return G.tocsr()


@lru_cache(maxsize=32)
def gradient_operator(frame: VectorFieldFrame, grid: Grid) -> GradientOperator:
    return GradientOperator(frame, grid, _assemble(frame, grid))


def horizontal_gradient(frame: VectorFieldFrame, grid: Grid, u) -> HField:
    """``(X_i u)(x) = sum_k b_ik(x) D_k u(x)`` with zero extension outside Omega.

    ``HField.central()`` returns the central-difference version.
    """
    op = gradient_operator(frame, grid)
    return HField(grid, op.apply(_values(u)))


def adjoint_apply(frame: VectorFieldFrame, grid: Grid, v: HField) -> ScalarField:
    """``sum_i X_i^* v_i`` as the transpose of the discrete gradient."""
    op = gradient_operator(frame, grid)
    return ScalarField(grid, op.adjoint(v.values if isinstance(v, HField) else np.asarray(v)))


def inner(u, v, grid: Grid) -> float:
    """Cell-volume weighted ``<u, v>`` of scalar fields."""
    return float(np.dot(_values(u), _values(v)) * grid.cell_volume)


def h_inner(a: HField, b: HField) -> float:
    return float(QUAD_WEIGHT * np.sum(a.values * b.values) * a.grid.cell_volume)


def _check_p(p: float, strict: bool = True):
    if not np.isfinite(p) or (p <= 1 if strict else p < 1):
        raise ParameterError(f"p must be {'>' if strict else '>='} 1, got {p}")


def p_energy(v: HField, p: float) -> float:
    """``E = int |Xu|^p dx`` by the two-orientation quadrature."""
    _check_p(p)
    return float(QUAD_WEIGHT * np.sum(v.magnitude() ** p) * v.grid.cell_volume)


def lp_norm(u: ScalarField, p: float) -> float:
    _check_p(p, strict=False)
    return float((np.sum(np.abs(u.values) ** p) * u.grid.cell_volume) ** (1.0 / p))


def sobolev_norm(frame, grid, u: ScalarField, p: float) -> float:
    """Natural norm ``(int |u|^p + |Xu|^p)^(1/p)``."""
    return (lp_norm(u, p) ** p + p_energy(horizontal_gradient(frame, grid, u), p)) ** (1.0 / p)


def poincare_norm(frame, grid, u: ScalarField, p: float) -> float:
    """``||Xu||_p``."""
    return p_energy(horizontal_gradient(frame, grid, u), p) ** (1.0 / p)


def rayleigh_quotient(frame: VectorFieldFrame, grid: Grid, u, p: float) -> float:
    u = u if isinstance(u, ScalarField) else ScalarField(grid, u)
    denom = lp_norm(u, p) ** p
    if denom == 0.0:
        raise ZeroDivisionError("Rayleigh quotient of the zero field (u must be nonzero)")
    return p_energy(horizontal_gradient(frame, grid, u), p) / denom


def default_eps_reg(v: HField, p: float) -> float:
    """Weight regularisation: 0 for ``p >= 2``, else ``1e-10`` of the rms ``|Xu|``."""
    if p >= 2:
        return 0.0
    mag = v.magnitude()
    scale = np.sqrt(QUAD_WEIGHT * np.sum(mag**2) * v.grid.cell_volume / max(v.grid.measure, 1e-300))
    return 1e-10 * float(scale)


def p_weights(v: HField, p: float, eps_reg: float | None = None) -> np.ndarray:
    """``|Xu|^(p-2)`` per orientation and node (zero where ``Xu = 0`` and ``p > 2``)."""
    eps = default_eps_reg(v, p) if eps_reg is None else eps_reg
    mag2 = np.sum(v.values**2, axis=1)
    if p == 2:
        return np.ones_like(mag2)
    reg = mag2 + eps**2
    with np.errstate(divide="ignore"):
        w = reg ** ((p - 2) / 2)
    # (0)^(negative) only arises when eps = 0; the flux there is zero anyway
    w[reg == 0] = 0.0
    return w


def p_laplacian_apply(
    frame: VectorFieldFrame, grid: Grid, u, p: float, eps_reg: float | None = None
) -> ScalarField:
    """``sum_i X_i^*(|Xu|^(p-2) X_i u)`` as a nodal field."""
    _check_p(p)
    op = gradient_operator(frame, grid)
    v = HField(grid, op.apply(_values(u)))
    w = p_weights(v, p, eps_reg)
    return ScalarField(grid, op.adjoint(v.values * w[:, None]))
