"""First eigenpair of the discrete subelliptic p-Laplacian.

``solve_p`` minimises the Rayleigh quotient on the sphere ``||u||_p = 1``
by preconditioned projected gradient descent with Armijo backtracking;
``solve_p2`` is the linear fast path (inverse iteration).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as sla

from .discretize import (
    QUAD_WEIGHT,
    gradient_operator,
    lp_norm,
    p_energy,
    p_laplacian_apply,
)
from .errors import DivergenceError, NonConvergenceError, ParameterError
from .frames import VectorFieldFrame
from .grid import Grid, HField, ScalarField

log = logging.getLogger(__name__)

INITS = ("positive_bump", "random", "linear_eigvec")
PRECONDITIONERS = ("hessian", "lagged", "none")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``preconditioner`` selects the metric for the descent direction:
    ``"hessian"`` (second variation of the energy, frozen per step),
    ``"lagged"`` (isotropic ``X^T diag(|Xu|^(p-2)) X``) or ``"none"`` (plain
    L2 gradient).
    """

    p: float = 2.0
    tol_rel: float = 1e-10
    tol_res: float = 1e-6
    max_iter: int = 10000
    seed: int = 0
    n_inits: int = 1
    init: str = "positive_bump"
    step_init: float = 1.0
    step_shrink: float = 0.5
    armijo: float = 1e-4
    preconditioner: str = "hessian"
    precond_reg: float = 1e-3

    def __post_init__(self):
        if not self.p > 1:
            raise ParameterError(f"p must be > 1, got {self.p}")
        if not (self.tol_rel > 0 and self.tol_res > 0):
            raise ParameterError("tolerances must be positive")
        if self.max_iter < 1 or self.n_inits < 1:
            raise ParameterError("max_iter and n_inits must be >= 1")
        if self.init not in INITS:
            raise ParameterError(f"init must be one of {INITS}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ParameterError(f"preconditioner must be one of {PRECONDITIONERS}")
        if not (0 < self.step_shrink < 1 and 0 < self.armijo < 1 and self.step_init > 0):
            raise ParameterError("invalid backtracking parameters")


@dataclass(frozen=True, eq=False)
class EigenResult:
    p: float
    lambda1: float
    u1: ScalarField
    residual: float
    iterations: int
    trajectory: tuple[float, ...] = field(default=(), repr=False)

    @property
    def poincare_constant(self) -> float:
        return 1.0 / self.lambda1


@dataclass(frozen=True, eq=False)
class ModeResult:
    """A higher linear mode (p = 2)."""

    eigenvalue: float
    mode: ScalarField
    residual: float
    iterations: int


def p_star(p: float, Q: int) -> float:
    """Sobolev exponent: ``Qp/(Q-p)`` for ``1 < p < Q``, else ``2p``."""
    if not p > 1 or Q < 1:
        raise ParameterError(f"need p > 1 and Q >= 1, got p={p}, Q={Q}")
    return Q * p / (Q - p) if p < Q else 2.0 * p


def _wnorm(x: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.dot(x, x) * grid.cell_volume))


def _phi(u: np.ndarray, p: float) -> np.ndarray:
    return np.abs(u) ** (p - 1) * np.sign(u)


def residual(frame: VectorFieldFrame, grid: Grid, u, lam: float, p: float) -> float:
    """``|| Delta_p u - lam |u|^(p-2) u ||`` in the cell-volume weighted L2 norm."""
    u = u if isinstance(u, ScalarField) else ScalarField(grid, u)
    r = p_laplacian_apply(frame, grid, u, p).values - lam * _phi(u.values, p)
    return _wnorm(r, grid)


def _normalize(u: np.ndarray, grid: Grid, p: float) -> np.ndarray:
    return u / lp_norm(ScalarField(grid, u), p)


def _sign_normalize(u: np.ndarray) -> np.ndarray:
    return -u if u.mean() < 0 else u


def bump(grid: Grid) -> np.ndarray:
    """Product of per-axis parabolas vanishing on the box boundary."""
    pts = grid.interior_points
    out = np.ones(len(pts))
    for k, (lo, hi) in enumerate(grid.bounds):
        out *= (pts[:, k] - lo) * (hi - pts[:, k]) / (0.5 * (hi - lo)) ** 2
    return out


def initial_field(frame, grid, cfg: SolverConfig, seed: int | None = None) -> np.ndarray:
    seed = cfg.seed if seed is None else seed
    if cfg.init == "positive_bump":
        u = bump(grid)
    elif cfg.init == "random":
        rng = np.random.default_rng(seed)
        u = bump(grid) * rng.uniform(0.25, 1.75, grid.n_interior)
    else:
        u = solve_p2(frame, grid, replace(cfg, p=2.0, init="positive_bump")).u1.values
    return _normalize(u, grid, cfg.p)


def _rayleigh(op, grid, u: np.ndarray, p: float) -> tuple[float, float]:
    """Energy and ``||u||_p^p``."""
    v = HField(grid, op.apply(u))
    return p_energy(v, p), float(np.sum(np.abs(u) ** p) * grid.cell_volume)


def solve_p2(frame: VectorFieldFrame, grid: Grid, cfg: SolverConfig | None = None) -> EigenResult:
    """Smallest eigenpair of ``A = sum_i X_i^T M X_i`` by inverse iteration."""
    cfg = cfg or SolverConfig()
    if cfg.p != 2:
        raise ParameterError("solve_p2 requires p = 2")
    op = gradient_operator(frame, grid)
    A = op.stiffness()
    solve = sla.factorized(A.tocsc())
    u = _normalize(initial_field(frame, grid, replace(cfg, init="positive_bump")), grid, 2.0)
    lam_old = np.inf
    traj = []
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        w = solve(u)
        u = _normalize(w, grid, 2.0)
        E, N = _rayleigh(op, grid, u, 2.0)
        lam = E / N
        traj.append(lam)
        res = _wnorm(A @ u - lam * u, grid)
        if res < cfg.tol_res and abs(lam_old - lam) <= cfg.tol_rel * lam:
            break
        lam_old = lam
    else:
        raise NonConvergenceError(
            f"inverse iteration did not converge in {cfg.max_iter} steps (residual {res:.3e})",
            residual=res,
            trajectory=traj,
        )
    u = _sign_normalize(u)
    lam = p_energy(HField(grid, op.apply(u)), 2.0) / lp_norm(ScalarField(grid, u), 2.0) ** 2
    return EigenResult(2.0, lam, ScalarField(grid, u), res, it, tuple(traj))


def _preconditioner(op, grid, v: HField, p: float, reg: float, kind: str):
    """Factorised weighted operator frozen at the current iterate.

    ``"hessian"`` uses the exact second variation of ``E/p``, i.e. the
    per-node block ``W (I + (p-2) n n^T)`` with ``n = Xu/|Xu|``; ``"lagged"``
    keeps only the isotropic part ``W``.  ``W`` is ``|Xu|^(p-2)`` with the
    magnitude floored at ``reg`` times its rms.
    """
    if p == 2:
        return sla.factorized(op.stiffness().tocsc())
    vals = v.values
    mag2 = np.sum(vals**2, axis=1)
    rms2 = QUAD_WEIGHT * mag2.sum() * grid.cell_volume / grid.measure
    w = (mag2 + (reg**2) * rms2) ** ((p - 2) / 2)
    if kind == "lagged":
        return sla.factorized(op.stiffness(w).tocsc())
    m = vals.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(mag2[:, None] > 0, vals / np.sqrt(mag2)[:, None], 0.0)
    blocks = (p - 2) * n[:, :, None] * n[:, None, :]
    idx = np.arange(m)
    blocks[:, idx, idx] += 1.0
    blocks *= w[:, None, None]
    return sla.factorized(op.stiffness_blocks(blocks).tocsc())


def _pow_diff(new2: np.ndarray, old2: np.ndarray, delta2: np.ndarray, p: float) -> np.ndarray:
    """``new2^(p/2) - old2^(p/2)`` given the exact increment ``delta2 = new2 - old2``."""
    out = np.empty_like(old2)
    pos = old2 > 0
    out[pos] = old2[pos] ** (p / 2) * np.expm1((p / 2) * np.log1p(delta2[pos] / old2[pos]))
    out[~pos] = np.maximum(new2[~pos], 0.0) ** (p / 2)
    return out


def _rayleigh_change(op, grid, u, v, step, p, lam, N):
    """Accurate ``R(u + step) - R(u)`` without subtracting two nearly equal quotients."""
    dv = op.apply(step)
    old2 = np.sum(v**2, axis=1)
    delta2 = np.sum(dv * (2 * v + dv), axis=1)
    dE = QUAD_WEIGHT * np.sum(_pow_diff(old2 + delta2, old2, delta2, p)) * grid.cell_volume
    dN = np.sum(_pow_diff((u + step) ** 2, u**2, step * (2 * u + step), p)) * grid.cell_volume
    if not np.isfinite(dE):
        return np.inf, dE
    return (dE - lam * dN) / (N + dN), dE


def _descend(frame, grid, cfg: SolverConfig, u0: np.ndarray) -> EigenResult:
    p = cfg.p
    op = gradient_operator(frame, grid)
    u = _normalize(u0, grid, p)
    E, N = _rayleigh(op, grid, u, p)
    lam = E / N
    if not np.isfinite(lam):
        raise DivergenceError("non-finite initial Rayleigh quotient")
    traj = [lam]
    rel_dec = np.inf
    t_prev = cfg.step_init
    fixed_solve = None
    for it in range(1, cfg.max_iter + 1):
        v = HField(grid, op.apply(u))
        g = p_laplacian_apply(frame, grid, u, p).values - lam * _phi(u, p)
        res = _wnorm(g, grid)
        if res < cfg.tol_res and rel_dec < cfg.tol_rel:
            break
        if cfg.preconditioner != "none":
            if p == 2:
                fixed_solve = fixed_solve or _preconditioner(op, grid, v, p, 0.0, "lagged")
                d = -fixed_solve(g)
            else:
                d = -_preconditioner(op, grid, v, p, cfg.precond_reg, cfg.preconditioner)(g)
            t = cfg.step_init
        else:
            d = -g
            t = min(cfg.step_init, 2.0 * t_prev)
        slope = p * float(np.dot(g, d)) * grid.cell_volume
        if not slope < 0:
            d, slope = -g, -p * res**2
        while True:
            dR, dE = _rayleigh_change(op, grid, u, v.values, t * d, p, lam, N)
            if not np.isfinite(dE):
                raise DivergenceError("non-finite energy during line search", res, traj)
            if dR < 0 and dR <= cfg.armijo * t * slope:
                break
            t *= cfg.step_shrink
            if t < 1e-16 * cfg.step_init:
                dR = None
                break
        if dR is None:
            # no representable decrease left: accept if the weak residual is small
            if res < cfg.tol_res:
                break
            raise NonConvergenceError(
                f"line search stalled at iteration {it} with residual {res:.3e}",
                residual=res,
                trajectory=traj,
            )
        t_prev = t
        u = _normalize(u + t * d, grid, p)
        N = float(np.sum(np.abs(u) ** p) * grid.cell_volume)
        rel_dec = -dR / lam
        lam = lam + dR
        traj.append(lam)
    else:
        raise NonConvergenceError(
            f"projected gradient did not converge in {cfg.max_iter} steps (residual {res:.3e})",
            residual=res,
            trajectory=traj,
        )
    u = _sign_normalize(u)
    E, N = _rayleigh(op, grid, u, p)
    return EigenResult(p, E / N, ScalarField(grid, u), res, it - 1, tuple(traj))


def solve_p(
    frame: VectorFieldFrame,
    grid: Grid,
    cfg: SolverConfig | None = None,
    u0=None,
) -> EigenResult:
    """Minimise ``E(u)`` subject to ``||u||_p = 1`` starting from a positive field.

    With ``cfg.n_inits > 1`` independent starts (seeds ``seed, seed+1, ...``)
    are run and the lowest eigenvalue is returned.
    """
    cfg = cfg or SolverConfig()
    if u0 is not None:
        start = u0.values if isinstance(u0, ScalarField) else np.asarray(u0, dtype=float)
        return _descend(frame, grid, cfg, start)
    best = None
    for k in range(cfg.n_inits):
        res = _descend(frame, grid, cfg, initial_field(frame, grid, cfg, cfg.seed + k))
        log.debug("init %d: lambda = %.12g after %d steps", k, res.lambda1, res.iterations)
        if best is None or res.lambda1 < best.lambda1:
            best = res
    return best


def second_mode_p2(
    frame: VectorFieldFrame, grid: Grid, cfg: SolverConfig | None, first: EigenResult
) -> ModeResult:
    """Smallest eigenpair on the orthogonal complement of ``first.u1`` (deflation)."""
    cfg = cfg or SolverConfig()
    if cfg.p != 2:
        raise ParameterError("second_mode_p2 requires p = 2")
    op = gradient_operator(frame, grid)
    A = op.stiffness()
    solve = sla.factorized(A.tocsc())
    q = first.u1.values / np.linalg.norm(first.u1.values)

    def project(x):
        return x - np.dot(q, x) * q

    rng = np.random.default_rng(cfg.seed)
    u = project(bump(grid) * rng.standard_normal(grid.n_interior))
    u /= _wnorm(u, grid)
    lam_old, res = np.inf, np.inf
    for it in range(1, cfg.max_iter + 1):
        u = project(solve(u))
        u /= _wnorm(u, grid)
        lam = float(np.dot(u, A @ u) / np.dot(u, u))
        res = _wnorm(A @ u - lam * u, grid)
        if res < cfg.tol_res and abs(lam_old - lam) <= cfg.tol_rel * lam:
            break
        lam_old = lam
    else:
        raise NonConvergenceError(
            f"deflated inverse iteration did not converge (residual {res:.3e})", residual=res
        )
    return ModeResult(lam, ScalarField(grid, _sign_normalize(u)), res, it)
