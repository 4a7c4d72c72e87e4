"""Machine-checkable versions of the qualitative spectral statements.

Every check returns a ``CheckReport``.  Constants that are only known to
exist (Harnack, Hölder) are checked for finiteness and for stability under
one grid refinement via the ``reference`` argument, which takes the
statistic measured on the coarser grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .discretize import horizontal_gradient, lp_norm, p_energy
from .eigensolve import EigenResult, SolverConfig, second_mode_p2, solve_p, solve_p2
from .errors import NonConvergenceError, PreconditionError
from .frames import VectorFieldFrame, euclidean, grushin, heisenberg
from .grid import Domain, Grid, ScalarField, SubBox, build_grid, unit_box
from .metric import DistanceField, build_reachability_graph, control_distance_field, metric_ball

REFINEMENT_GROWTH = 1.5


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    statistic: float
    threshold: float
    details: str = ""
    inconclusive: bool = False

    @property
    def verdict(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"


def _inconclusive(name: str, threshold: float, err: Exception) -> CheckReport:
    return CheckReport(name, False, float("nan"), threshold, f"solver: {err}", inconclusive=True)


# --- convexity -------------------------------------------------------------


def _binomial_tail(s: np.ndarray, alpha: float, terms: int = 60) -> np.ndarray:
    """``(1+s)^alpha - 1 - alpha*s`` for small ``|s|`` by its binomial series."""
    coefs = [alpha * (alpha - 1) / 2]
    for k in range(2, terms):
        coefs.append(coefs[-1] * (alpha - k) / (k + 1))
    acc = np.zeros_like(s)
    for c in reversed(coefs):
        acc = acc * s + c
    return acc * s * s


def convexity_ratio(w1: np.ndarray, w2: np.ndarray, p: float) -> np.ndarray:
    """Largest ``C`` for which the convexity inequality holds at each pair.

    For ``p >= 2`` the remainder term is ``C |w2 - w1|^p``; for ``1 < p < 2``
    it is ``C |w2 - w1|^2 / (|w2| + |w1|)^(2-p)``.  Pairs with ``w1 = w2``
    give NaN.  The slack is evaluated without cancellation through
    ``|w2|^p = |w1|^p (1 + s)^(p/2)``.
    """
    w1, w2 = np.atleast_2d(w1), np.atleast_2d(w2)
    delta = w2 - w1
    a2 = np.sum(w1 * w1, axis=-1)
    q = np.sum(delta * delta, axis=-1)
    t = 2.0 * np.sum(w1 * delta, axis=-1)
    alpha = p / 2
    slack = np.empty_like(a2)
    zero = a2 == 0
    slack[zero] = q[zero] ** alpha
    nz = ~zero
    s = (t[nz] + q[nz]) / a2[nz]
    h = np.empty_like(s)
    small = np.abs(s) < 0.25
    h[small] = _binomial_tail(s[small], alpha)
    big = ~small
    h[big] = (1 + s[big]) ** alpha - 1 - alpha * s[big]
    slack[nz] = a2[nz] ** alpha * (h + alpha * q[nz] / a2[nz])
    if p >= 2:
        remainder = q**alpha
    else:
        remainder = q / (np.sqrt(a2) + np.sqrt(np.sum(w2 * w2, axis=-1))) ** (2 - p)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = slack / remainder
    ratio[q == 0] = np.nan
    return ratio


def _convexity_samples(rng, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    scale = 10.0 ** rng.uniform(-2, 2, size=(2, n, 1))
    w = rng.standard_normal((2, n, m)) * scale
    return w[0], w[1]


def convexity_check(p: float, n_samples: int = 100_000, seed: int = 0, m_dim: int = 2) -> CheckReport:
    """Empirical infimum of the admissible constant, revalidated at half its value."""
    rng = np.random.default_rng(seed)
    ratio = convexity_ratio(*_convexity_samples(rng, n_samples, m_dim), p)
    skipped = int(np.isnan(ratio).sum())
    c_hat = float(np.nanmin(ratio)) if skipped < len(ratio) else float("nan")
    fresh = convexity_ratio(*_convexity_samples(np.random.default_rng(seed + 1), n_samples, m_dim), p)
    fresh_ok = bool(np.all(np.isnan(fresh) | (fresh >= c_hat / 2)))
    passed = bool(c_hat > 0 and fresh_ok)
    return CheckReport(
        f"convexity(p={p:g},m={m_dim})",
        passed,
        c_hat,
        0.0,
        f"C_hat={c_hat!r}; skipped={skipped}; fresh sample at C_hat/2 {'holds' if fresh_ok else 'violated'}",
    )


# --- eigenfunction shape ---------------------------------------------------


def positivity_check(res) -> CheckReport:
    u = res.u1 if isinstance(res, EigenResult) else res
    stat = float(np.min(u.values))
    return CheckReport("positivity", stat > 0, stat, 0.0, "min interior value of u1")


def sign_change_check(u: ScalarField, expect_change: bool = False) -> CheckReport:
    stat = float(np.min(u.values) * np.max(u.values))
    changes = stat < 0
    return CheckReport(
        "sign_change" if expect_change else "no_sign_change",
        changes == expect_change,
        stat,
        0.0,
        "changes sign" if changes else "no sign change",
    )


def _lp_distance(a: np.ndarray, b: np.ndarray, grid: Grid, p: float) -> float:
    return float((np.sum(np.abs(a - b) ** p) * grid.cell_volume) ** (1 / p))


def simplicity_check(
    frame: VectorFieldFrame,
    grid: Grid,
    cfg: SolverConfig,
    k: int = 10,
    seeds: Sequence[int] | None = None,
    dist_tol: float = 1e-3,
    spread_tol: float = 1e-6,
) -> CheckReport:
    """Solve from ``k`` random positive starts; all minimisers must coincide."""
    seeds = list(seeds) if seeds is not None else [cfg.seed + j for j in range(k)]
    if len(seeds) < 2:
        raise PreconditionError("simplicity needs at least two initialisations")
    name = f"simplicity({frame.label},p={cfg.p:g})"
    runs = []
    for s in seeds:
        try:
            runs.append(solve_p(frame, grid, replace(cfg, init="random", seed=s, n_inits=1)))
        except NonConvergenceError as err:
            return _inconclusive(name, dist_tol, err)
    p = cfg.p
    us = []
    for r in runs:
        u = r.u1.values / lp_norm(r.u1, p)
        us.append(-u if u.sum() < 0 else u)
    dist = max(_lp_distance(a, b, grid, p) for a, b in itertools.combinations(us, 2))
    lams = np.array([r.lambda1 for r in runs])
    spread = float((lams.max() - lams.min()) / lams.mean())
    return CheckReport(
        name,
        dist < dist_tol and spread < spread_tol,
        dist,
        dist_tol,
        f"lambda spread={spread:.3e} (tol {spread_tol:g}); runs={len(runs)}",
    )


# --- metric-based regularity -----------------------------------------------


def harnack_check(
    u1: ScalarField,
    df: DistanceField,
    r: float,
    reference: float | None = None,
    growth: float = REFINEMENT_GROWTH,
) -> CheckReport:
    """``max/min`` of ``u1`` on the metric ball of radius ``r``."""
    grid = u1.grid
    big = metric_ball(df, 3 * r)
    if np.any(grid.interior_neighbors()[big]):
        raise PreconditionError(f"the ball of radius 3r = {3 * r:g} reaches the boundary of Omega")
    ball = metric_ball(df, r)
    vals = u1.values[ball]
    lo, hi = float(vals.min()), float(vals.max())
    stat = hi / lo if lo > 0 else float("inf")
    ok = bool(np.isfinite(stat))
    detail = f"ball nodes={ball.size}"
    if reference is not None:
        ok = ok and stat <= growth * reference
        detail += f"; coarse quotient={reference!r}"
    return CheckReport("harnack", ok, stat, growth * reference if reference else float("inf"), detail)


def holder_check(
    u: ScalarField,
    dfs: Iterable[DistanceField],
    alpha: float,
    reference: float | None = None,
    growth: float = REFINEMENT_GROWTH,
) -> CheckReport:
    """``max |u(x) - u(y)| / d_X(x, y)^alpha`` over (source, node) pairs."""
    if not 0 < alpha <= 1:
        raise PreconditionError("alpha must lie in (0, 1]")
    stat, skipped, pairs = 0.0, 0, 0
    for df in dfs:
        d = df.values.copy()
        d[df.source] = np.nan
        reach = np.isfinite(d)
        skipped += int(np.sum(np.isinf(d)))
        diff = np.abs(u.values[reach] - u.values[df.source])
        pairs += int(reach.sum())
        if reach.any():
            stat = max(stat, float(np.max(diff / d[reach] ** alpha)))
    ok = bool(np.isfinite(stat))
    detail = f"pairs={pairs}; unreachable skipped={skipped}"
    if reference is not None:
        ok = ok and stat <= growth * reference
        detail += f"; coarse statistic={reference!r}"
    return CheckReport(
        f"holder(alpha={alpha:g})", ok, stat, growth * reference if reference else float("inf"), detail
    )


# --- variational statements ------------------------------------------------


def random_admissible_fields(grid: Grid, n_fields: int, seed: int = 0, modes: int = 4, terms: int = 6):
    """Masked sums of products of sines vanishing on the box boundary."""
    rng = np.random.default_rng(seed)
    pts = grid.interior_points
    lo = np.array([b[0] for b in grid.bounds])
    L = np.array([b[1] - b[0] for b in grid.bounds])
    xi = (pts - lo) / L
    out = []
    while len(out) < n_fields:
        u = np.zeros(len(pts))
        for _ in range(terms):
            k = rng.integers(1, modes + 1, size=grid.ndim)
            u += rng.standard_normal() * np.prod(np.sin(np.pi * k * xi), axis=1)
        if np.any(u != 0):
            out.append(ScalarField(grid, u))
    return out


def poincare_check(
    frame: VectorFieldFrame,
    grid: Grid,
    res: EigenResult,
    n_fields: int = 100,
    seed: int = 0,
    slack: float = 1e-10,
    sharp_tol: float = 1e-8,
) -> CheckReport:
    """``||u||_p^p <= E(u) / lambda1`` on random fields, with equality at ``u1``."""
    p, lam = res.p, res.lambda1
    worst = 0.0
    for u in random_admissible_fields(grid, n_fields, seed):
        lhs = lp_norm(u, p) ** p
        rhs = p_energy(horizontal_gradient(frame, grid, u), p) / lam
        worst = max(worst, lhs / rhs)
    lhs1 = lp_norm(res.u1, p) ** p
    rhs1 = p_energy(horizontal_gradient(frame, grid, res.u1), p) / lam
    sharp = abs(lhs1 - rhs1) / rhs1
    ok = worst <= 1 + slack and sharp <= sharp_tol
    return CheckReport(
        f"poincare({frame.label},p={p:g})",
        bool(ok),
        worst,
        1 + slack,
        f"max lambda1*||u||^p/E over {n_fields} fields; sharpness error at u1={sharp:.3e}",
    )


def lattice_statistic(frame, grid: Grid, samples: Sequence[ScalarField], p: float = 2.0) -> float:
    stat = 0.0
    for u in samples:
        e = p_energy(horizontal_gradient(frame, grid, u), p)
        e_abs = p_energy(horizontal_gradient(frame, grid, abs(u)), p)
        stat = max(stat, abs(e_abs - e) / e)
    return stat


def lattice_check(
    frame: VectorFieldFrame,
    grid: Grid,
    samples: Sequence[ScalarField],
    p: float = 2.0,
    reference: float | None = None,
) -> CheckReport:
    """Discrepancy ``|E(|u|) - E(u)| / E(u)``; must shrink relative to ``reference``."""
    stat = lattice_statistic(frame, grid, samples, p)
    ok = bool(np.isfinite(stat))
    if reference is not None:
        ok = ok and (stat < reference or stat == 0.0)
    return CheckReport(
        f"lattice({frame.label})",
        ok,
        stat,
        reference if reference is not None else float("inf"),
        f"{len(samples)} samples" + (f"; coarse statistic={reference!r}" if reference is not None else ""),
    )


def _first_eigen(frame, grid, cfg: SolverConfig) -> EigenResult:
    return solve_p2(frame, grid, cfg) if cfg.p == 2 else solve_p(frame, grid, cfg)


def monotonicity_check(
    frame: VectorFieldFrame,
    cfg: SolverConfig,
    inner: Grid,
    outer: Grid,
    tol: float = 1e-10,
) -> CheckReport:
    """``lambda1(inner) >= lambda1(outer)`` for nested masks on one lattice."""
    if inner.bounds != outer.bounds or inner.shape != outer.shape:
        raise PreconditionError("inner and outer grids must share the lattice")
    if np.any(inner.interior_mask & ~outer.interior_mask):
        raise PreconditionError("inner mask is not contained in the outer mask")
    name = f"monotonicity({frame.label},p={cfg.p:g})"
    try:
        lam_in = _first_eigen(frame, inner, cfg).lambda1
        lam_out = _first_eigen(frame, outer, cfg).lambda1
    except NonConvergenceError as err:
        return _inconclusive(name, -tol, err)
    stat = lam_in - lam_out
    return CheckReport(
        name, stat >= -tol, stat, -tol, f"lambda1(inner)={lam_in!r}; lambda1(outer)={lam_out!r}"
    )



# --- suites ----------------------------------------------------------------

SUITES = {
    "quick": dict(
        n_samples=2_000, ms=(2,), res2=24, res3=8, simp_res=16, simp_k=3,
        pair=(24, 48), holder_pair=(16, 32), n_fields=20,
    ),
    "full": dict(
        n_samples=100_000, ms=(2, 3), res2=64, res3=16, simp_res=48, simp_k=10,
        pair=(64, 128), holder_pair=(48, 96), n_fields=100,
    ),
}


def standard_grid(frame: VectorFieldFrame, resolution: int, half: bool = False) -> Grid:
    """Unit box for the Euclidean frame, ``[-1, 1]^n`` otherwise, or the centred half-size sub-box.

    The non-Euclidean boxes are centred at the origin: with the one-sided
    stencil the discrete ``u1`` of the Heisenberg frame can dip slightly
    below zero near faces far from the origin (no discrete maximum principle
    for the mixed coefficients).
    """
    if frame.label != "euclidean":
        bounds = ((-1.0, 1.0),) * frame.n
        inner = SubBox((-0.5,) * frame.n, (0.5,) * frame.n)
    else:
        bounds = ((0.0, 1.0),) * frame.n
        inner = SubBox((0.25,) * frame.n, (0.75,) * frame.n)
    return build_grid(Domain(bounds, inner if half else None), resolution)


def _harnack_inputs(resolution: int):
    frame = euclidean(2)
    grid = build_grid(unit_box(2), resolution)
    u1 = solve_p2(frame, grid).u1
    graph = build_reachability_graph(frame, grid)
    return u1, control_distance_field(graph, grid.nearest_interior([0.5, 0.5]))


def _holder_inputs(resolution: int):
    frame = grushin()
    grid = standard_grid(frame, resolution)
    u1 = solve_p2(frame, grid).u1
    graph = build_reachability_graph(frame, grid)
    sources = [grid.nearest_interior(x) for x in ([0.0, 0.0], [0.5, 0.25], [-0.5, -0.5])]
    return u1, [control_distance_field(graph, k) for k in sources]


def _lattice_samples(resolution: int):
    grid = build_grid(unit_box(2), resolution)
    u = ScalarField.from_function(grid, lambda x, y: np.sin(2 * np.pi * x) * np.sin(np.pi * y))
    return grid, [u]


def run_suite(name: str = "quick", seed: int = 0) -> list[CheckReport]:
    """Run every check on the built-in frames at the sizes of suite ``name``."""
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    s = SUITES[name]
    reports = [
        convexity_check(p, s["n_samples"], seed, m) for p in (1.5, 2.0, 3.0, 4.0) for m in s["ms"]
    ]

    cfg2 = SolverConfig(p=2.0, seed=seed)
    for frame in (euclidean(2), grushin(), heisenberg()):
        resolution = s["res3"] if frame.n == 3 else s["res2"]
        grid = standard_grid(frame, resolution)
        first = solve_p2(frame, grid, cfg2)
        reports.append(replace(positivity_check(first), name=f"positivity({frame.label})"))
        reports.append(replace(sign_change_check(first.u1), name=f"no_sign_change({frame.label})"))
        reports.append(poincare_check(frame, grid, first, s["n_fields"], seed))
        half = standard_grid(frame, resolution, half=True)
        reports.append(monotonicity_check(frame, cfg2, half, grid))

    sq = euclidean(2)
    grid = build_grid(unit_box(2), s["res2"])
    second = second_mode_p2(sq, grid, cfg2, solve_p2(sq, grid, cfg2))
    reports.append(replace(sign_change_check(second.mode, expect_change=True), name="sign_change(second_mode)"))

    gr = grushin()
    reports.append(simplicity_check(gr, standard_grid(gr, s["simp_res"]), SolverConfig(p=2.5, seed=seed), s["simp_k"]))

    lo, hi = s["pair"]
    coarse = harnack_check(*_harnack_inputs(lo), 0.1)
    reports.append(harnack_check(*_harnack_inputs(hi), 0.1, reference=coarse.statistic))
    coarse = lattice_check(sq, *_lattice_samples(lo))
    reports.append(lattice_check(sq, *_lattice_samples(hi), reference=coarse.statistic))

    lo, hi = s["holder_pair"]
    coarse = holder_check(*_holder_inputs(lo), 0.5)
    reports.append(holder_check(*_holder_inputs(hi), 0.5, reference=coarse.statistic))
    return reports
