import numpy as np
import pytest

from subelliptic.errors import ParameterError, PreconditionError
from subelliptic.frames import euclidean, grushin, heisenberg
from subelliptic.grid import Disk, Domain, box, build_grid, unit_box
from subelliptic.metric import build_reachability_graph, control_distance_field, metric_ball

BUILTINS = [
    (euclidean(2), ((0.0, 1.0), (0.0, 1.0)), 24),
    (grushin(), ((-1.0, 1.0), (-1.0, 1.0)), 25),
    (heisenberg(), ((-1.0, 1.0),) * 3, 9),
]
IDS = ["euclidean", "grushin", "heisenberg"]


def _ordinal(g, x):
    return g.nearest_interior(x)


def test_euclidean_axis_edges_cost_h():
    g = build_grid(unit_box(2), 11)
    G = build_reachability_graph(euclidean(2), g)
    a = _ordinal(g, [0.5, 0.5])
    b = _ordinal(g, [0.6, 0.5])
    assert G.matrix[a, b] == pytest.approx(g.spacing[0])
    assert G.matrix.diagonal().sum() == 0
    assert all(c > 0 and np.isfinite(c) for _, _, c in G.edges)


def test_grushin_has_no_vertical_edge_on_degenerate_line():
    g = build_grid(box((-1, 1), (-1, 1)), 21)
    G = build_reachability_graph(grushin(), g)
    a = _ordinal(g, [0.0, 0.0])
    assert g.interior_points[a][0] == 0.0
    for dy in (0.1, 0.2, -0.1):
        assert G.matrix[a, _ordinal(g, [0.0, dy])] == 0
    assert G.matrix[a, _ordinal(g, [0.1, 0.0])] > 0


def test_euclidean_distance_within_three_percent():
    g = build_grid(unit_box(2), 128)
    df = control_distance_field(build_reachability_graph(euclidean(2), g), _ordinal(g, [0.5, 0.5]))
    src = g.interior_points[df.source]
    exact = np.linalg.norm(g.interior_points - src, axis=1)
    far = exact > 0
    assert df.values[df.source] == 0.0
    assert np.max(np.abs(df.values[far] - exact[far]) / exact[far]) <= 0.03


def _distances(frame, bounds, res, k=6, seed=4):
    g = build_grid(box(*bounds), res)
    G = build_reachability_graph(frame, g)
    nodes = np.random.default_rng(seed).choice(g.n_interior, size=k, replace=False)
    return nodes, np.array([control_distance_field(G, int(n)).values for n in nodes])


@pytest.mark.parametrize("frame,bounds,res", BUILTINS, ids=IDS)
def test_triangle_inequality(frame, bounds, res):
    nodes, d = _distances(frame, bounds, res)
    for i in range(len(nodes)):
        assert d[i, nodes[i]] == 0.0
        for j in range(len(nodes)):
            assert np.all(d[i] <= d[i, nodes[j]] + d[j] + 1e-9)


def _asymmetry(nodes, d):
    A = d[:, nodes]
    both = np.isfinite(A) & np.isfinite(A.T) & (A > 0)
    diff = np.abs(A[both] - A.T[both])
    return diff / np.minimum(A, A.T)[both], A


def test_euclidean_distance_is_symmetric():
    nodes, d = _distances(euclidean(2), ((0.0, 1.0), (0.0, 1.0)), 24, k=10)
    rel, _ = _asymmetry(nodes, d)
    assert rel.max() < 1e-12


def test_grushin_asymmetry_is_a_discretization_artifact():
    """Edge costs use the base node, so d is not symmetric near x = 0.

    The typical pair is within 2% at moderate resolution and the worst pair
    improves under refinement.
    """
    worst = []
    for res in (25, 49, 97):
        nodes, d = _distances(grushin(), ((-1.0, 1.0), (-1.0, 1.0)), res, k=20)
        rel, _ = _asymmetry(nodes, d)
        worst.append(rel.max())
        if res >= 49:
            assert np.median(rel) <= 0.02
    assert worst[0] > worst[1] > worst[2]


def test_heisenberg_reachability_is_mutual():
    nodes, d = _distances(heisenberg(), ((-1.0, 1.0),) * 3, 9)
    rel, A = _asymmetry(nodes, d)
    assert np.array_equal(np.isfinite(A), np.isfinite(A.T))
    assert np.all(rel <= 0.02)


def test_stencil_and_domain_monotonicity():
    fr = grushin()
    g = build_grid(box((-1, 1), (-1, 1)), 21)
    s = _ordinal(g, [0.2, 0.1])
    d2 = control_distance_field(build_reachability_graph(fr, g, 2), s).values
    d3 = control_distance_field(build_reachability_graph(fr, g, 3), s).values
    assert np.all(d3 <= d2 + 1e-12)

    small = build_grid(Domain(((-1.0, 1.0), (-1.0, 1.0)), Disk((0.0, 0.0), 0.7)), 21)
    ds = control_distance_field(build_reachability_graph(fr, small), [0.2, 0.1]).values
    lookup = {tuple(np.round(p, 12)): k for k, p in enumerate(g.interior_points)}
    idx = np.array([lookup[tuple(np.round(p, 12))] for p in small.interior_points])
    assert np.all(ds >= d2[idx] - 1e-12)


def test_balls():
    g = build_grid(unit_box(2), 41)
    G = build_reachability_graph(euclidean(2), g)
    df = control_distance_field(G, [0.5, 0.5])
    assert metric_ball(df, 0.5 * g.spacing[0]).tolist() == [df.source]
    assert metric_ball(df, np.inf).size == df.reachable.sum()
    r = 0.3
    ball = metric_ball(df, r)
    pts = g.interior_points
    exact = np.linalg.norm(pts - pts[df.source], axis=1)
    clear = np.abs(exact - r) > 0.03 * r
    assert set(ball[clear[ball]]) == set(np.flatnonzero((exact < r) & clear))
    mirrored = {_ordinal(g, [1 - x, y]) for x, y in pts[ball]}
    assert mirrored == set(ball.tolist())
    with pytest.raises(ParameterError):
        metric_ball(df, 0.0)


def test_source_outside_domain():
    g = build_grid(Domain(((0.0, 1.0),) * 2, Disk((0.5, 0.5), 0.3)), 21)
    G = build_reachability_graph(euclidean(2), g)
    with pytest.raises(PreconditionError):
        control_distance_field(G, [0.05, 0.05])
    with pytest.raises(PreconditionError):
        control_distance_field(G, g.n_interior)
