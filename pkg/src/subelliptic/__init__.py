"""First eigenvalue of the subelliptic p-Laplacian for polynomial Hörmander frames."""

__version__ = "0.1.0"

from .discretize import (  # noqa: E402
    adjoint_apply,
    horizontal_gradient,
    lp_norm,
    p_energy,
    p_laplacian_apply,
    rayleigh_quotient,
)
from .eigensolve import EigenResult, SolverConfig, second_mode_p2, solve_p, solve_p2  # noqa: E402
from .frames import (  # noqa: E402
    VectorFieldFrame,
    build_spanning_set,
    builtin_frame,
    euclidean,
    grushin,
    heisenberg,
    homogeneous_dimension,
    load_frame,
)
from .grid import Domain, ScalarField, box, build_grid, unit_box  # noqa: E402
from .metric import build_reachability_graph, control_distance_field, metric_ball  # noqa: E402

__all__ = [
    "Domain",
    "EigenResult",
    "ScalarField",
    "SolverConfig",
    "VectorFieldFrame",
    "adjoint_apply",
    "box",
    "build_grid",
    "build_reachability_graph",
    "build_spanning_set",
    "builtin_frame",
    "control_distance_field",
    "euclidean",
    "grushin",
    "heisenberg",
    "homogeneous_dimension",
    "horizontal_gradient",
    "load_frame",
    "lp_norm",
    "metric_ball",
    "p_energy",
    "p_laplacian_apply",
    "rayleigh_quotient",
    "second_mode_p2",
    "solve_p",
    "solve_p2",
    "unit_box",
]
