import numpy as np
import pytest

from oracles import (
    closed_form_lambda1,
    dense_lambda1,
    dense_stencil_matrix,
    shooting_lambda1,
)
from reference_values import DENSE_GRUSHIN_64, SHOOTING_LAMBDA1


@pytest.mark.parametrize("p", sorted(SHOOTING_LAMBDA1))
def test_shooting_reproduces_frozen_values(p):
    assert shooting_lambda1(p) == pytest.approx(SHOOTING_LAMBDA1[p], rel=1e-10)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0, 4.0])
def test_shooting_agrees_with_closed_form(p):
    assert shooting_lambda1(p) == pytest.approx(closed_form_lambda1(p), rel=1e-9)


def test_shooting_scales_with_interval_length():
    # lambda_1(0, L) = L^(-p) lambda_1(0, 1)
    assert shooting_lambda1(3.0, 2.0) == pytest.approx(SHOOTING_LAMBDA1[3.0] / 8, rel=1e-9)


def test_closed_form_at_p2_is_pi_squared():
    assert closed_form_lambda1(2.0) == pytest.approx(np.pi**2, rel=1e-14)


def test_dense_oracle_reproduces_frozen_grushin_value():
    A = dense_stencil_matrix(lambda x: np.array([[1.0, 0.0], [0.0, x[0]]]), [(-1, 1), (-1, 1)], 64)
    assert np.allclose(A, A.T)
    assert dense_lambda1(A) == pytest.approx(DENSE_GRUSHIN_64, rel=1e-12)


def test_dense_oracle_on_euclidean_square_matches_five_point_formula():
    n = 12
    A = dense_stencil_matrix(lambda x: np.eye(2), [(0, 1), (0, 1)], n)
    h = 1 / (n - 1)
    exact = 2 * (4 / h**2) * np.sin(np.pi * h / 2) ** 2
    assert dense_lambda1(A) == pytest.approx(exact, rel=1e-12)
