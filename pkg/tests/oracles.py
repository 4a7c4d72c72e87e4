"""Reference values computed without the package's solvers.

* ``shooting_lambda1``: first Dirichlet eigenvalue of the 1D p-Laplacian on
  (0, L) by shooting on the first-order system for (u, phi_p(u')).
* ``closed_form_lambda1``: the same quantity from ``(p-1) (pi_p / L)^p``.
* ``dense_stencil_matrix``: the discrete operator re-assembled node by node
  from the one-sided difference rule, for a dense eigensolver.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.optimize import brentq


def closed_form_lambda1(p: float, length: float = 1.0) -> float:
    pi_p = 2 * np.pi / (p * np.sin(np.pi / p))
    return (p - 1) * (pi_p / length) ** p


def _quarter_time(lam: float, p: float) -> float:
    """Time at which phi_p(u') first vanishes, starting from u=0, u'=1."""

    def rhs(_, y):
        u, w = y
        du = np.sign(w) * abs(w) ** (1 / (p - 1))
        return [du, -lam * np.sign(u) * abs(u) ** (p - 1)]

    def turn(_, y):
        return y[1]

    turn.terminal = True
    turn.direction = -1
    sol = solve_ivp(rhs, (0, 50), [0.0, 1.0], events=turn, rtol=1e-12, atol=1e-14, max_step=0.01)
    return float(sol.t_events[0][0])


def shooting_lambda1(p: float, length: float = 1.0) -> float:
    """Eigenvalue for which the first extremum of u sits at ``length / 2``."""
    # the turning time scales like lam^(-1/p); bracket around the guess
    guess = closed_form_lambda1(p, length)
    return brentq(lambda lam: _quarter_time(lam, p) - length / 2, guess / 3, guess * 3, xtol=1e-13, rtol=1e-13)


def dense_stencil_matrix(coeff, bounds, resolution) -> np.ndarray:
    """``1/2 sum_s G_s^T G_s`` on the interior nodes of a box, assembled densely.

    ``coeff(x)`` returns the ``m x n`` matrix ``b_ik(x)``.  For each node ``r``
    of the box, orientation ``s`` and field ``i`` the difference row is
    ``sum_k b_ik(x_r) s (e_{r + s e_k} - e_r) / h_k`` with zero values on
    exterior nodes.
    """
    n = len(bounds)
    shape = (resolution,) * n
    h = [(hi - lo) / (resolution - 1) for lo, hi in bounds]
    axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]

    def interior(idx):
        return all(0 < j < resolution - 1 for j in idx)

    inner = [idx for idx in np.ndindex(*shape) if interior(idx)]
    col = {idx: c for c, idx in enumerate(inner)}
    A = np.zeros((len(inner), len(inner)))
    for idx in np.ndindex(*shape):
        x = np.array([axes[k][idx[k]] for k in range(n)])
        b = np.atleast_2d(coeff(x))
        for s in (1, -1):
            for i in range(b.shape[0]):
                row = {}
                for k in range(n):
                    if b[i, k] == 0:
                        continue
                    nb = list(idx)
                    nb[k] += s
                    nb = tuple(nb)
                    for node, w in ((nb, s * b[i, k] / h[k]), (idx, -s * b[i, k] / h[k])):
                        if node in col:
                            row[col[node]] = row.get(col[node], 0.0) + w
                cols = np.array(list(row), dtype=int)
                vals = np.array(list(row.values()))
                if cols.size:
                    A[np.ix_(cols, cols)] += 0.5 * np.outer(vals, vals)
    return A


def dense_lambda1(A: np.ndarray) -> float:
    return float(eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0])
