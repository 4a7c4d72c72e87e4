"""Hörmander frames: polynomial vector fields, Lie brackets, homogeneous dimension.

A frame ``X_1, ..., X_m`` on R^n is stored as an ``m x n`` table of
polynomials ``b_ik`` so that ``X_i = sum_k b_ik(x) d/dx_k``.  Brackets are
formed symbolically, which keeps the step test free of differencing error.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EvaluationError,
    FrameMismatchError,
    HormanderError,
    StructuralError,
)
from .polynomial import Polynomial

SPAN_TOL = 1e-10
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class VectorField:
    """A (possibly derived) polynomial vector field.

    ``word`` is the bracket word ``J = (j_1, ..., j_k)`` (0-based field
    indices) such that the field equals ``[X_j1, [X_j2, ... X_jk]]``.
    """

    coeffs: tuple[Polynomial, ...]
    word: tuple[int, ...]
    frame_key: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.word)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c(x), x.shape[:-1]) for c in self.coeffs], axis=-1)

    def jacobian(self, x) -> np.ndarray:
        """Array ``J[..., k, j] = dY_k/dx_j``."""
        x = np.asarray(x, dtype=float)
        rows = []
        for c in self.coeffs:
            rows.append(
                np.stack(
                    [np.broadcast_to(c.derivative(j)(x), x.shape[:-1]) for j in range(self.n)],
                    axis=-1,
                )
            )
        return np.stack(rows, axis=-2)

    def label(self) -> str:
        if len(self.word) == 1:
            return f"X{self.word[0] + 1}"
        inner = f"X{self.word[-1] + 1}"
        for j in reversed(self.word[:-1]):
            inner = f"[X{j + 1},{inner}]"
        return inner


@dataclass(frozen=True)
class VectorFieldFrame:
    """``m`` polynomial vector fields on R^n.

    ``table[i][k]`` is the polynomial coefficient ``b_ik``.
    """

    table: tuple[tuple[Polynomial, ...], ...]
    label: str = "custom"

    def __post_init__(self):
        if not self.table or not self.table[0]:
            raise StructuralError("frame needs at least one field and one coordinate")
        n = len(self.table[0])
        if any(len(row) != n for row in self.table):
            raise StructuralError("ragged coefficient table")
        if self.m > n:
            raise StructuralError(f"m = {self.m} fields exceeds dimension n = {n}")
        if any(p.nvars != n for row in self.table for p in row):
            raise StructuralError("coefficient polynomials must be in n variables")

    @property
    def n(self) -> int:
        return len(self.table[0])

    @property
    def m(self) -> int:
        return len(self.table)

    @property
    def key(self) -> tuple:
        return (self.label, self.table)

    @property
    def fields(self) -> list[VectorField]:
        return [VectorField(tuple(row), (i,), self.key) for i, row in enumerate(self.table)]

    def coeff(self, x) -> np.ndarray:
        """Coefficient matrix ``[b_ik(x)]`` with shape ``(..., m, n)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([f(x) for f in self.fields], axis=-2)

    def coeff_jacobian(self, x) -> np.ndarray:
        """Array ``[db_ik/dx_j]`` with shape ``(..., m, n, n)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([f.jacobian(x) for f in self.fields], axis=-3)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "m": self.m,
            "coefficients": [[p.to_pairs() for p in row] for row in self.table],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VectorFieldFrame":
        try:
            n = int(data["n"])
            rows = data["coefficients"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed frame description: {exc}") from None
        if "m" in data and int(data["m"]) != len(rows):
            raise StructuralError(f"declared m = {data['m']} but {len(rows)} rows given")
        try:
            table = tuple(tuple(Polynomial.from_pairs(n, pairs) for pairs in row) for row in rows)
        except (ValueError, TypeError) as exc:
            raise StructuralError(f"malformed polynomial: {exc}") from None
        return cls(table, str(data.get("label", "custom")))


def load_frame(path) -> VectorFieldFrame:
    """Read a custom frame from a JSON file (see ``VectorFieldFrame.to_dict``)."""
    with open(Path(path), encoding="utf-8") as fh:
        return VectorFieldFrame.from_dict(json.load(fh))


def euclidean(n: int = 2) -> VectorFieldFrame:
    one, zero = Polynomial.constant(1.0, n), Polynomial(n)
    table = tuple(tuple(one if i == k else zero for k in range(n)) for i in range(n))
    return VectorFieldFrame(table, "euclidean")


def grushin() -> VectorFieldFrame:
    """``X1 = d/dx``, ``X2 = x d/dy``."""
    one, zero, x = Polynomial.constant(1.0, 2), Polynomial(2), Polynomial.variable(0, 2)
    return VectorFieldFrame(((one, zero), (zero, x)), "grushin")


def heisenberg() -> VectorFieldFrame:
    """``X1 = d/dx - (y/2) d/dt``, ``X2 = d/dy + (x/2) d/dt``."""
    one, zero = Polynomial.constant(1.0, 3), Polynomial(3)
    x = Polynomial.variable(0, 3, 0.5)
    y = Polynomial.variable(1, 3, -0.5)
    return VectorFieldFrame(((one, zero, y), (zero, one, x)), "heisenberg")


BUILTIN_FRAMES = {"euclidean": euclidean, "grushin": grushin, "heisenberg": heisenberg}


def builtin_frame(name: str, n: int | None = None) -> VectorFieldFrame:
    if name not in BUILTIN_FRAMES:
        raise KeyError(f"unknown built-in frame {name!r}")
    if name == "euclidean":
        return euclidean(2 if n is None else n)
    return BUILTIN_FRAMES[name]()


def evaluate_frame(frame: VectorFieldFrame, x) -> np.ndarray:
    """Return the ``m x n`` matrix whose row ``i`` is ``X_i I(x)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (frame.n,):
        raise StructuralError(f"expected a point in R^{frame.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise EvaluationError(f"non-finite point {x}")
    out = frame.coeff(x)
    bad = np.argwhere(~np.isfinite(out))
    if bad.size:
        i, k = bad[0]
        raise EvaluationError(f"coefficient b_{i + 1}{k + 1} is not finite at x = {x.tolist()}")
    return out


def bracket(Y: VectorField, Z: VectorField) -> VectorField:
    """Symbolic Lie bracket ``[Y, Z]``; its coefficients are ``J_Z Y - J_Y Z``."""
    if Y.frame_key != Z.frame_key:
        raise FrameMismatchError("cannot bracket fields from different frames")
    n = Y.n
    coeffs = []
    for k in range(n):
        acc = Polynomial(n)
        for j in range(n):
            acc = acc + Y.coeffs[j] * Z.coeffs[k].derivative(j)
            acc = acc - Z.coeffs[j] * Y.coeffs[k].derivative(j)
        coeffs.append(acc)
    return VectorField(tuple(coeffs), Y.word + Z.word, Y.frame_key)


def lie_bracket(Y: VectorField, Z: VectorField, x) -> tuple[np.ndarray, VectorField]:
    """Value of ``[Y, Z]`` at ``x`` together with the composable bracket field."""
    B = bracket(Y, Z)
    return B(np.asarray(x, dtype=float)), B


def commutators(frame: VectorFieldFrame, length: int) -> list[VectorField]:
    """All ``X_J`` with ``|J| = length`` in lexicographic word order."""
    base = frame.fields
    if length == 1:
        return base
    out = []
    shorter = {f.word: f for f in commutators(frame, length - 1)}
    for word in itertools.product(range(frame.m), repeat=length):
        out.append(bracket(base[word[0]], shorter[word[1:]]))
    return out


def _ranks(vectors: np.ndarray, span_tol: float) -> np.ndarray:
    # vectors: (S, l, n)
    sv = np.linalg.svd(vectors, compute_uv=False)
    return np.sum(sv > span_tol, axis=-1)


@dataclass(frozen=True)
class SpanningSet:
    vectors: tuple[VectorField, ...]
    step: int
    sample_points: np.ndarray = field(repr=False)

    @property
    def degrees(self) -> list[int]:
        return [Y.degree for Y in self.vectors]

    @property
    def n(self) -> int:
        return self.vectors[0].n

    def evaluate(self, x) -> np.ndarray:
        """Stacked values, shape ``(..., l, n)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([Y(x) for Y in self.vectors], axis=-2)


def build_spanning_set(
    frame: VectorFieldFrame,
    samples,
    s_max: int = 4,
    span_tol: float = SPAN_TOL,
) -> SpanningSet:
    """Greedily select commutators until they span R^n at every sample.

    Frame fields are always kept as ``Y_1..Y_m``; longer commutators are
    appended (shorter word first, then lexicographic) when they raise the
    rank at some sample point.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise StructuralError("no sample points")
    if samples.shape[1] != frame.n:
        raise StructuralError(f"samples must have {frame.n} coordinates")
    if s_max < 1:
        raise StructuralError("s_max must be >= 1")

    chosen = list(frame.fields)
    values = [Y(samples) for Y in chosen]
    rank = _ranks(np.stack(values, axis=1), span_tol)
    step = 1
    while np.any(rank < frame.n):
        step += 1
        if step > s_max:
            worst = int(np.argmin(rank))
            raise HormanderError(
                f"Hörmander condition not certified at step <= {s_max}: "
                f"rank {int(rank[worst])} < {frame.n} at sample {samples[worst].tolist()}"
            )
        for cand in commutators(frame, step):
            if cand.is_zero:
                continue
            val = cand(samples)
            new_rank = _ranks(np.stack(values + [val], axis=1), span_tol)
            if np.any(new_rank > rank):
                chosen.append(cand)
                values.append(val)
                rank = new_rank
                if np.all(rank >= frame.n):
                    break
    return SpanningSet(tuple(chosen), step, samples)


@dataclass(frozen=True)
class NSWEvaluation:
    """Terms ``(d(I), |a_I(x)|)`` of the Nagel–Stein–Wainger polynomial."""

    point: np.ndarray
    terms: list[tuple[int, float]]

    def __call__(self, r: float) -> float:
        return float(sum(c * r**d for d, c in self.terms))


def _subsets(ss: SpanningSet) -> list[tuple[int, ...]]:
    l, n = len(ss.vectors), ss.n
    if l < n:
        raise StructuralError(f"spanning set has {l} < n = {n} vectors")
    return list(itertools.combinations(range(l), n))


def nsw_coefficients(ss: SpanningSet, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``nsw_terms``: exponents ``(T,)`` and ``|a_I|`` of shape ``(P, T)``."""
    subsets = _subsets(ss)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = ss.evaluate(pts)  # (P, l, n)
    deg = np.array(ss.degrees)
    exps = np.array([int(deg[list(I)].sum()) for I in subsets])
    coefs = np.stack([np.abs(np.linalg.det(vals[:, list(I), :])) for I in subsets], axis=-1)
    return exps, coefs


def nsw_terms(ss: SpanningSet, x) -> NSWEvaluation:
    x = np.asarray(x, dtype=float)
    exps, coefs = nsw_coefficients(ss, x[None, :])
    return NSWEvaluation(x, [(int(e), float(c)) for e, c in zip(exps, coefs[0])])


def _q_from_coeffs(exps, coefs, zero_tol, points):
    big = np.iinfo(np.int64).max
    masked = np.where(coefs > zero_tol, exps[None, :], big)
    q = masked.min(axis=1)
    if np.any(q == big):
        bad = points[int(np.argmax(q == big))]
        raise HormanderError(f"span failure at x = {bad.tolist()}")
    return q


def pointwise_Q(ss: SpanningSet, x, zero_tol: float = ZERO_TOL) -> int:
    """Smallest exponent of ``Lambda(x, r)`` carrying a nonzero coefficient."""
    x = np.asarray(x, dtype=float)
    exps, coefs = nsw_coefficients(ss, x[None, :])
    return int(_q_from_coeffs(exps, coefs, zero_tol, x[None, :])[0])


def pointwise_Q_field(ss: SpanningSet, points, zero_tol: float = ZERO_TOL) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exps, coefs = nsw_coefficients(ss, pts)
    return _q_from_coeffs(exps, coefs, zero_tol, pts)


def local_Q(ss: SpanningSet, samples, zero_tol: float = ZERO_TOL) -> int:
    return int(pointwise_Q_field(ss, samples, zero_tol).max())


def homogeneous_dimension(
    frame: VectorFieldFrame,
    samples: Sequence,
    s_max: int = 4,
    span_tol: float = SPAN_TOL,
    zero_tol: float = ZERO_TOL,
) -> tuple[int, SpanningSet]:
    """Convenience: build the spanning set on ``samples`` and return ``(Q, ss)``."""
    ss = build_spanning_set(frame, samples, s_max, span_tol)
    return local_Q(ss, ss.sample_points, zero_tol), ss
