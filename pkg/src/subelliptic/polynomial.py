"""Sparse multivariate polynomials with exact differentiation.

Vector-field coefficients are stored as ``{exponent_tuple: coefficient}``
maps so that brackets can be formed without any finite differencing.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np


class Polynomial:
    """A polynomial in ``nvars`` variables.

    Parameters
    ----------
    nvars : int
        Number of variables.
    terms : mapping or iterable of (exponents, coefficient)
        Monomials. Zero coefficients are dropped and repeated exponents
        are summed.

    Examples
    --------
    >>> x = Polynomial.variable(0, 2)
    >>> (x * x).derivative(0)(np.array([3.0, 0.0]))
    6.0
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=()):
        self.nvars = int(nvars)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, ...], float] = {}
        for exps, coef in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(
                    f"exponent tuple {exps} has length {len(exps)}, expected {self.nvars}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, 0.0) + float(coef)
        self.terms = {e: c for e, c in sorted(acc.items()) if c != 0.0}

    @classmethod
    def constant(cls, value: float, nvars: int) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int, scale: float = 1.0) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): scale})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def derivative(self, var: int) -> "Polynomial":
        out = {}
        for exps, c in self.terms.items():
            k = exps[var]
            if k == 0:
                continue
            e = list(exps)
            e[var] = k - 1
            out[tuple(e)] = c * k
        return Polynomial(self.nvars, out)

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at points ``x`` of shape ``(..., nvars)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nvars:
            raise ValueError(f"point dimension {x.shape[-1]} != {self.nvars}")
        out = np.zeros(x.shape[:-1])
        for exps, c in self.terms.items():
            mono = np.full(x.shape[:-1], c)
            for j, e in enumerate(exps):
                if e:
                    mono = mono * x[..., j] ** e
            out = out + mono
        return out if out.ndim else float(out)

    def _check(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError("polynomials in different numbers of variables")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        return Polynomial(self.nvars, list(self.terms.items()) + list(other.terms.items()))

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.nvars, {e: c * other for e, c in self.terms.items()})
        self._check(other)
        out = []
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, tuple(self.terms.items())))

    def to_pairs(self) -> list[tuple[list[int], float]]:
        return [(list(e), c) for e, c in self.terms.items()]

    @classmethod
    def from_pairs(cls, nvars: int, pairs: Iterable) -> "Polynomial":
        return cls(nvars, [(tuple(e), c) for e, c in pairs])

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.terms.items():
            mono = "*".join(
                f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(exps) if e
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)
