"""Extended real numbers for support-function arithmetic.

Support functions over unbounded or empty regions take values in
R ∪ {+inf, -inf}, so the codomain needs explicit branches instead of IEEE
nan-producing arithmetic.  ``ExtReal`` wraps a float where ``math.inf`` and
``-math.inf`` encode the two infinities; the indeterminate sum of opposite
infinities raises instead of silently producing nan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering


@total_ordering
@dataclass(frozen=True, slots=True)
class ExtReal:
    value: float

    def __post_init__(self) -> None:
        if math.isnan(self.value):
            raise ValueError("ExtReal cannot hold nan")

    @classmethod
    def of(cls, x: "float | ExtReal") -> "ExtReal":
        if isinstance(x, ExtReal):
            return x
        return cls(float(x))

    @classmethod
    def plus_inf(cls) -> "ExtReal":
        return cls(math.inf)

    @classmethod
    def minus_inf(cls) -> "ExtReal":
        return cls(-math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_plus_inf(self) -> bool:
        return self.value == math.inf

    @property
    def is_minus_inf(self) -> bool:
        return self.value == -math.inf

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = ExtReal(float(other))
        if not isinstance(other, ExtReal):
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other: "ExtReal | float") -> bool:
        other = ExtReal.of(other)
        return self.value < other.value

    def __neg__(self) -> "ExtReal":
        return ExtReal(-self.value)

    def __add__(self, other: "ExtReal | float") -> "ExtReal":
        other = ExtReal.of(other)
        if self.is_plus_inf and other.is_minus_inf:
            raise ArithmeticError("indeterminate sum +inf + -inf")
        if self.is_minus_inf and other.is_plus_inf:
            raise ArithmeticError("indeterminate sum -inf + +inf")
        return ExtReal(self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other: "ExtReal | float") -> "ExtReal":
        return self + (-ExtReal.of(other))

    def scale(self, t: float) -> "ExtReal":
        """Multiply by a strictly positive scalar (the only scaling the
        support calculus needs; 0 * inf is deliberately unsupported)."""
        if not (t > 0.0):
            raise ArithmeticError("scale factor must be strictly positive")
        return ExtReal(self.value * t)

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        if self.is_plus_inf:
            return "ExtReal(+inf)"
        if self.is_minus_inf:
            return "ExtReal(-inf)"
        return f"ExtReal({self.value!r})"
