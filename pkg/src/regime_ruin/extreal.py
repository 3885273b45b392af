"""Nonnegative extended reals with the 0 * inf = 0 convention."""

from __future__ import annotations

import functools
import math
import numbers


@functools.total_ordering
class ExtReal:
    """A value in [0, +inf].

    Arithmetic is closed: sums and products of ExtReals are ExtReals, and
    ``0 * inf == 0`` (IEEE floats would give nan).
    """

    __slots__ = ("value",)

    def __init__(self, value=0.0):
        if isinstance(value, ExtReal):
            value = value.value
        value = float(value)
        if math.isnan(value) or value < 0.0:
            raise ValueError(f"ExtReal must be in [0, inf], got {value!r}")
        self.value = value

    @classmethod
    def inf(cls) -> ExtReal:
        return cls(math.inf)

    @property
    def is_finite(self) -> bool:
        return self.value != math.inf

    def geo(self) -> ExtReal:
        """Sum of the geometric series 1 + x + x^2 + ..."""
        if self.value < 1.0:
            return ExtReal(1.0 / (1.0 - self.value))
        return INF

    def __add__(self, other):
        return ExtReal(self.value + _coerce(other))

    __radd__ = __add__

    def __mul__(self, other):
        o = _coerce(other)
        if self.value == 0.0 or o == 0.0:
            return ZERO
        return ExtReal(self.value * o)

    __rmul__ = __mul__

    def __float__(self):
        return self.value

    def __eq__(self, other):
        try:
            return self.value == _coerce(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self.value < _coerce(other)

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return f"ExtReal({self.value!r})"


def _coerce(x) -> float:
    if isinstance(x, ExtReal):
        return x.value
    if isinstance(x, numbers.Real):
        return float(x)
    raise TypeError(f"cannot combine ExtReal with {type(x).__name__}")


ZERO = ExtReal(0.0)
ONE = ExtReal(1.0)
INF = ExtReal(math.inf)
