"""Length-unit weight bookkeeping.

Every scaled quantity carries an exponent of the length-unit space 𝕃.
Half-densities force half-integer exponents, so weights are kept as an
integer count of halves.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np


class WeightError(ValueError):
    pass


def as_weight(w) -> Fraction:
    """Coerce an int, Fraction or float weight to a half-integer Fraction."""
    f = Fraction(w).limit_denominator(2)
    if f.denominator not in (1, 2) or float(f) != float(w):
        raise WeightError(f"weight {w!r} is not a half-integer")
    return f


@dataclass(frozen=True)
class ScaledQuantity:
    """A value tagged with its 𝕃-weight (stored as numerator over 2)."""

    value: Any
    half_weight: int = 0

    @classmethod
    def of(cls, value, weight=0) -> "ScaledQuantity":
        return cls(value, int(as_weight(weight) * 2))

    @property
    def weight(self) -> Fraction:
        return Fraction(self.half_weight, 2)

    def __mul__(self, other):
        if isinstance(other, ScaledQuantity):
            return ScaledQuantity(self.value * other.value, self.half_weight + other.half_weight)
        return ScaledQuantity(self.value * other, self.half_weight)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScaledQuantity):
            return ScaledQuantity(self.value / other.value, self.half_weight - other.half_weight)
        return ScaledQuantity(self.value / other, self.half_weight)

    def __add__(self, other):
        if not isinstance(other, ScaledQuantity):
            raise WeightError("cannot add a bare number to a scaled quantity")
        if other.half_weight != self.half_weight:
            raise WeightError(f"weight mismatch in sum: {self.weight} vs {other.weight}")
        return ScaledQuantity(self.value + other.value, self.half_weight)

    def __sub__(self, other):
        return self + ScaledQuantity(-other.value, other.half_weight)

    def __neg__(self):
        return ScaledQuantity(-self.value, self.half_weight)

    def __pow__(self, n):
        n = Fraction(n)
        hw = Fraction(self.half_weight) * n
        if hw.denominator != 1:
            raise WeightError(f"power {n} leaves a non half-integer weight")
        return ScaledQuantity(self.value ** float(n), int(hw))

    def sqrt(self) -> "ScaledQuantity":
        return self ** Fraction(1, 2)

    def contract3(self, n_pairs: int = 1) -> "ScaledQuantity":
        """Integration against the unscaled volume l³d³p adds +3 per momentum."""
        return ScaledQuantity(self.value, self.half_weight + 6 * n_pairs)

    def is_unscaled(self) -> bool:
        return self.half_weight == 0

    def __repr__(self):
        return f"ScaledQuantity({self.value!r}, weight={self.weight})"


def close(a: ScaledQuantity, b: ScaledQuantity, rtol=1e-12) -> bool:
    return a.half_weight == b.half_weight and np.allclose(a.value, b.value, rtol=rtol, atol=0)
