"""Exact dyadic phases, measured in cycles (one cycle = 2*pi radians)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=False)
class DyadicPhase:
    """A phase ``numerator / 2**exponent`` cycles, kept in ``[0, 1)``.

    Values are stored in lowest terms (odd numerator, or ``0/2**0``), so two
    equal phases always compare equal. Arithmetic never rounds.
    """

    numerator: int = 0
    exponent: int = 0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError(f"exponent must be >= 0, got {self.exponent}")
        num, exp = self.numerator % (1 << self.exponent), self.exponent
        if num == 0:
            exp = 0
        else:
            while num % 2 == 0:
                num //= 2
                exp -= 1
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "exponent", exp)

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> DyadicPhase:
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not dyadic")
        return cls(value.numerator % den, den.bit_length() - 1)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __add__(self, other: DyadicPhase) -> DyadicPhase:
        if not isinstance(other, DyadicPhase):
            return NotImplemented
        exp = max(self.exponent, other.exponent)
        num = (self.numerator << (exp - self.exponent)) + (other.numerator << (exp - other.exponent))
        return DyadicPhase(num, exp)

    def shift_down(self, bits: int) -> DyadicPhase:
        """Divide by ``2**bits`` (no wrap-around can occur)."""
        return DyadicPhase(self.numerator, self.exponent + bits)

    def __bool__(self) -> bool:
        return self.numerator != 0

    @property
    def cycles(self) -> float:
        return self.numerator / (1 << self.exponent)

    @property
    def radians(self) -> float:
        return 2 * math.pi * self.cycles

    def half_turns(self) -> Fraction:
        """The phase as an exact multiple of pi."""
        return 2 * self.as_fraction()

    def __repr__(self) -> str:
        return f"DyadicPhase({self.numerator}/2^{self.exponent})"


ZERO = DyadicPhase(0, 0)


# Gate angles are either exact multiples of pi (``Fraction``) or plain radians
# (``float``). Integers are treated as exact multiples of pi.


def to_radians(angle) -> float:
    if isinstance(angle, (Fraction, int)):
        return float(angle) * math.pi
    return float(angle)


def format_angle(angle, pi: str = "pi") -> str:
    """Render an angle, symbolically in multiples of pi when it is exact."""
    if isinstance(angle, (Fraction, int)):
        angle = Fraction(angle)
        if angle == 0:
            return "0"
        sign = "-" if angle < 0 else ""
        num, den = abs(angle.numerator), angle.denominator
        head = pi if num == 1 else f"{num}*{pi}"
        return f"{sign}{head}" if den == 1 else f"{sign}{head}/{den}"
    return f"{float(angle):.15g}"
