"""Exact scalar coefficients: Gaussian rationals times formal powers of hbar and lam."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


class GaussianRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Rational)):
            return cls(Fraction(value))
        if isinstance(value, complex):
            raise TypeError("floating complex values are not exact; pass GaussianRational")
        raise TypeError(f"cannot coerce {value!r} to an exact scalar")

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            return self.im == 0 and self.re == other
        if not isinstance(other, GaussianRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianRational.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.coerce(other)
        n = other.re * other.re + other.im * other.im
        if n == 0:
            raise ZeroDivisionError("division by zero scalar")
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianRational((a * c + b * d) / n, (b * c - a * d) / n)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


ONE = GaussianRational(1)
I_UNIT = GaussianRational(0, 1)
# (-i)^k for k mod 4
MINUS_I_POWERS = (GaussianRational(1), GaussianRational(0, -1), GaussianRational(-1), GaussianRational(0, 1))


@dataclass(frozen=True)
class ScalarCoeff:
    """value * hbar**hbar_power * lam**lambda_power."""

    value: GaussianRational
    hbar_power: int = 0
    lambda_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "value", GaussianRational.coerce(self.value))
        if self.hbar_power < 0:
            raise ValueError("hbar_power must be non-negative")

    @classmethod
    def of(cls, value, hbar_power: int = 0, lambda_power: int = 0) -> "ScalarCoeff":
        return cls(GaussianRational.coerce(value), hbar_power, lambda_power)

    def __mul__(self, other: "ScalarCoeff") -> "ScalarCoeff":
        if not isinstance(other, ScalarCoeff):
            other = ScalarCoeff.of(other)
        return ScalarCoeff(
            self.value * other.value,
            self.hbar_power + other.hbar_power,
            self.lambda_power + other.lambda_power,
        )

    def conjugate(self) -> "ScalarCoeff":
        # hbar and lam are real symbols
        return ScalarCoeff(self.value.conjugate(), self.hbar_power, self.lambda_power)

    def is_zero(self) -> bool:
        return not self.value


def i_hbar(n: int = 1) -> ScalarCoeff:
    """n * i * hbar, the ubiquitous commutator prefactor."""
    return ScalarCoeff(GaussianRational(0, n), 1, 0)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
