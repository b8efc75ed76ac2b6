"""Exact arithmetic on the circle R/Z and the times-q map.

Everything here is rational. Irrational starting points are replaced by
rational surrogates that carry an explicit error bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from math import isqrt

from .errors import (
    InsufficientPrecision,
    InvalidDenominator,
    InvalidMultiplier,
    UnsupportedTag,
)


@total_ordering
@dataclass(frozen=True)
class CirclePoint:
    """A point of R/Z stored as a reduced fraction in [0, 1)."""

    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if not 0 <= self.value < 1:
            raise ValueError(f"{self.value} is not in [0, 1); use reduce()")

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    def __lt__(self, other: CirclePoint) -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"

    @classmethod
    def parse(cls, text: str) -> CirclePoint:
        num, _, den = text.strip().partition("/")
        return reduce(int(num), int(den) if den else 1)

    @classmethod
    def of(cls, x: Fraction | int) -> CirclePoint:
        x = Fraction(x)
        return cls(x - (x.numerator // x.denominator))


ZERO = CirclePoint(Fraction(0))


def reduce(num: int, den: int) -> CirclePoint:
    if den == 0:
        raise InvalidDenominator("denominator must be nonzero")
    if den < 0:
        num, den = -num, -den
    return CirclePoint(Fraction(num % den, den))


def times_q(x: CirclePoint, q: int) -> CirclePoint:
    if q < 2:
        raise InvalidMultiplier(f"multiplier must be >= 2, got {q}")
    return reduce(q * x.numerator, x.denominator)


def dist_to_zero(x: CirclePoint) -> Fraction:
    return min(x.value, 1 - x.value)


def circle_dist(x: CirclePoint, y: CirclePoint) -> Fraction:
    d = (x.value - y.value) % 1
    return min(d, 1 - d)


def orbit(x: CirclePoint, q: int, length: int) -> list[CirclePoint]:
    if length < 1:
        raise ValueError("orbit length must be >= 1")
    if q < 2:
        raise InvalidMultiplier(f"multiplier must be >= 2, got {q}")
    num, den = x.numerator, x.denominator
    out = []
    for _ in range(length):
        out.append(CirclePoint(Fraction(num, den)))
        num = q * num % den
    return out


def expansive_separation_time(x: CirclePoint, y: CirclePoint, q: int,
                              max_steps: int = 64) -> int | None:
    """First n <= max_steps with dist(T^n x, T^n y) > 1/(q+1), else None.

    Differences of exactly +-1/(q+1) are never separated strictly: that
    difference is mapped to its negative by T_q.
    """
    c = Fraction(1, q + 1)
    r = CirclePoint.of(x.value - y.value)
    for n in range(max_steps + 1):
        if dist_to_zero(r) > c:
            return n
        r = times_q(r, q)
    return None


# -- irrational surrogates -------------------------------------------------

_SQRT_TAGS = {"sqrt2": 2, "sqrt3": 3}


@dataclass(frozen=True)
class IrrationalSurrogate:
    point: CirclePoint
    error_exponent: int
    target_tag: str
    error_bound: Fraction
    certificate: int  # |p^2 - k q^2| for sqrt tags, |F_n^2 + F_n F_{n+1} - F_{n+1}^2| for golden

    def __post_init__(self):
        if self.error_exponent < 1:
            raise ValueError("error_exponent must be >= 1")
        if self.error_bound >= Fraction(1, 10 ** self.error_exponent):
            raise ValueError("error bound does not meet the requested digits")

    def check_multiplier(self, multiplier: int, resolution: Fraction) -> None:
        """Refuse when multiplier * error could exceed the resolution."""
        if multiplier * Fraction(1, 10 ** self.error_exponent) >= resolution:
            raise InsufficientPrecision(
                f"multiplier {multiplier} with surrogate error 1e-{self.error_exponent}"
                f" cannot resolve {float(resolution):.3g}")


def _sqrt_convergents(k: int):
    """Convergents p/q of sqrt(k) from the periodic continued fraction."""
    a0 = isqrt(k)
    m, d, a = 0, 1, a0
    p_prev, p = 1, a0
    q_prev, q = 0, 1
    yield p, q
    while True:
        m = d * a - m
        d = (k - m * m) // d
        a = (a0 + m) // d
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield p, q


def approx_irrational(tag: str, digits: int) -> IrrationalSurrogate:
    """Rational stand-in for the fractional part of a named constant.

    ``tag`` is ``sqrt2``, ``sqrt3``, ``golden`` or ``rational:a/b``.
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    target = Fraction(1, 10 ** digits)
    if tag in _SQRT_TAGS:
        k = _SQRT_TAGS[tag]
        lower = Fraction(isqrt(k * 10 ** 4), 100)  # sqrt(k) > lower
        for p, q in _sqrt_convergents(k):
            cert = abs(p * p - k * q * q)
            # |p/q - sqrt k| = |p^2 - k q^2| / (q^2 (p/q + sqrt k))
            bound = Fraction(cert, q * q) / (Fraction(p, q) + lower)
            if bound < target:
                return IrrationalSurrogate(reduce(p, q), digits, tag, bound, cert)
    if tag == "golden":
        # fractional part of the golden ratio is the root of x^2 + x - 1
        f0, f1 = 1, 2
        while True:
            cert = abs(f0 * f0 + f0 * f1 - f1 * f1)
            # |f(x)| = |x - g| (x + g + 1) and x + g + 1 > 2
            bound = Fraction(cert, 2 * f1 * f1)
            if bound < target:
                return IrrationalSurrogate(reduce(f0, f1), digits, tag, bound, cert)
            f0, f1 = f1, f0 + f1
    if tag.startswith("rational:"):
        x = Fraction(tag.split(":", 1)[1])
        return IrrationalSurrogate(CirclePoint.of(x), digits, tag, Fraction(0), 0)
    raise UnsupportedTag(f"unsupported surrogate tag {tag!r}")

