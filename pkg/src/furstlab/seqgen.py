"""Integer sequence families with exact terms and residues.

Every exponential family is evaluated modulo m through a single routine,
``tower_mod``, which walks the totient chain m, phi(m), phi(phi(m)), ...
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .arith import TRIAL_DIVISION_LIMIT, iroot, totient
from .errors import ConfigError, ModulusGuard, NotIncreasing, TooLarge

# Exponents below 2**EXACT_BITS are materialized; anything above is "huge"
# and in particular exceeds log2(m) for every modulus we accept.
EXACT_BITS = 256
MAX_EXACT_EXPONENT = 10 ** 7


# -- exponential towers ----------------------------------------------------

def _small_tower(bases: tuple[int, ...], top: int) -> int | None:
    """Exact value of b1^(b2^(...^top)) if it has at most EXACT_BITS bits."""
    v = top
    for b in reversed(bases):
        if v * math.log2(b) > EXACT_BITS:
            return None
        v = b ** v
    return v


def tower_mod(bases: tuple[int, ...], top: int, m: int) -> int:
    """b1^(b2^(...^(bk^top))) mod m, never materializing huge exponents.

    Uses a^e = a^((e mod phi(m)) + phi(m)) (mod m), valid whenever
    e >= log2(m) regardless of gcd(a, m).
    """
    if m < 1:
        raise ValueError("modulus must be >= 1")
    if m == 1:
        return 0
    if not bases:
        return top % m
    b, rest = bases[0], bases[1:]
    e = _small_tower(rest, top)
    if e is not None:
        return pow(b, e, m)
    if m > TRIAL_DIVISION_LIMIT:
        raise ModulusGuard(f"modulus {m} too large for the totient chain")
    phi = totient(m)
    return pow(b, tower_mod(rest, top, phi) + phi, m)


@dataclass(frozen=True)
class TowerExponent:
    """t_0 = top, t_{i+1} = base ** t_i; denotes t_height."""

    base: int
    height: int
    top: int

    def __post_init__(self):
        if self.base < 2 or self.height < 0 or self.top < 1:
            raise ValueError(f"invalid tower exponent {self}")

    def value(self) -> int:
        v = self.top
        for _ in range(self.height):
            if v > MAX_EXACT_EXPONENT:
                raise TooLarge("tower exponent too large to materialize")
            v = self.base ** v
        return v


def powmod_tower(a: int, t: TowerExponent, m: int) -> int:
    """a ** t mod m for a tower exponent t."""
    return tower_mod((a,) + (t.base,) * t.height, t.top, m)


# -- polynomials -----------------------------------------------------------

_TERM = re.compile(r"[+-]?[^+-]+")


@dataclass(frozen=True)
class Polynomial:
    """Integer polynomial in one variable, coefficients lowest degree first."""

    coeffs: tuple[int, ...]
    var: str = "n"

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c or [0]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: int) -> int:
        v = 0
        for c in reversed(self.coeffs):
            v = v * n + c
        return v

    def mod(self, n: int, m: int) -> int:
        v = 0
        for c in reversed(self.coeffs):
            v = (v * n + c) % m
        return v

    @classmethod
    def parse(cls, text: str) -> Polynomial:
        s = text.replace(" ", "").replace("**", "^")
        if not s:
            raise ConfigError("empty polynomial")
        var = next((ch for ch in s if ch.isalpha()), "n")
        coeffs: dict[int, int] = {}
        for term in _TERM.findall(s):
            if var in term:
                head, _, tail = term.partition(var)
                head = head.rstrip("*")
                coef = {"": 1, "+": 1, "-": -1}.get(head)
                if coef is None:
                    coef = int(head)
                power = int(tail[1:]) if tail.startswith("^") else 1
                if tail and not tail.startswith("^"):
                    raise ConfigError(f"cannot parse polynomial term {term!r}")
            else:
                coef, power = int(term), 0
            coeffs[power] = coeffs.get(power, 0) + coef
        deg = max(coeffs)
        return cls(tuple(coeffs.get(i, 0) for i in range(deg + 1)), var)

    def __str__(self) -> str:
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else self.var if i == 1 else f"{self.var}^{i}"
            if i == 0:
                body = str(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}*{mono}"
            parts.append((c < 0, body))
        if not parts:
            return "0"
        neg, body = parts[0]
        out = ("-" if neg else "") + body
        for neg, body in parts[1:]:
            out += (" - " if neg else " + ") + body
        return out


# -- sequence specs --------------------------------------------------------

class SequenceSpec:
    """Base class of the declarative integer sequences."""

    kind = ""

    def term(self, n: int) -> int:
        raise NotImplementedError

    def term_mod(self, n: int, m: int) -> int:
        if m < 1:
            raise ValueError("modulus must be >= 1")
        return self.term(n) % m

    def residues(self, m: int, indices: Iterable[int]) -> Iterator[int]:
        for n in indices:
            yield self.term_mod(n, m)

    @property
    def exponential_base(self) -> int | None:
        """The base b when terms are b^(something), else None."""
        return None

    def fields(self) -> dict[str, str]:
        raise NotImplementedError

    def to_text(self) -> str:
        body = ", ".join(f"{k}={v}" for k, v in self.fields().items())
        return f"kind={self.kind}, {body}"

    def __str__(self) -> str:
        return self.to_text()

    @staticmethod
    def from_text(text: str) -> SequenceSpec:
        return parse_spec(text)


@dataclass(frozen=True)
class Geometric(SequenceSpec):
    c: int
    kind = "geometric"

    def __post_init__(self):
        if self.c < 2:
            raise ConfigError("geometric sequences need c >= 2")

    def term(self, n):
        if n > MAX_EXACT_EXPONENT:
            raise TooLarge("use term_mod for this index")
        return self.c ** n

    def term_mod(self, n, m):
        return pow(self.c, n, m) if m > 1 else 0

    def residues(self, m, indices):
        if not (isinstance(indices, range) and indices.step == 1):
            yield from super().residues(m, indices)
            return
        r = pow(self.c, indices.start, m) if m > 1 else 0
        for _ in indices:
            yield r
            r = r * self.c % m

    @property
    def exponential_base(self):
        return self.c

    def fields(self):
        return {"c": str(self.c)}


@dataclass(frozen=True)
class PolynomialSeq(SequenceSpec):
    poly: Polynomial
    kind = "polynomial"

    def term(self, n):
        return self.poly(n)

    def term_mod(self, n, m):
        return self.poly.mod(n, m)

    def fields(self):
        return {"p": str(self.poly)}


@dataclass(frozen=True)
class DoubleExp(SequenceSpec):
    """a_n = c ** (d ** n)."""

    c: int
    d: int
    kind = "double_exp"

    def __post_init__(self):
        if self.c < 2 or self.d < 2:
            raise ConfigError("double_exp needs c, d >= 2")

    def term(self, n):
        e = self.d ** n
        if e > MAX_EXACT_EXPONENT:
            raise TooLarge("use term_mod for this index")
        return self.c ** e

    def term_mod(self, n, m):
        return tower_mod((self.c, self.d), n, m)

    @property
    def exponential_base(self):
        return self.c

    def fields(self):
        return {"c": str(self.c), "d": str(self.d)}


@dataclass(frozen=True)
class Tower(SequenceSpec):
    """t_0 = top(n), t_{i+1} = base ** t_i; a_n = t_height."""

    base: int
    height: int
    top: Polynomial
    kind = "tower"

    def __post_init__(self):
        if self.base < 2 or self.height < 1:
            raise ConfigError("tower needs base >= 2 and height >= 1")
        if self.top.degree < 1 or self.top.coeffs[-1] <= 0:
            raise ConfigError("tower top must be non-constant with positive leading coefficient")

    def term(self, n):
        return TowerExponent(self.base, self.height, self.top(n)).value()

    def term_mod(self, n, m):
        return tower_mod((self.base,) * self.height, self.top(n), m)

    @property
    def exponential_base(self):
        return self.base

    def fields(self):
        return {"base": str(self.base), "height": str(self.height), "top": str(self.top)}


@dataclass(frozen=True)
class FloorPower(SequenceSpec):
    """a_n = floor(n ** alpha) for rational alpha >= 1."""

    alpha: Fraction
    kind = "floor_power"

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.alpha < 1:
            raise ConfigError("floor_power needs alpha >= 1")

    def term(self, n):
        return iroot(n ** self.alpha.numerator, self.alpha.denominator)

    def fields(self):
        return {"alpha": str(self.alpha)}


@dataclass(frozen=True)
class Product(SequenceSpec):
    a: SequenceSpec
    b: SequenceSpec
    kind = "product"

    def term(self, n):
        return self.a.term(n) * self.b.term(n)

    def term_mod(self, n, m):
        return self.a.term_mod(n, m) * self.b.term_mod(n, m) % m

    def fields(self):
        return {"a": "{" + self.a.to_text() + "}", "b": "{" + self.b.to_text() + "}"}


def constant(c: int) -> PolynomialSeq:
    return PolynomialSeq(Polynomial((c,)))


def identity() -> PolynomialSeq:
    return PolynomialSeq(Polynomial((0, 1)))


# -- structured text -------------------------------------------------------

def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced braces in {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def parse_spec(text: str) -> SequenceSpec:
    """Parse ``kind=tower, base=3, height=4, top=m^2+1`` style text."""
    fields = {}
    for part in _split_top(text.strip()):
        key, sep, val = part.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {part!r}")
        val = val.strip()
        if val.startswith("{") and val.endswith("}"):
            val = val[1:-1]
        fields[key.strip()] = val.strip().strip('"')
    kind = fields.pop("kind", None)
    try:
        if kind == "geometric":
            return Geometric(int(fields["c"]))
        if kind == "polynomial":
            return PolynomialSeq(Polynomial.parse(fields["p"]))
        if kind == "double_exp":
            return DoubleExp(int(fields["c"]), int(fields["d"]))
        if kind == "tower":
            return Tower(int(fields["base"]), int(fields["height"]), Polynomial.parse(fields["top"]))
        if kind == "floor_power":
            return FloorPower(Fraction(fields["alpha"]))
        if kind == "product":
            return Product(parse_spec(fields["a"]), parse_spec(fields["b"]))
    except KeyError as exc:
        raise ConfigError(f"sequence kind {kind!r} is missing field {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown sequence kind {kind!r}")


# -- module-level operations -----------------------------------------------

def term(spec: SequenceSpec, n: int) -> int:
    return spec.term(n)


def term_mod(spec: SequenceSpec, n: int, m: int) -> int:
    return spec.term_mod(n, m)


@dataclass(frozen=True)
class RatioReport:
    max_deviation: Fraction
    argmax: int
    threshold: Fraction | None = None

    @property
    def non_lacunary_at_scale(self) -> bool | None:
        if self.threshold is None:
            return None
        return self.max_deviation < self.threshold


def ratio_test(spec: SequenceSpec, n_range: Iterable[int],
               threshold: Fraction | None = None) -> RatioReport:
    """max |a_{n+1}/a_n - 1| over the range, exactly."""
    best, arg = None, None
    for n in n_range:
        a, b = spec.term(n), spec.term(n + 1)
        if a <= 0 or b <= a:
            raise NotIncreasing(f"sequence is not positive increasing at n={n}")
        dev = Fraction(b, a) - 1
        if best is None or dev > best:
            best, arg = dev, n
    if best is None:
        raise ValueError("empty index range")
    return RatioReport(best, arg, threshold)
