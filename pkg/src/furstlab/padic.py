"""Finite-precision p-adic integers, exp/log, Mahler coefficients and the
stride certificates that turn a^n into an analytic function of n.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arith import is_prime, multiplicative_order, valuation
from .errors import (
    ExpDomainError,
    GuardError,
    LogDomainError,
    NoAnalyticModel,
    NotAUnit,
    NotPrime,
)
from .seqgen import SequenceSpec


def _check_prime(p: int) -> None:
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")


@dataclass(frozen=True)
class PadicInt:
    """Element of Z/p^N viewed as a p-adic integer known to precision N."""

    p: int
    N: int
    r: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("precision must be >= 1")
        object.__setattr__(self, "r", self.r % self.p ** self.N)

    @classmethod
    def of(cls, value: int | Fraction, p: int, N: int) -> PadicInt:
        """Image of an integer or p-integral rational."""
        value = Fraction(value)
        if value.denominator % p == 0:
            raise NotAUnit(f"{value} is not a {p}-adic integer")
        m = p ** N
        return cls(p, N, value.numerator * pow(value.denominator, -1, m))

    @property
    def modulus(self) -> int:
        return self.p ** self.N

    @property
    def valuation(self) -> int | None:
        """Exact valuation, or None when the element is 0 mod p^N."""
        return valuation(self.r, self.p)

    def val_at_least(self) -> int:
        """Valuation with zero reported as N (i.e. '>= N')."""
        v = self.valuation
        return self.N if v is None else v

    def _coerce(self, other) -> PadicInt:
        if isinstance(other, PadicInt):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        return PadicInt.of(other, self.p, self.N)

    def _prec(self, other: PadicInt) -> int:
        return min(self.N, other.N)

    def __add__(self, other):
        o = self._coerce(other)
        return PadicInt(self.p, self._prec(o), self.r + o.r)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return PadicInt(self.p, self._prec(o), self.r - o.r)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return PadicInt(self.p, self._prec(o), self.r * o.r)

    __rmul__ = __mul__

    def __neg__(self):
        return PadicInt(self.p, self.N, -self.r)

    def __pow__(self, e: int):
        return PadicInt(self.p, self.N, pow(self.r, e, self.modulus))

    def __eq__(self, other):
        if isinstance(other, int):
            return self.r == other % self.modulus
        if isinstance(other, PadicInt):
            return (self.p, self.N, self.r) == (other.p, other.N, other.r)
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.N, self.r))

    def truncate(self, N: int) -> PadicInt:
        return PadicInt(self.p, min(N, self.N), self.r)

    def __str__(self) -> str:
        return f"{self.p}^{self.N} : {self.r}"

    @classmethod
    def parse(cls, text: str) -> PadicInt:
        head, _, r = text.partition(":")
        p, _, n = head.strip().partition("^")
        return cls(int(p), int(n), int(r))


def val(n: int, p: int, N: int | None = None) -> int | None:
    """p-adic valuation of n; None means '>= N' (or n = 0 when N is None)."""
    _check_prime(p)
    if N is not None and n % p ** N == 0:
        return None
    return valuation(n, p)


def _guard_ok(v: int | None, p: int) -> bool:
    # v > 1/(p-1): at least 2 for p = 2, at least 1 otherwise
    return v is None or v >= (2 if p == 2 else 1)


def _ilog(k: int, p: int) -> int:
    """ceil(log_p(k)) for k >= 1."""
    e, t = 0, 1
    while t < k:
        t *= p
        e += 1
    return e


def padic_log(u: PadicInt) -> PadicInt:
    """log(u) = sum (-1)^(k+1) (u-1)^k / k, correct to the precision of u."""
    p, N = u.p, u.N
    z = (u - 1).r
    v = valuation(z, p)
    if not _guard_ok(v, p):
        raise LogDomainError(f"log needs val(u-1) >= {2 if p == 2 else 1}")
    if v is None:
        return PadicInt(p, N, 0)
    # terms with k*v - val_p(k) >= N vanish mod p^N
    k_max = N
    while k_max * v - _ilog(k_max, p) < N:
        k_max += 1
    W = N + _ilog(k_max, p) + 2
    mod_w = p ** W
    total = 0
    zk = 1
    for k in range(1, k_max + 1):
        zk = zk * z % mod_w
        e = valuation(k, p)
        unit = k // p ** e
        # z^k is divisible by p^(k v) >= p^e, so the division is exact
        term = (zk // p ** e) * pow(unit, -1, mod_w)
        total += term if k % 2 else -term
    return PadicInt(p, N, total)


def padic_exp(z: PadicInt) -> PadicInt:
    """exp(z) = sum z^k / k!, correct to the precision of z."""
    p, N = z.p, z.N
    v = z.valuation
    if not _guard_ok(v, p):
        raise ExpDomainError(f"exp needs val(z) >= {2 if p == 2 else 1}, got {v}")
    if v is None:
        return PadicInt(p, N, 1)
    # val(z^k/k!) >= k*v - (k-1)/(p-1), which grows at least like k/2 here
    k_max = 1
    while k_max * v * (p - 1) - (k_max - 1) < N * (p - 1):
        k_max += 1
    k_max += 1
    fact_val = sum(valuation(k, p) for k in range(1, k_max + 1))
    W = N + fact_val + 2
    mod_w = p ** W
    total = 1
    zk = 1
    fact_unit, fact_e = 1, 0
    for k in range(1, k_max + 1):
        zk = zk * z.r % mod_w
        e = valuation(k, p)
        fact_e += e
        fact_unit = fact_unit * (k // p ** e) % mod_w
        total += (zk // p ** fact_e) * pow(fact_unit, -1, mod_w)
    return PadicInt(p, N, total)


# -- Mahler coefficients ---------------------------------------------------

def mahler_coefficients(spec: SequenceSpec, k_max: int) -> list[int]:
    """c_k = (Delta^k a)(0) for k = 0..k_max."""
    row = [spec.term(n) for n in range(k_max + 1)]
    out = []
    while row:
        out.append(row[0])
        row = [b - a for a, b in zip(row, row[1:])]
    return out


@dataclass(frozen=True)
class ContinuityReport:
    verdict: str  # plausible | fails | inconclusive
    valuations: tuple[int | None, ...]  # None for c_k = 0
    slope: Fraction


def continuity_test(spec: SequenceSpec, p: int, k_max: int = 32,
                    slope: Fraction = Fraction(1, 4)) -> ContinuityReport:
    """Screen for a continuous p-adic interpolation via Mahler's criterion.

    plausible: every tail coefficient has val_p(c_k) >= slope * k.
    fails: tail valuations never rise above the largest head valuation.
    The tail is the top half of the k rows.
    """
    _check_prime(p)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    vals = tuple(valuation(c, p) for c in mahler_coefficients(spec, k_max))
    start = (k_max + 1) // 2
    head, tail = vals[:start], vals[start:]
    if all(v is None or v >= slope * k for k, v in enumerate(tail, start)):
        verdict = "plausible"
    else:
        head_max = max((v for v in head if v is not None), default=0)
        if all(v is not None and v <= head_max for v in tail):
            verdict = "fails"
        else:
            verdict = "inconclusive"
    return ContinuityReport(verdict, vals, slope)


# -- stride certificates ---------------------------------------------------

@dataclass(frozen=True)
class InterpolationCertificate:
    a: int
    p: int
    d: int
    S: int
    v_log: int
    guard_ok: bool
    critical_point_count: int = 0

    def to_dict(self) -> dict:
        return {"a": self.a, "p": self.p, "d": self.d, "S": self.S,
                "v_log": self.v_log, "guard_ok": self.guard_ok}

    def to_text(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.to_dict().items())


def interpolation_stride(a: int, p: int) -> InterpolationCertificate:
    """Smallest stride S with a^S in the domain where n -> a^(S n) is analytic."""
    _check_prime(p)
    if a < 2:
        raise ValueError("base must be >= 2")
    if a % p == 0:
        raise NotAUnit(f"{a} is not a unit mod {p}")
    if p == 2:
        d = 1 if a % 4 == 1 else 2
    else:
        d = multiplicative_order(a, p)
    v_log = valuation(a ** d - 1, p)
    return InterpolationCertificate(a, p, d, d, v_log, _guard_ok(v_log, p))


def _log_base(cert: InterpolationCertificate, N: int) -> PadicInt:
    return padic_log(PadicInt(cert.p, N, pow(cert.a, cert.S, cert.p ** N)))


def interpolate_eval(cert: InterpolationCertificate, x: PadicInt | int,
                     N: int | None = None) -> PadicInt:
    """exp(x * log(a^S)); for integer x = n this is a^(S n) mod p^N."""
    if not cert.guard_ok:
        raise NoAnalyticModel("certificate guard is not satisfied")
    if isinstance(x, int):
        if N is None:
            raise ValueError("precision required for integer arguments")
        x = PadicInt(cert.p, N, x)
    N = x.N if N is None else min(N, x.N)
    return padic_exp(x.truncate(N) * _log_base(cert, N))


class Interpolant:
    """Reusable n -> a^(S n) evaluator with log(a^S) computed once."""

    def __init__(self, cert: InterpolationCertificate, N: int):
        if not cert.guard_ok:
            raise NoAnalyticModel("certificate guard is not satisfied")
        self.cert, self.N = cert, N
        self.log_base = _log_base(cert, N)

    def __call__(self, x: PadicInt | int) -> PadicInt:
        if isinstance(x, int):
            x = PadicInt(self.cert.p, self.N, x)
        return padic_exp(x * self.log_base)


def strassmann_bound(coeffs: list[PadicInt]) -> int:
    """Largest index attaining the minimal coefficient valuation.

    A convergent power series on Z_p with these coefficients has at most
    this many zeros.
    """
    vals = [c.valuation for c in coeffs]
    finite = [v for v in vals if v is not None]
    if not finite:
        raise GuardError("all coefficients vanish at this precision")
    vmin = min(finite)
    return max(i for i, v in enumerate(vals) if v == vmin)


@dataclass(frozen=True)
class CriticalPointReport:
    count: int
    witness_v_log: int
    derivative_valuations: tuple[int | None, ...]


def critical_point_scan(cert: InterpolationCertificate, N: int,
                        terms: int = 16) -> CriticalPointReport:
    """Zero count of f'(x) = L exp(L x), L = log(a^S), via Strassmann.

    The power-series coefficients of f' are L^(k+1)/k!.
    """
    if not cert.guard_ok:
        raise NoAnalyticModel("certificate guard is not satisfied")
    p = cert.p
    W = N + terms  # headroom for the k! divisions
    L = _log_base(cert, W)
    coeffs = []
    fact = 1
    for k in range(terms):
        if k:
            fact *= k
        num = pow(L.r, k + 1)
        e = valuation(fact, p)
        c = (num // p ** e) * pow(fact // p ** e, -1, p ** W)
        coeffs.append(PadicInt(p, N, c))
    count = strassmann_bound(coeffs)
    return CriticalPointReport(count, cert.v_log, tuple(c.valuation for c in coeffs))
