"""Combinatorial (l-adic) entropy of integer sequences.

Terms are indexed from k = 0 and a cutoff K means the first K terms.
"""
from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Callable

from .arith import factorize
from .errors import ModulusGuard
from .seqgen import SequenceSpec

MODULUS_LIMIT = 10 ** 12
K_CAP = 10 ** 6
DIGITS = 40
# Fraction of ln p a tail entropy must exceed to count as positive.
DEFAULT_THRESHOLD_RATIO = Decimal("0.5")


def ln(x: int | Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        return Decimal(x).ln()


def default_k_policy(ell: int, n: int) -> int:
    return min(K_CAP, 4 * ell ** n)


def residue_count(spec: SequenceSpec, ell: int, n: int, k: int) -> int:
    """Number of distinct a_k mod ell^n over the first k terms."""
    if ell < 2 or n < 1 or k < 1:
        raise ValueError("need ell >= 2, n >= 1, k >= 1")
    m = ell ** n
    if m > MODULUS_LIMIT:
        raise ModulusGuard(f"{ell}^{n} exceeds {MODULUS_LIMIT}")
    return len(set(spec.residues(m, range(k))))


def comb_entropy(spec: SequenceSpec, ell: int, n: int, k: int) -> Decimal:
    """log(residue count) / n, natural log, 40 significant digits."""
    with localcontext() as ctx:
        ctx.prec = DIGITS
        return ln(residue_count(spec, ell, n, k)) / n


@dataclass(frozen=True)
class EntropyRow:
    N: int
    K: int
    count: int
    h: Decimal


@dataclass(frozen=True)
class EntropyProfile:
    base: int
    rows: tuple[EntropyRow, ...]
    tail_sup: Decimal

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "K", "count", "h"])
        for r in self.rows:
            w.writerow([r.N, r.K, r.count, f"{r.h:.30f}"])
        return buf.getvalue()


def tail_window(n_max: int) -> int:
    """Number of top rows standing in for the limsup: the top third."""
    return max(1, n_max // 3)


def upper_entropy_estimate(spec: SequenceSpec, ell: int, n_max: int,
                           k_policy: Callable[[int, int], int] = default_k_policy
                           ) -> EntropyProfile:
    rows = []
    for n in range(1, n_max + 1):
        k = k_policy(ell, n)
        count = residue_count(spec, ell, n, k)
        with localcontext() as ctx:
            ctx.prec = DIGITS
            h = ln(count) / n
        rows.append(EntropyRow(n, k, count, h))
    tail = rows[-tail_window(n_max):]
    return EntropyProfile(ell, tuple(rows), max(r.h for r in tail))


@dataclass
class PositivityReport:
    q: int
    profiles: dict[int, EntropyProfile]
    thresholds: dict[int, Decimal]
    positive_primes: list[int] = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return bool(self.positive_primes)

    @property
    def best_prime(self) -> int:
        """Prime whose tail entropy is largest relative to ln p."""
        return max(self.profiles, key=lambda p: self.profiles[p].tail_sup / ln(p))

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "verdict": "positive" if self.positive else "negative",
            "via": self.positive_primes,
            "primes": {
                str(p): {
                    "tail_sup": f"{prof.tail_sup:.30f}",
                    "threshold": f"{self.thresholds[p]:.30f}",
                    "counts": [r.count for r in prof.rows],
                    "K": [r.K for r in prof.rows],
                }
                for p, prof in self.profiles.items()
            },
        }


def local_positivity(spec: SequenceSpec, q: int, n_max: int = 8,
                     k_policy: Callable[[int, int], int] = default_k_policy,
                     threshold: Decimal | None = None,
                     threshold_ratio: Decimal = DEFAULT_THRESHOLD_RATIO
                     ) -> PositivityReport:
    """Per-prime upper entropy profiles of spec for the primes dividing q.

    The verdict is positive iff some prime's tail_sup exceeds its threshold,
    which is ``threshold`` if given and ``threshold_ratio * ln p`` otherwise.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    report = PositivityReport(q, {}, {})
    for p in sorted(factorize(q)):
        n_top = n_max
        while p ** n_top > MODULUS_LIMIT:
            n_top -= 1
        prof = upper_entropy_estimate(spec, p, n_top, k_policy)
        with localcontext() as ctx:
            ctx.prec = DIGITS
            thr = Decimal(threshold) if threshold is not None else threshold_ratio * ln(p)
        report.profiles[p] = prof
        report.thresholds[p] = thr
        if prof.tail_sup > thr:
            report.positive_primes.append(p)
    return report
