"""Density and equidistribution diagnostics for finite point sets on R/Z.

Gaps, discrepancy and covering counts are exact; Weyl sums are evaluated
with mpmath at 60 digits from the exact rationals.
"""
from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from typing import Iterable, Sequence

import mpmath

from .arith import iroot
from .errors import (
    EmptyCloud,
    GuardError,
    InsufficientPrecision,
    NonLacunarityNotWitnessed,
    ShrinkX0,
)
from .seqgen import SequenceSpec
from .torus import CirclePoint, IrrationalSurrogate

WEYL_DPS = 60
# max_product * surrogate error must stay below this
PRODUCT_RESOLUTION = Fraction(1, 10 ** 6)


@dataclass(frozen=True)
class PointCloud:
    points: tuple[CirclePoint, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def of(cls, values: Iterable[Fraction | CirclePoint], **provenance) -> PointCloud:
        pts = tuple(v if isinstance(v, CirclePoint) else CirclePoint.of(v) for v in values)
        return cls(pts, provenance)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.provenance.items():
            buf.write(f"# {k} = {v}\n")
        for pt in self.points:
            buf.write(f"{pt}\n")
        return buf.getvalue()


def _require(cloud: PointCloud) -> None:
    if not cloud.points:
        raise EmptyCloud("point cloud is empty")


def _sorted_values(cloud: PointCloud) -> list[Fraction]:
    """Sorted point values. Uses an integer key when denominators share a
    small common multiple (the usual case for surrogate-generated clouds)."""
    vals = [p.value for p in cloud.points]
    lcm = 1
    for v in vals:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        if lcm.bit_length() > 4096:
            return sorted(vals)
    return sorted(vals, key=lambda v: v.numerator * (lcm // v.denominator))


def star_discrepancy(cloud: PointCloud) -> Fraction:
    """D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N) over sorted points."""
    _require(cloud)
    xs = _sorted_values(cloud)
    n = len(xs)
    return max(max(Fraction(i, n) - x, x - Fraction(i - 1, n))
               for i, x in enumerate(xs, 1))


def weyl_sum(cloud: PointCloud, h: int) -> mpmath.mpf:
    """|(1/N) sum_j exp(2 pi i h x_j)| at 60 digits."""
    _require(cloud)
    if h == 0:
        raise GuardError("frequency 0 is the total mass; use len(cloud)")
    with mpmath.workdps(WEYL_DPS):
        s = mpmath.mpc(0)
        for pt in cloud.points:
            frac = (h * pt.numerator) % pt.denominator
            s += mpmath.expjpi(2 * mpmath.mpf(frac) / pt.denominator)
        return abs(s) / len(cloud.points)


def max_gap(cloud: PointCloud) -> Fraction:
    """Largest circular gap between consecutive points (wrapping at 1)."""
    _require(cloud)
    xs = _sorted_values(cloud)
    gap = xs[0] + 1 - xs[-1]
    for a, b in zip(xs, xs[1:]):
        if b - a > gap:
            gap = b - a
    return gap


# -- epsilon-density constructor ------------------------------------------

@dataclass(frozen=True)
class DenseWitness:
    indices: tuple[int, ...]
    n0: int | None
    gap: Fraction


def epsilon_dense_witness(x0: CirclePoint, spec: SequenceSpec, eps: Fraction,
                          search_bound: int = 10 ** 6) -> DenseWitness:
    """Index set S with {a_i x0 : i in S} eps-dense, built by the classical
    argument: past n0 consecutive terms satisfy a_{i+1} - a_i < eps a_i, and
    S runs up to the last a_i <= 1/x0.

    When x0 is too coarse for the first core term (a_{n0+1} x0 > eps) the
    set is extended downwards while consecutive steps stay <= eps.
    """
    eps = Fraction(eps)
    if x0.value == 0:
        raise GuardError("x0 must be nonzero")
    if eps <= 0:
        raise GuardError("eps must be positive")
    x = x0.value
    if eps >= 1:
        idx = (1,)
        return DenseWitness(idx, None, max_gap(PointCloud.of([spec.term(1) * x])))
    inv = 1 / x
    # last index with a_m <= 1/x0 (indices start at 1)
    terms = {}

    def a(i):
        if i not in terms:
            terms[i] = spec.term(i)
        return terms[i]

    m = 0
    while a(m + 1) <= inv:
        m += 1
        if m > search_bound:
            raise GuardError(f"S would exceed the search bound {search_bound}")
    horizon = max(m, 64)
    n0 = 0
    for n in range(1, horizon + 1):
        if not a(n + 1) - a(n) < eps * a(n):
            n0 = n
    if n0 >= horizon:
        raise NonLacunarityNotWitnessed(
            f"a_(n+1) - a_n < eps a_n fails up to n = {horizon}")
    start = n0 + 1
    if start > m:
        raise ShrinkX0(f"x0 = {x0} is too large: no term past n0 = {n0} is <= 1/x0")
    while a(start) * x > eps:
        if start == 1 or (a(start) - a(start - 1)) * x > eps:
            raise ShrinkX0(f"x0 = {x0} is too large for eps = {eps}")
        start -= 1
    indices = tuple(range(start, m + 1))
    gap = max_gap(PointCloud.of(a(i) * x for i in indices))
    if gap > eps:
        raise ShrinkX0(f"constructed gap {gap} exceeds eps; shrink x0")
    return DenseWitness(indices, n0, gap)


# -- triple products -------------------------------------------------------

@dataclass(frozen=True)
class Budget:
    """Index box 1..max_index per factor, intersected with a product cap."""

    max_index: tuple[int, int, int]
    max_product: int | None = None

    def __post_init__(self):
        mi = self.max_index
        if isinstance(mi, int):
            mi = (mi, mi, mi)
        object.__setattr__(self, "max_index", tuple(mi))


def product_set(specs: Sequence[SequenceSpec], budget: Budget) -> set[int]:
    """All products a_n b_m c_k over the budget's index box and cap."""
    cap = budget.max_product
    products = {1}
    for spec, count in zip(specs, budget.max_index):
        terms = sorted({spec.term(i) for i in range(1, count + 1)})
        nxt = set()
        for p in products:
            for t in terms:
                v = p * t
                if cap is not None and v > cap:
                    break
                nxt.add(v)
        products = nxt
    return products


def triple_product_points(x: IrrationalSurrogate, spec_a: SequenceSpec,
                          spec_b: SequenceSpec, spec_c: SequenceSpec,
                          budget: Budget) -> PointCloud:
    """{a_n b_m c_k x mod 1} within the budget, deduplicated exactly."""
    products = product_set((spec_a, spec_b, spec_c), budget)
    biggest = max(products) if budget.max_product is None else budget.max_product
    if biggest * Fraction(1, 10 ** x.error_exponent) >= PRODUCT_RESOLUTION:
        raise InsufficientPrecision(
            f"products up to {biggest} need more than {x.error_exponent} digits")
    num, den = x.point.numerator, x.point.denominator
    # shared denominator: dedupe and sort the numerators as plain ints
    residues = sorted({n * num % den for n in products})
    return PointCloud(tuple(CirclePoint(Fraction(r, den)) for r in residues), {
        "x": x.target_tag, "digits": x.error_exponent,
        "a": spec_a.to_text(), "b": spec_b.to_text(), "c": spec_c.to_text(),
        "max_index": budget.max_index, "max_product": budget.max_product,
    })


def min_nonzero_difference(cloud: PointCloud) -> Fraction:
    """Smallest circular distance between two distinct points."""
    xs = _sorted_values(cloud)
    if len(xs) < 2:
        raise EmptyCloud("need two points")
    best = xs[0] + 1 - xs[-1]
    for a, b in zip(xs, xs[1:]):
        best = min(best, b - a)
    return best


# -- exceptional sets and box counting -------------------------------------

@dataclass
class ScanReport:
    Q: int
    interval: tuple[Fraction, Fraction]
    M: int
    exceptional: list[int]  # numerators j of exceptional grid points j/Q
    counts: list[tuple[Fraction, int]]
    slope: float | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "count"])
        for d, c in self.counts:
            w.writerow([str(d), c])
        return buf.getvalue()

    def summary(self) -> dict:
        lo, hi = self.interval
        return {"Q": self.Q, "interval": [str(lo), str(hi)], "M": self.M,
                "exceptional_count": len(self.exceptional), "slope": self.slope,
                "window": [str(self.counts[0][0]), str(self.counts[-1][0])] if self.counts else None}


def _in_open_interval(v: Fraction, lo: Fraction, hi: Fraction) -> bool:
    """v in the arc (lo, hi) of R/Z, lo < hi taken mod 1."""
    return lo < v < hi if lo < hi else (v > lo or v < hi)


def exceptional_scan(spec: SequenceSpec, interval: tuple[Fraction, Fraction],
                     Q: int, M: int) -> ScanReport:
    """Grid points j/Q whose first M multiples a_m j/Q (m >= 1) miss the
    open interval, plus covering counts at scales 1/Q, 2/Q, 4/Q, ..."""
    lo, hi = (Fraction(v) for v in interval)
    length = (hi - lo) % 1
    if not 0 < length < 1:
        raise GuardError("interval length must lie in (0, 1)")
    if Q > 10 ** 6 / length:
        raise GuardError(f"grid denominator {Q} exceeds 10^6/|I|")
    lo, hi = lo % 1, hi % 1
    # a_m j mod Q depends only on a_m mod Q
    residues = sorted({spec.term_mod(m, Q) for m in range(1, M + 1)})
    exceptional = []
    for j in range(Q):
        if not any(_in_open_interval(Fraction(r * j % Q, Q), lo, hi) for r in residues):
            exceptional.append(j)
    counts = []
    d = Fraction(1, Q)
    while d <= Fraction(1, 2):
        counts.append((d, len({Fraction(j, Q) // d for j in exceptional})))
        d *= 2
    slope = _fit_slope(counts) if len(counts) >= 2 and any(c for _, c in counts) else None
    return ScanReport(Q, (lo, hi), M, exceptional, counts, slope)


def _fit_slope(counts: list[tuple[Fraction, int]]) -> float:
    """Least-squares slope of log N_delta against log(1/delta)."""
    pts = [(-math.log(d), math.log(c)) for d, c in counts if c > 0]
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    if sxx == 0:
        raise GuardError("degenerate scale window")
    return sum((x - mx) * (y - my) for x, y in pts) / sxx


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    counts: tuple[tuple[Fraction, int], ...]
    window: tuple[Fraction, Fraction]


def _geometric_scales(d_min: Fraction, d_max: Fraction, n: int) -> list[Fraction]:
    """n scales from d_max down to d_min, exact when the ratio has an exact root."""
    ratio = d_max / d_min
    steps = n - 1
    rn, rd = iroot(ratio.numerator, steps), iroot(ratio.denominator, steps)
    if rn ** steps == ratio.numerator and rd ** steps == ratio.denominator:
        step = Fraction(rn, rd)
        return [d_max / step ** i for i in range(n)]
    r = float(ratio) ** (1 / steps)
    return [d_max] + [Fraction(float(d_max) / r ** i).limit_denominator(10 ** 15)
                      for i in range(1, steps)] + [d_min]


def box_dimension_estimate(cloud: PointCloud, d_min: Fraction, d_max: Fraction,
                           scales: int = 8) -> DimensionEstimate:
    """Window slope of log N_delta vs log(1/delta); N_delta counts hit cells
    [j delta, (j+1) delta)."""
    _require(cloud)
    d_min, d_max = Fraction(d_min), Fraction(d_max)
    if not 0 < d_min < d_max <= Fraction(1, 2) or scales < 2:
        raise GuardError("degenerate scale window")
    counts = []
    vals = [p.value for p in cloud.points]
    for d in _geometric_scales(d_min, d_max, scales):
        counts.append((d, len({v // d for v in vals})))
    counts.reverse()
    return DimensionEstimate(_fit_slope(counts), tuple(counts), (d_min, d_max))


def cantor_endpoints(level: int) -> list[Fraction]:
    """Endpoints of the 2^level intervals of the middle-thirds construction,
    reduced mod 1 (so the endpoint 1 becomes 0)."""
    out = set()
    for digits in cartesian((0, 2), repeat=level):
        left = sum(Fraction(d, 3 ** (i + 1)) for i, d in enumerate(digits))
        out.add(left)
        out.add((left + Fraction(1, 3 ** level)) % 1)
    return sorted(out)
