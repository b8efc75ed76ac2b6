"""Finite empirical measures on R/Z, their entropies on uniform partitions,
and the positive-entropy construction run at a fixed scale.

Masses are exact rationals; entropies are 50-digit decimals; character
integrals (invariance defects) are 50-digit mpmath values.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable

import mpmath

from .arith import factorize
from .density import PointCloud
from .entropy import local_positivity, residue_count
from .errors import GuardError, InsufficientPrecision, InvalidLevel
from .seqgen import SequenceSpec
from .torus import ZERO, CirclePoint, IrrationalSurrogate, orbit

log = logging.getLogger(__name__)

DIGITS = 50
DEFECT_DPS = 50
# slack for comparing 50-digit entropies that are equal in exact arithmetic
ENTROPY_SLACK = Decimal("1e-40")


def _ln(x: int | Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        return Decimal(x).ln()


LN2 = _ln(2)


@dataclass(frozen=True)
class UniformPartition:
    """M half-open atoms [t + j/M, t + (j+1)/M) of the circle."""

    M: int
    t: CirclePoint = ZERO

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("partition needs at least 2 atoms")

    def atom(self, x: CirclePoint | Fraction) -> int:
        v = x.value if isinstance(x, CirclePoint) else x
        shifted = (v - self.t.value) % 1
        j = (shifted * self.M).__floor__()
        if self.t.value and shifted * self.M == j:
            log.debug("point %s sits on a boundary of %s", v, self)
        return j


@dataclass(frozen=True)
class EmpiricalMeasure:
    support: tuple[tuple[CirclePoint, Fraction], ...]

    def __post_init__(self):
        if not self.support:
            raise ValueError("measure needs a nonempty support")
        if sum(w for _, w in self.support) != 1:
            raise ValueError("weights must sum to 1")
        if any(w <= 0 for _, w in self.support):
            raise ValueError("weights must be positive")
        if len({x for x, _ in self.support}) != len(self.support):
            raise ValueError("support points must be distinct")

    @classmethod
    def from_weights(cls, items: Iterable[tuple[CirclePoint, Fraction]]) -> EmpiricalMeasure:
        """Merge duplicate points; input weights need not be normalized."""
        acc: dict[CirclePoint, Fraction] = defaultdict(Fraction)
        for x, w in items:
            acc[x] += Fraction(w)
        total = sum(acc.values())
        return cls(tuple(sorted((x, w / total) for x, w in acc.items() if w)))

    @classmethod
    def uniform(cls, points: Iterable[CirclePoint]) -> EmpiricalMeasure:
        pts = sorted(set(points))
        w = Fraction(1, len(pts))
        return cls(tuple((x, w) for x in pts))

    def atom_masses(self, P: UniformPartition) -> dict[int, Fraction]:
        masses: dict[int, Fraction] = defaultdict(Fraction)
        for x, w in self.support:
            masses[P.atom(x)] += w
        return dict(masses)

    def to_csv(self) -> str:
        return "".join(f"{x},{w}\n" for x, w in self.support)


def shannon_entropy(mu: EmpiricalMeasure, P: UniformPartition) -> Decimal:
    """-sum mu(s) ln mu(s) over atoms s of P."""
    with localcontext() as ctx:
        ctx.prec = DIGITS
        h = Decimal(0)
        for m in mu.atom_masses(P).values():
            if m != 1:
                h -= Decimal(m.numerator) / m.denominator * (_ln(m.numerator) - _ln(m.denominator))
        return h


# -- difference points -----------------------------------------------------

@dataclass(frozen=True)
class DifferenceWitness:
    level: int
    ell: int
    u: CirclePoint
    v: CirclePoint
    i: int  # orbit indices of u and v
    j: int
    residual: Fraction
    gcd_d: int


def max_orbit_length(x: IrrationalSurrogate, q: int, tol: Fraction, cap: int = 400) -> int:
    """Longest orbit whose last point still tracks the target within tol/10."""
    L, mult = 1, 1
    bound = tol / 10 * 10 ** x.error_exponent
    while L < cap and mult * q < bound:
        mult *= q
        L += 1
    return L


def difference_point_search(x: IrrationalSurrogate, q: int, n: int, L: int,
                            tol: Fraction | None = None) -> list[DifferenceWitness]:
    """Orbit pairs (u, v), u earlier than v, with u - v within tol of l/q^n.

    Only l with q not dividing l are reported: a difference l/q^n with q | l
    is a point of level n-1. Candidates come from sorting q^n * orbit mod 1,
    where close neighbours are exactly the near-grid differences.
    """
    if n < 1:
        raise InvalidLevel("level must be >= 1")
    if q < 2 or L < 2:
        raise GuardError("need q >= 2 and at least two orbit points")
    g = q ** n
    tol = Fraction(1, q ** (n + 2)) if tol is None else Fraction(tol)
    if tol * 2 * g >= 1:
        raise GuardError("tolerance must be below half the grid spacing")
    # T_q^(L-1) multiplies the surrogate error by q^(L-1)
    try:
        x.check_multiplier(q ** (L - 1), tol / 10)
    except InsufficientPrecision:
        raise InsufficientPrecision(
            f"orbit length {L} exceeds what {x.error_exponent} digits support at tol {tol}"
        ) from None
    pts = orbit(x.point, q, L)
    den = x.point.denominator
    nums = [p.value.numerator * (den // p.value.denominator) for p in pts]
    keyed = sorted((g * a % den, idx) for idx, a in enumerate(nums))
    window = g * tol * den  # in units of 1/den
    out = []
    size = len(keyed)
    for s in range(size):
        r0, i0 = keyed[s]
        t = s + 1
        while True:
            r1, i1 = keyed[t % size]
            wrap = den if t >= size else 0
            if t - s >= size or r1 + wrap - r0 >= window:
                break
            i, j = min(i0, i1), max(i0, i1)
            d = Fraction(nums[i] - nums[j], den) % 1
            ell = round(d * g) % g
            if ell and ell % q:
                res = abs(d - Fraction(ell, g))
                res = min(res, 1 - res)
                if res < tol:
                    out.append(DifferenceWitness(n, ell, pts[i], pts[j], i, j, res,
                                                 math.gcd(ell, q)))
            t += 1
    out.sort(key=lambda w: (w.i, w.j))
    return out


def witnesses_to_csv(witnesses: list[DifferenceWitness]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "ell", "gcd_d", "residual"])
    for wt in witnesses:
        w.writerow([wt.level, wt.ell, wt.gcd_d, f"{float(wt.residual):.6e}"])
    return buf.getvalue()


def chained_gcd_pairs(lower: list[DifferenceWitness], upper: list[DifferenceWitness],
                      q: int) -> list[tuple[DifferenceWitness, DifferenceWitness]]:
    """Pairs (w_n, w_{n+1}) whose numerators chain: l_{n+1} = l_n mod q^n."""
    if not lower or not upper:
        return []
    qn = q ** lower[0].level
    by_ell = defaultdict(list)
    for w in lower:
        by_ell[w.ell].append(w)
    return [(lo, w) for w in upper for lo in by_ell.get(w.ell % qn, [])]


# -- atom bookkeeping and measures -----------------------------------------

@dataclass(frozen=True)
class DeltaAtoms:
    delta: frozenset[int]
    a_atoms: frozenset[int]
    b_atoms: frozenset[int]
    side: str  # "A" or "B"

    @property
    def chosen(self) -> frozenset[int]:
        return self.a_atoms if self.side == "A" else self.b_atoms


def delta_atoms(A: PointCloud, B: PointCloud, P: UniformPartition) -> DeltaAtoms:
    """Atoms of P hit by A - B, by A and by B; keep the larger of A, B."""
    if not A.points or not B.points:
        raise GuardError("clouds must be nonempty")
    a_vals = [p.value for p in A.points]
    b_vals = [p.value for p in B.points]
    delta = frozenset(P.atom((a - b) % 1) for a in a_vals for b in b_vals)
    a_atoms = frozenset(P.atom(a) for a in a_vals)
    b_atoms = frozenset(P.atom(b) for b in b_vals)
    side = "A" if len(a_atoms) >= len(b_atoms) else "B"
    out = DeltaAtoms(delta, a_atoms, b_atoms, side)
    # |A - B| atoms <= 3 |A| |B| (2 without a translate), so max >= sqrt(|delta|)/2
    if 4 * len(out.chosen) ** 2 < len(delta):
        raise AssertionError("atom count inequality |M| >= sqrt(|delta|)/2 violated")
    return out


def build_m_N(source: PointCloud, P: UniformPartition) -> EmpiricalMeasure:
    """Uniform measure on the lowest source point of each occupied atom."""
    if not source.points:
        raise GuardError("source cloud is empty")
    reps: dict[int, CirclePoint] = {}
    t = P.t.value
    for pt in source.points:
        j = P.atom(pt)
        cur = reps.get(j)
        if cur is None or (pt.value - t) % 1 < (cur.value - t) % 1:
            reps[j] = pt
    return EmpiricalMeasure.uniform(reps.values())


def pushforward(mu: EmpiricalMeasure, q: int) -> EmpiricalMeasure:
    return EmpiricalMeasure.from_weights(
        (CirclePoint(Fraction(q * x.numerator % x.denominator, x.denominator)), w)
        for x, w in mu.support)


def pushforwards(mu: EmpiricalMeasure, q: int, k: int) -> list[EmpiricalMeasure]:
    """[mu, T mu, ..., T^(k-1) mu]."""
    out = [mu]
    for _ in range(k - 1):
        out.append(pushforward(out[-1], q))
    return out


def average_T(mu: EmpiricalMeasure, q: int, k: int) -> EmpiricalMeasure:
    """(1/k) sum_{i<k} (T_q^i)_* mu."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _mixture(pushforwards(mu, q, k))


def _mixture(measures: list[EmpiricalMeasure]) -> EmpiricalMeasure:
    k = len(measures)
    return EmpiricalMeasure.from_weights(
        (x, w / k) for m in measures for x, w in m.support)


def invariance_defect(mu: EmpiricalMeasure, q: int, h_max: int) -> mpmath.mpf:
    """max_{1<=h<=h_max} |mu(e_h o T_q) - mu(e_h)|, e_h(x) = exp(2 pi i h x)."""
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    best = mpmath.mpf(0)
    with mpmath.workdps(DEFECT_DPS):
        for h in range(1, h_max + 1):
            s = mpmath.mpc(0)
            for x, w in mu.support:
                num, den = x.numerator, x.denominator
                a = (h * q * num) % den
                b = (h * num) % den
                wt = mpmath.mpf(w.numerator) / w.denominator
                s += wt * (mpmath.expjpi(2 * mpmath.mpf(a) / den)
                           - mpmath.expjpi(2 * mpmath.mpf(b) / den))
            best = max(best, abs(s))
    return best


@dataclass(frozen=True)
class TranslateCheck:
    h_plain: Decimal
    h_shifted: Decimal
    difference: Decimal


def translate_entropy_check(mu: EmpiricalMeasure, M: int, t: CirclePoint) -> TranslateCheck:
    """Entropies on P_M and t + P_M; they differ by at most ln 2."""
    a = shannon_entropy(mu, UniformPartition(M))
    b = shannon_entropy(mu, UniformPartition(M, t))
    with localcontext() as ctx:
        ctx.prec = DIGITS
        diff = abs(a - b)
        violated = diff > LN2 + ENTROPY_SLACK
    if violated:
        raise AssertionError(f"translate bound violated: {diff} > ln 2")
    return TranslateCheck(a, b, diff)


# -- the pipeline ----------------------------------------------------------

@dataclass
class GrowthRow:
    N: int
    k: int
    H_raw: Decimal
    H_avg: Decimal
    defect: mpmath.mpf
    ratio: Decimal
    occupied: int
    source_size: int
    witnesses: int
    gcds: tuple[int, ...]
    delta_atoms: int
    chosen_atoms: int
    comb_ratio: Decimal


@dataclass
class EntropyGrowthReport:
    rows: list[GrowthRow]
    prime: int
    delta: Fraction
    header: dict = field(default_factory=dict)
    witness_lists: dict[int, list[DifferenceWitness]] = field(default_factory=dict)

    def _min(self, attr: str) -> Decimal | None:
        vals = [getattr(r, attr) for r in self.rows]
        return min(vals) if vals else None

    @property
    def c1(self):
        return self._min("comb_ratio")

    @property
    def c2(self):
        vals = [r.H_raw / (r.N * _ln(self.prime)) for r in self.rows]
        return min(vals) if vals else None

    @property
    def c3(self):
        return self._min("ratio")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "k", "H_raw", "H_avg", "defect", "ratio"])
        for r in self.rows:
            w.writerow([r.N, r.k, f"{r.H_raw:.30f}", f"{r.H_avg:.30f}",
                        mpmath.nstr(r.defect, 30, min_fixed=-30, max_fixed=30),
                        f"{r.ratio:.30f}"])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            **self.header,
            "prime": self.prime,
            "c1_observed": f"{self.c1:.12f}" if self.rows else None,
            "c2_observed": f"{self.c2:.12f}" if self.rows else None,
            "c3_observed": f"{self.c3:.12f}" if self.rows else None,
            "rows": [{"N": r.N, "occupied": r.occupied, "source_size": r.source_size,
                      "witnesses": r.witnesses, "gcd_d": list(r.gcds),
                      "delta_atoms": r.delta_atoms, "chosen_atoms": r.chosen_atoms}
                     for r in self.rows],
        }


def source_cloud(x: IrrationalSurrogate, q: int, a_spec: SequenceSpec,
                 depth: int, a_count: int, max_multiplier: int) -> PointCloud:
    """{q^i a_m x mod 1 : i < depth, m < a_count, q^i a_m <= max_multiplier}."""
    x.check_multiplier(max_multiplier, Fraction(1, 10 ** 6))
    num, den = x.point.numerator, x.point.denominator
    mults = set()
    for m in range(a_count):
        a = a_spec.term(m)
        if a > max_multiplier:
            continue
        qi = 1
        for _ in range(depth):
            if a * qi > max_multiplier:
                break
            mults.add(a * qi)
            qi *= q
    residues = sorted({c * num % den for c in mults})
    return PointCloud(tuple(CirclePoint(Fraction(r, den)) for r in residues),
                      {"x": x.target_tag, "q": q, "a": a_spec.to_text(), "depth": depth,
                       "a_count": a_count, "max_multiplier": max_multiplier})


def entropy_growth_experiment(x: IrrationalSurrogate, q: int, a_spec: SequenceSpec,
                              N_range: Iterable[int], delta: Fraction = Fraction(1, 2),
                              depth: int | None = None, a_count: int | None = None,
                              max_multiplier: int | None = None,
                              orbit_length: int | None = None,
                              tol: Fraction | None = None, h_max: int = 8,
                              prime: int | None = None) -> EntropyGrowthReport:
    """Run the empirical-measure construction at each scale N.

    For each N: search the orbit for difference points l/q^N, compare the
    atoms hit by {a_k u} and {a_k v} for one witness (u, v), build m_N on
    the cloud {q^i a_m x}, average it k = ceil(N^delta) times under T_q,
    and record entropies on P_{q^N} against N ln p.
    """
    N_range = list(N_range)
    if not N_range or min(N_range) < 1:
        raise InvalidLevel("scales must be >= 1")
    if q ** max(N_range) > 10 ** 12:
        raise GuardError("q^N exceeds 10^12")
    delta = Fraction(delta)
    if max_multiplier is None:
        max_multiplier = 10 ** (x.error_exponent - 7)
    if prime is None:
        primes = sorted(factorize(q))
        if len(primes) == 1:
            prime = primes[0]
        else:
            n_probe = min(max(N_range), 8)
            prime = local_positivity(a_spec, q, n_probe).best_prime
    ln_p = _ln(prime)
    header = {"x": x.target_tag, "digits": x.error_exponent, "q": q, "a": a_spec.to_text(),
              "delta": str(delta), "max_multiplier": max_multiplier, "h_max": h_max}
    report = EntropyGrowthReport([], prime, delta, header)
    for N in N_range:
        M = q ** N
        P = UniformPartition(M)
        cnt = a_count if a_count is not None else min(4 * prime ** N, 10 ** 4)
        dep = depth if depth is not None else N
        cloud = source_cloud(x, q, a_spec, dep, cnt, max_multiplier)

        n_tol = Fraction(1, q ** (N + 2)) if tol is None else Fraction(tol)
        L = orbit_length if orbit_length is not None else max_orbit_length(x, q, n_tol)
        witnesses = difference_point_search(x, q, N, L, n_tol)
        report.witness_lists[N] = witnesses
        d_total = d_chosen = 0
        if witnesses:
            wt = witnesses[0]
            budget = max_multiplier // q ** wt.j
            a_terms = [t for t in (a_spec.term(m) for m in range(cnt)) if t <= budget]
            if a_terms:
                A = PointCloud.of(a * wt.u.value for a in a_terms)
                B = PointCloud.of(a * wt.v.value for a in a_terms)
                da = delta_atoms(A, B, P)
                d_total, d_chosen = len(da.delta), len(da.chosen)

        m_N = build_m_N(cloud, P)
        H_raw = shannon_entropy(m_N, P)
        k = math.ceil(N ** float(delta) - 1e-12)
        pushed = pushforwards(m_N, q, k)
        prev_h = H_raw
        for nu in pushed[1:]:
            h = shannon_entropy(nu, P)
            with localcontext() as ctx:
                ctx.prec = DIGITS
                dropped = h < prev_h - _ln(q) - ENTROPY_SLACK
            if dropped:
                raise AssertionError(f"pushforward dropped more than ln q at N={N}")
            prev_h = h
        avg = _mixture(pushed)
        H_avg = shannon_entropy(avg, P)
        defect = invariance_defect(avg, q, h_max)
        with localcontext() as ctx:
            ctx.prec = DIGITS
            ratio = H_avg / (N * ln_p)
            count = residue_count(a_spec, prime, N, min(4 * prime ** N, 10 ** 6))
            comb_ratio = _ln(count) / (N * ln_p)
        report.rows.append(GrowthRow(
            N, k, H_raw, H_avg, defect, ratio, len(m_N.support), len(cloud),
            len(witnesses), tuple(sorted({w.gcd_d for w in witnesses})),
            d_total, d_chosen, comb_ratio))
    return report


# -- randomized inequality suite -------------------------------------------

INEQUALITIES = ("concavity", "pushforward_drop", "translate", "telescoping", "refinement")
_SMALL_PRIMES = (2, 3, 5, 7)


@dataclass
class InequalityReport:
    cases: int
    checked: dict[str, int] = field(default_factory=lambda: dict.fromkeys(INEQUALITIES, 0))
    violations: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["inequality", "checked", "violations"])
        for name in INEQUALITIES:
            bad = sum(1 for v in self.violations if v[0] == name)
            w.writerow([name, self.checked[name], bad])
        return buf.getvalue()


def random_measure(rng, max_support: int = 12, max_den: int = 10 ** 4) -> EmpiricalMeasure:
    size = rng.randint(1, max_support)
    den = rng.randint(2, max_den)
    return EmpiricalMeasure.from_weights(
        (CirclePoint(Fraction(rng.randrange(den), den)), rng.randint(1, 9))
        for _ in range(size))


def inequality_suite(cases: int, rng) -> InequalityReport:
    """Check the entropy inequalities used by the construction on random
    (mu, q, k, t, M). ``rng`` is a random.Random."""
    rep = InequalityReport(cases)

    def record(name, ok, case, detail):
        rep.checked[name] += 1
        if not ok:
            rep.violations.append((name, case, detail))

    with localcontext() as ctx:
        ctx.prec = DIGITS  # sums below must not round at the default 28 digits
        for case in range(cases):
            _one_case(rng, case, record)
    return rep


def _one_case(rng, case: int, record) -> None:
    mu = random_measure(rng)
    q = rng.randint(2, 7)
    k = rng.randint(1, 8)
    M = rng.randint(2, 300)
    t = CirclePoint(Fraction(rng.randrange(1000), 1000))
    P = UniformPartition(M)

    parts = [shannon_entropy(nu, P) for nu in pushforwards(mu, q, k)]
    h_avg = shannon_entropy(average_T(mu, q, k), P)
    record("concavity", h_avg >= sum(parts) / k - ENTROPY_SLACK, case,
           f"H_avg={h_avg}")

    p = rng.choice(_SMALL_PRIMES)
    Pp = UniformPartition(p ** rng.randint(1, 4))
    drop = shannon_entropy(mu, Pp) - shannon_entropy(pushforward(mu, p), Pp)
    record("pushforward_drop", drop <= _ln(p) + ENTROPY_SLACK, case, f"drop={drop}")

    diff = abs(shannon_entropy(mu, P) - shannon_entropy(mu, UniformPartition(M, t)))
    record("translate", diff <= LN2 + ENTROPY_SLACK, case, f"diff={diff}")

    defect = invariance_defect(average_T(mu, q, k), q, 4)
    record("telescoping", defect <= mpmath.mpf(2) / k + mpmath.mpf(10) ** -40, case,
           f"defect={defect}")

    finer = UniformPartition(M * rng.randint(2, 5))
    record("refinement", shannon_entropy(mu, P) <= shannon_entropy(mu, finer) + ENTROPY_SLACK,
           case, "")
