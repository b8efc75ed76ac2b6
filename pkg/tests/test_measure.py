import cmath
import math
import random
from decimal import Decimal, localcontext
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from furstlab.density import PointCloud
from furstlab.errors import GuardError, InsufficientPrecision, InvalidLevel
from furstlab.measure import (
    EmpiricalMeasure,
    UniformPartition,
    average_T,
    build_m_N,
    chained_gcd_pairs,
    delta_atoms,
    difference_point_search,
    entropy_growth_experiment,
    inequality_suite,
    invariance_defect,
    max_orbit_length,
    pushforward,
    shannon_entropy,
    translate_entropy_check,
    witnesses_to_csv,
)
from furstlab.seqgen import Geometric
from furstlab.torus import CirclePoint, approx_irrational, orbit

measures = st.lists(
    st.tuples(st.integers(0, 996), st.integers(1, 9)), min_size=1, max_size=15,
).map(lambda items: EmpiricalMeasure.from_weights(
    (CirclePoint(Fraction(n, 997)), w) for n, w in items))


def ln50(n):
    with localcontext() as ctx:
        ctx.prec = 50
        return Decimal(n).ln()


def entropy_oracle(mu, M, t=Fraction(0)):
    masses = {}
    for x, w in mu.support:
        j = math.floor(((x.value - t) % 1) * M)
        masses[j] = masses.get(j, 0) + w
    with mpmath.workdps(60):
        return -sum(mpmath.mpf(m.numerator) / m.denominator
                    * mpmath.log(mpmath.mpf(m.numerator) / m.denominator) for m in masses.values())


@settings(max_examples=60)
@given(measures, st.integers(2, 200), st.integers(0, 99))
def test_entropy_matches_oracle(mu, M, t):
    shift = Fraction(t, 100)
    got = shannon_entropy(mu, UniformPartition(M, CirclePoint(shift)))
    with mpmath.workdps(60):
        assert abs(mpmath.mpf(str(got)) - entropy_oracle(mu, M, shift)) < mpmath.mpf(10) ** -45


def test_uniform_measure_entropy():
    mu = EmpiricalMeasure.uniform(CirclePoint(Fraction(j, 27)) for j in range(27))
    assert abs(shannon_entropy(mu, UniformPartition(9)) - ln50(9)) < Decimal("1e-45")


def test_measure_validation():
    with pytest.raises(ValueError):
        EmpiricalMeasure(())
    with pytest.raises(ValueError):
        EmpiricalMeasure(((CirclePoint(Fraction(0)), Fraction(1, 2)),))


@settings(max_examples=40)
@given(measures, st.integers(2, 7))
def test_pushforward_moves_mass(mu, q):
    nu = pushforward(mu, q)
    want = {}
    for x, w in mu.support:
        y = CirclePoint((q * x.value) % 1)
        want[y] = want.get(y, 0) + w
    assert dict(nu.support) == want


@settings(max_examples=40)
@given(measures, st.integers(2, 5), st.integers(1, 6))
def test_invariance_defect_matches_float(mu, q, k):
    avg = average_T(mu, q, k)
    ref = max(abs(sum(float(w) * (cmath.exp(2j * math.pi * h * q * float(x.value))
                                  - cmath.exp(2j * math.pi * h * float(x.value)))
                      for x, w in avg.support)) for h in range(1, 5))
    got = invariance_defect(avg, q, 4)
    assert abs(float(got) - ref) < 1e-9
    assert got <= mpmath.mpf(2) / k + mpmath.mpf(10) ** -40


def test_translate_check():
    mu = EmpiricalMeasure.uniform(CirclePoint(Fraction(j, 50)) for j in range(50))
    chk = translate_entropy_check(mu, 10, CirclePoint(Fraction(1, 37)))
    assert chk.difference <= Decimal(2).ln()


def brute_witnesses(x, q, n, L, tol):
    pts = orbit(x.point, q, L)
    g = q ** n
    out = set()
    for i in range(L):
        for j in range(i + 1, L):
            d = (pts[i].value - pts[j].value) % 1
            for ell in range(1, g):
                if ell % q == 0:
                    continue
                r = abs(d - Fraction(ell, g))
                if min(r, 1 - r) < tol:
                    out.add((i, j, ell))
    return out


def test_difference_search_matches_brute_force():
    x = approx_irrational("sqrt2", 60)
    q, n = 3, 2
    tol = Fraction(1, q ** (n + 2))
    L = min(max_orbit_length(x, q, tol), 60)
    got = difference_point_search(x, q, n, L, tol)
    assert {(w.i, w.j, w.ell) for w in got} == brute_witnesses(x, q, n, L, tol)
    assert got and all(w.gcd_d == 1 for w in got)
    assert witnesses_to_csv(got).splitlines()[0] == "n,ell,gcd_d,residual"


def test_difference_search_guards():
    x = approx_irrational("sqrt2", 20)
    with pytest.raises(InsufficientPrecision):
        difference_point_search(x, 3, 2, 200)
    with pytest.raises(InvalidLevel):
        difference_point_search(x, 3, 0, 5)
    with pytest.raises(GuardError):
        difference_point_search(x, 3, 2, 5, Fraction(1, 10))


def test_chained_pairs_reduce_numerators():
    x = approx_irrational("sqrt2", 80)
    q = 3
    lo = difference_point_search(x, q, 2, 40)
    hi = difference_point_search(x, q, 3, 40)
    for a, b in chained_gcd_pairs(lo, hi, q):
        assert b.ell % q ** 2 == a.ell


def test_delta_atoms_against_brute_force():
    A = PointCloud.of(Fraction(k, 31) for k in range(0, 31, 3))
    B = PointCloud.of(Fraction(k, 17) for k in range(5))
    P = UniformPartition(27)
    da = delta_atoms(A, B, P)
    want = {math.floor(((a.value - b.value) % 1) * 27) for a in A.points for b in B.points}
    assert da.delta == want
    assert 4 * len(da.chosen) ** 2 >= len(da.delta)


def test_build_m_N_one_point_per_atom():
    cloud = PointCloud.of(Fraction(k, 100) for k in range(100))
    mu = build_m_N(cloud, UniformPartition(9))
    assert len(mu.support) == 9
    assert all(w == Fraction(1, 9) for _, w in mu.support)


def test_growth_experiment_small_scale():
    x = approx_irrational("sqrt2", 200)
    rep = entropy_growth_experiment(x, 3, Geometric(2), [1, 2, 3])
    for row in rep.rows:
        assert abs(row.H_raw - ln50(row.occupied)) < Decimal("1e-40")
        assert row.occupied <= 3 ** row.N
        assert row.witnesses > 0 and row.gcds == (1,)
    assert rep.to_csv().splitlines()[0] == "N,k,H_raw,H_avg,defect,ratio"
    assert rep.summary()["prime"] == 3


def test_inequality_suite_small():
    rep = inequality_suite(40, random.Random("test"))
    assert rep.ok and rep.checked["concavity"] == 40
