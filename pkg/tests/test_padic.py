from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from furstlab.errors import ExpDomainError, LogDomainError, NoAnalyticModel, NotAUnit, NotPrime
from furstlab.padic import (
    InterpolationCertificate,
    Interpolant,
    PadicInt,
    continuity_test,
    critical_point_scan,
    interpolate_eval,
    interpolation_stride,
    mahler_coefficients,
    padic_exp,
    padic_log,
    strassmann_bound,
    val,
)
from furstlab.seqgen import DoubleExp, Geometric, Polynomial, PolynomialSeq


def reduce_mod(x: Fraction, p: int, N: int) -> int:
    m = p ** N
    assert x.denominator % p != 0
    return x.numerator * pow(x.denominator, -1, m) % m


def log_oracle(u: int, p: int, N: int, terms: int = 120) -> int:
    z = Fraction(u - 1)
    s = sum(Fraction((-1) ** (k + 1)) * z ** k / k for k in range(1, terms))
    return reduce_mod(s, p, N)


def exp_oracle(z: int, p: int, N: int, terms: int = 120) -> int:
    s = sum(Fraction(z) ** k / factorial(k) for k in range(terms))
    return reduce_mod(s, p, N)


def test_padic_int_arithmetic_and_text():
    a = PadicInt(5, 4, 7)
    b = PadicInt(5, 3, 626)
    assert (a + b) == PadicInt(5, 3, 8)
    assert (a * 3).r == 21
    assert PadicInt.parse(str(a)) == a
    assert PadicInt.of(Fraction(1, 2), 3, 3).r * 2 % 27 == 1
    with pytest.raises(NotAUnit):
        PadicInt.of(Fraction(1, 3), 3, 3)
    assert PadicInt(3, 5, 18).valuation == 2
    assert PadicInt(3, 5, 243).valuation is None


def test_val():
    assert val(48, 2) == 4
    assert val(81, 3, N=4) is None
    with pytest.raises(NotPrime):
        val(10, 4)


@pytest.mark.parametrize("u,p,N", [(4, 3, 4), (7, 3, 8), (5, 2, 10), (6, 5, 6), (9, 2, 12), (1 + 7 * 3, 7, 5)])
def test_log_matches_series_oracle(u, p, N):
    assert padic_log(PadicInt(p, N, u)).r == log_oracle(u, p, N)


def test_log_of_four_mod_81():
    assert padic_log(PadicInt(3, 4, 4)).r == 48


@pytest.mark.parametrize("z,p,N", [(3, 3, 6), (4, 2, 10), (5, 5, 5), (18, 3, 8)])
def test_exp_matches_series_oracle(z, p, N):
    assert padic_exp(PadicInt(p, N, z)).r == exp_oracle(z, p, N)


def test_domain_guards():
    with pytest.raises(LogDomainError):
        padic_log(PadicInt(3, 5, 2))
    with pytest.raises(LogDomainError):
        padic_log(PadicInt(2, 5, 3))  # val(3 - 1) = 1 < 2
    with pytest.raises(ExpDomainError):
        padic_exp(PadicInt(2, 5, 2))


@settings(max_examples=60)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(0, 10 ** 12))
def test_exp_log_round_trip(p, t):
    N = 20
    g = 4 if p == 2 else p
    u = PadicInt(p, N, 1 + g * t)
    assert padic_exp(padic_log(u)) == u
    z = PadicInt(p, N, g * t)
    assert padic_log(padic_exp(z)) == z


def test_mahler_coefficients():
    assert mahler_coefficients(Geometric(3), 10) == [2 ** k for k in range(11)]
    assert mahler_coefficients(Geometric(2), 10) == [1] * 11
    # n^2 + 1 takes 1, 2, 5, 10: differences 1, 3, 5 then 2, 2
    assert mahler_coefficients(PolynomialSeq(Polynomial((1, 0, 1))), 5) == [1, 1, 2, 0, 0, 0]


def test_continuity_verdicts():
    assert continuity_test(Geometric(3), 2).verdict == "plausible"
    assert continuity_test(Geometric(2), 2).verdict == "fails"
    assert continuity_test(PolynomialSeq(Polynomial((3, -1, 0, 5))), 7).verdict == "plausible"


@pytest.mark.parametrize("a,p,d,v_log", [(3, 2, 2, 3), (5, 2, 1, 2), (2, 3, 2, 1), (4, 3, 1, 1), (5, 3, 2, 1), (7, 5, 4, 2)])
def test_stride_certificates(a, p, d, v_log):
    cert = interpolation_stride(a, p)
    assert (cert.d, cert.S, cert.v_log, cert.guard_ok) == (d, d, v_log, True)
    # oracle: the stride is the order of a in (Z/p)^*, or the 4 | a^S - 1 step for p = 2
    assert (pow(a, cert.S) - 1) % (4 if p == 2 else p) == 0


def test_stride_errors():
    with pytest.raises(NotAUnit):
        interpolation_stride(6, 3)
    with pytest.raises(NotPrime):
        interpolation_stride(3, 6)


def test_interpolation_matches_powers():
    cert = interpolation_stride(3, 2)
    f = Interpolant(cert, 20)
    for n in range(0, 200):
        assert f(n).r == pow(9, n, 2 ** 20)
    assert interpolate_eval(cert, 7, 20).r == pow(9, 7, 2 ** 20)


def test_interpolant_at_non_integer_point_is_a_limit():
    # x = -1 is the 2-adic limit of 2^k - 1; a^(S x) agrees with 9^(2^k - 1) to growing precision
    cert = interpolation_stride(3, 2)
    N = 16
    target = interpolate_eval(cert, PadicInt(2, N, -1)).r
    assert target * 9 % 2 ** N == 1
    assert pow(9, 2 ** 20 - 1, 2 ** N) == target


def test_strassmann_and_critical_points():
    coeffs = [PadicInt(3, 6, c) for c in (9, 3, 27, 3, 81)]
    assert strassmann_bound(coeffs) == 3
    rep = critical_point_scan(interpolation_stride(3, 2), 20)
    assert rep.count == 0  # L exp(L x) has no zeros
    with pytest.raises(NoAnalyticModel):
        critical_point_scan(InterpolationCertificate(3, 2, 1, 1, 1, False), 10)


def test_double_exp_norm_valuations():
    spec = DoubleExp(2, 2)
    assert [val(spec.term(k), 2) for k in range(1, 6)] == [2, 4, 8, 16, 32]
