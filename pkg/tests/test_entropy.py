import math
from decimal import Decimal

import pytest

from furstlab.entropy import (
    comb_entropy,
    local_positivity,
    residue_count,
    tail_window,
    upper_entropy_estimate,
)
from furstlab.errors import ModulusGuard
from furstlab.seqgen import DoubleExp, Geometric, PolynomialSeq, Polynomial, constant, identity


def brute_count(f, m, k):
    """Residues of f(0), ..., f(k-1) mod m from exact big integers."""
    return len({f(i) % m for i in range(k)})


def test_double_exponential_mod_nine():
    spec = DoubleExp(2, 2)
    assert sorted({spec.term_mod(k, 9) for k in range(40)}) == [2, 4, 7]


@pytest.mark.parametrize("n", range(1, 7))
def test_geometric_counts_match_brute_force(n):
    k = 4 * 3 ** n
    assert residue_count(Geometric(2), 3, n, k) == brute_count(lambda i: 2 ** i, 3 ** n, k)


@pytest.mark.parametrize("n", range(1, 5))
def test_double_exp_counts_match_brute_force(n):
    k = min(4 * 3 ** n, 60)
    oracle = brute_count(lambda i: pow(2, 2 ** i, 3 ** n), 3 ** n, k)
    assert residue_count(DoubleExp(2, 2), 3, n, k) == oracle


def test_polynomial_entropy_is_full():
    # n -> n hits every residue
    assert residue_count(identity(), 5, 3, 125) == 125
    assert abs(comb_entropy(identity(), 5, 3, 125) - Decimal(5).ln()) < Decimal("1e-27")


def test_comb_entropy_value():
    h = comb_entropy(Geometric(2), 3, 4, 4 * 81)
    assert abs(float(h) - math.log(54) / 4) < 1e-15


def test_modulus_guard():
    with pytest.raises(ModulusGuard):
        residue_count(Geometric(2), 10, 13, 10)


def test_profile_tail_and_csv():
    prof = upper_entropy_estimate(Geometric(2), 3, 6)
    assert [r.count for r in prof.rows] == [2 * 3 ** (n - 1) for n in range(1, 7)]
    assert prof.tail_sup == max(r.h for r in prof.rows[-tail_window(6):])
    assert prof.to_csv().splitlines()[0] == "N,K,count,h"


def test_positivity_verdicts():
    rep = local_positivity(Geometric(2), 6, 8)
    assert rep.positive and rep.positive_primes == [3]
    assert not local_positivity(Geometric(6), 6, 8).positive
    assert not local_positivity(constant(7), 6, 8).positive
    assert rep.to_dict()["verdict"] == "positive"


def test_explicit_threshold_overrides_ratio():
    rep = local_positivity(PolynomialSeq(Polynomial((0, 0, 1))), 5, 4, threshold=Decimal(0))
    assert rep.positive
