from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from conftest import families, family_pairs
from hypothesis import given
from hypothesis import strategies as st

from zerorect.errors import EmptyFamily, InvalidFrequency, InvalidPrime, InvalidProbability
from zerorect.famcore import SetFamily, lambda_pairs
from zerorect.spectral import (ENTROPY_CONSTANT, bias, bias_exact, binary_entropy, choose_prime,
                               constant_mod_biclique_search, entropy_gap, entropy_grid_scan,
                               even_odd_check, expected_union_exact, intersection_distribution,
                               parseval_exact, squared_bias_exact, subadditivity_bound,
                               walsh_hadamard)


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    mpmath.mp.dps = 40
    q = mpmath.mpf(1) / 4
    ref = -q * mpmath.log(q, 2) - (1 - q) * mpmath.log(1 - q, 2)
    assert binary_entropy(0.25) == pytest.approx(float(ref), abs=1e-15)
    assert binary_entropy(0.25) == pytest.approx(0.811278, abs=1e-6)
    with pytest.raises(InvalidProbability):
        binary_entropy(1.5)


def test_entropy_gap_examples():
    assert entropy_gap(0.5, 1) == pytest.approx(0.5 + ENTROPY_CONSTANT / 2 - 1)
    assert entropy_gap(0, 7) == ENTROPY_CONSTANT / 2 ** 7


def test_entropy_grid_scan_is_nonnegative():
    scan = entropy_grid_scan(1e-4, 80)
    assert scan.min_gap >= 0
    assert scan.points == 10001 * 80


def test_entropy_grid_minimum_against_extended_precision():
    scan = entropy_grid_scan(1e-4, 80)
    mpmath.mp.dps = 60
    p = mpmath.mpf(scan.argmin_p)
    k = scan.argmin_k
    h = -p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2)
    ref = 1 - (1 - p) ** k + mpmath.e ** 40 / mpmath.mpf(2) ** k - h
    assert ref >= 0
    assert float(ref) == pytest.approx(scan.min_gap, rel=1e-3, abs=1e-12)


def test_expected_union_examples():
    p2 = SetFamily.power_set(2)
    assert expected_union_exact(p2, 1) == 1
    assert expected_union_exact(p2, 2) == Fraction(3, 2)
    assert expected_union_exact(SetFamily.from_lists(4, [[1, 2, 3, 4]]), 5) == 4
    with pytest.raises(EmptyFamily):
        expected_union_exact(SetFamily(3), 1)


@given(families(max_n=6, max_size=10), st.integers(1, 4))
def test_expected_union_matches_enumeration(f, k):
    total = Fraction(0)
    for picks in itertools.product(f.masks, repeat=k) if len(f) ** k <= 4096 else []:
        u = 0
        for x in picks:
            u |= x
        total += bin(u).count("1")
    if len(f) ** k <= 4096:
        assert expected_union_exact(f, k) == total / len(f) ** k


def test_subadditivity_examples():
    assert subadditivity_bound(SetFamily.power_set(4)) == pytest.approx((4, 4))
    assert subadditivity_bound(SetFamily.from_lists(3, [[], [1]])) == pytest.approx((1, 1))


def test_subadditivity_on_random_families():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        f = SetFamily(10, tuple(int(x) for x in rng.integers(0, 1024, size=20)))
        total, log_size = subadditivity_bound(f)
        assert total >= log_size - 1e-12


def test_intersection_distribution_examples():
    empty = SetFamily.from_lists(2, [[]])
    assert intersection_distribution(empty, empty, 2).f == (1, 0)
    p2 = SetFamily.power_set(2)
    # lambda counts by parity: 9 pairs even, 7 odd over 16 pairs
    even = lambda_pairs(p2, p2, 0) + lambda_pairs(p2, p2, 2)
    assert intersection_distribution(p2, p2, 2).f[0] == Fraction(even, 16) == Fraction(5, 8)
    with pytest.raises(InvalidPrime):
        intersection_distribution(p2, p2, 4)


@given(family_pairs(max_n=6), st.sampled_from([2, 3, 5, 7]))
def test_intersection_distribution_sums_to_one(pair, p):
    a, b = pair
    assert sum(intersection_distribution(a, b, p).f) == 1


def test_bias_examples():
    one = SetFamily.from_lists(1, [[1]])
    assert bias(one, one, 2, 1) == pytest.approx(1)
    p1 = SetFamily.power_set(1)
    assert bias_exact(p1, p1) == Fraction(1, 2)
    assert bias(p1, p1, 2, 1) == pytest.approx(0.5)
    with pytest.raises(InvalidFrequency):
        bias(p1, p1, 3, 0)
    with pytest.raises(InvalidFrequency):
        bias(p1, p1, 3, 3)


@given(family_pairs(max_n=6), st.sampled_from([2, 3, 5]))
def test_parseval_exact_and_float_routes(pair, p):
    a, b = pair
    dist = intersection_distribution(a, b, p)
    left, right = parseval_exact(dist)
    assert left == right
    energy = sum(abs(dist.fourier(j)) ** 2 for j in range(p))
    assert energy == pytest.approx(float(right), rel=1e-9)
    for j in range(1, p):
        sq = squared_bias_exact(dist, j).to_complex()
        assert sq.real == pytest.approx(bias(a, b, p, j) ** 2, abs=1e-9)


def test_squared_bias_is_rational_for_two():
    p1 = SetFamily.power_set(1)
    dist = intersection_distribution(p1, p1, 2)
    assert squared_bias_exact(dist, 1).rational_value() == Fraction(1, 4)


def test_choose_prime_in_range():
    for c in (1.0, 0.5, 0.3, 0.1):
        p = choose_prime(c)
        assert 2 / c ** 2 <= p <= max(4 / c ** 2, 2)


def test_walsh_hadamard_is_involutive_up_to_scale():
    v = np.arange(8)
    assert np.array_equal(walsh_hadamard(walsh_hadamard(v)), 8 * v)


def test_even_odd_examples():
    p1 = SetFamily.power_set(1)
    res = even_odd_check(p1, p1)
    assert (res.even, res.odd) == (3, 1)
    assert res.delta == Fraction(1, 4) and res.bound == 8 and res.product == 4 and res.holds
    empty = SetFamily.from_lists(3, [[]])
    res = even_odd_check(empty, empty)
    assert res.delta == Fraction(1, 2) and res.bound == 8 and res.holds


def test_even_odd_exhaustive_small_universe():
    n = 3
    subfamilies = [SetFamily(n, c) for size in (1, 2, 3) for c in itertools.combinations(range(8), size)]
    checked = 0
    for a in subfamilies[::3]:
        for b in subfamilies[::3]:
            res = even_odd_check(a, b)
            if res.delta > 0:
                checked += 1
                assert res.holds
                assert res.product <= res.bound
    assert checked > 500


@given(family_pairs(max_n=7, max_size=16))
def test_even_odd_bound_holds(pair):
    res = even_odd_check(*pair)
    assert res.holds
    assert res.fourier_correlation == res.even - res.odd


def test_constant_mod_biclique_examples():
    a = SetFamily.power_set(2, [1])
    b = SetFamily.power_set(2, [2])
    res = constant_mod_biclique_search(a, b, 2)
    assert res.product == 4 and res.residue == 0
    one = SetFamily.from_lists(1, [[1]])
    assert constant_mod_biclique_search(one, one, 2).product == 1


@given(family_pairs(max_n=4, max_size=10), st.sampled_from([2, 3]))
def test_constant_mod_biclique_meets_sgall_bound(pair, p):
    res = constant_mod_biclique_search(*pair, p)
    assert res.sgall_holds and res.product <= 2 ** pair[0].n
    residues = {bin(x & y).count("1") % p for x in res.left.masks for y in res.right.masks}
    assert residues == {res.residue}
