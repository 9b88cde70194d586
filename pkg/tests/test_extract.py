from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import family_pairs
from hypothesis import given
from hypothesis import strategies as st

from zerorect.constructions import gen_c1, gen_pbiased, pbiased_covering_formula
from zerorect.errors import DensityTooLow, Exhausted, NoDisjointPairs
from zerorect.extract import (ExtractionParams, check_tuple, choose_k, clean_min_degree,
                              covering_probability_mc, drc_witness_search, grow_tuple,
                              is_bad_set, random_union_extract, verify_tuple)
from zerorect.famcore import (BitSet, Distribution, SetFamily, build_graph, disjoint_pairs,
                              graph_from_adjacency)
from zerorect.oracles import covering_probability_exact, max_cross_disjoint_biclique


def cross_disjoint(r, s):
    return all(not x & y for x in r.masks for y in s.masks)


def test_random_union_on_split_power_sets():
    a = SetFamily.power_set(6, [1, 2, 3])
    b = SetFamily.power_set(6, [4, 5, 6])
    res = random_union_extract(a, b, ExtractionParams(trials=16))
    assert len(res.r) == len(a) or set(res.r.masks) <= set(a.masks)
    assert len(res.s) == len(b)
    assert cross_disjoint(res.r, res.s)


def test_random_union_without_edges():
    one = SetFamily.from_lists(1, [[1]])
    with pytest.raises(NoDisjointPairs):
        random_union_extract(one, one)


def test_random_union_against_oracle_on_construction_one():
    n = 8
    a, b = gen_c1(n, 1)
    best, _, _ = max_cross_disjoint_biclique(a, b)
    delta = disjoint_pairs(a, b).density
    target = best * 2.0 ** (-4 * math.sqrt(n * math.log2(1 / delta)))
    hits = sum(random_union_extract(a, b, ExtractionParams(trials=8, seed=s)).product >= target
               for s in range(100))
    assert hits >= 50


def test_random_union_serial_and_parallel_agree():
    a, b = gen_c1(6, 1)
    p = ExtractionParams(trials=12, seed=7)
    one = random_union_extract(a, b, p, jobs=1)
    many = random_union_extract(a, b, p, jobs=4)
    assert one.trace == many.trace
    assert one.r == many.r and one.s == many.s


@given(family_pairs(max_n=6, max_size=10), st.integers(0, 1000))
def test_random_union_output_is_cross_disjoint(pair, seed):
    a, b = pair
    if disjoint_pairs(a, b).count == 0:
        return
    res = random_union_extract(a, b, ExtractionParams(trials=4, seed=seed))
    assert res.product >= 1
    assert cross_disjoint(res.r, res.s)
    assert set(res.r.masks) <= set(a.masks) and set(res.s.masks) <= set(b.masks)


def test_choose_k_clamps():
    assert choose_k(16, 0.5) == 4
    assert choose_k(2, 0.999) == 1
    assert choose_k(100, 0.001) >= 1


def test_is_bad_set_examples():
    f = SetFamily.power_set(3)
    assert is_bad_set((1 << 3) - 1, f, 1.0) == (False, 8)
    assert is_bad_set((1 << 3) - 1, f, 1.0)[1] == len(f)
    assert is_bad_set(0, SetFamily.power_set(2), 0.5)[1] == 1
    assert is_bad_set(BitSet.from_elements(3, [1, 2]), f, 0.5) == (False, 4)
    assert is_bad_set(BitSet.from_elements(3, [1, 2]), f, 0.75) == (True, 4)


def test_covering_mc_point_mass():
    est = covering_probability_mc(Distribution(3, (0,), (1,)), 2, 1000)
    assert est.estimate == 1 and est.low == est.high == 1


def test_covering_mc_brackets_exact_values():
    mu = gen_pbiased(6, "1/3")
    est = covering_probability_mc(mu, 2, 100_000, seed=3)
    assert est.contains(float(pbiased_covering_formula(6, "1/3", 2)))
    two = Distribution.uniform(SetFamily.from_lists(2, [[1], [2]]))
    assert covering_probability_mc(two, 1, 100_000, seed=4).contains(0.5)


def test_covering_mc_is_deterministic():
    mu = gen_pbiased(5, "1/2")
    assert covering_probability_mc(mu, 2, 5000, seed=9) == covering_probability_mc(mu, 2, 5000, seed=9)


@pytest.mark.parametrize("seed", range(5))
def test_covering_mc_agrees_with_exact_on_small_families(seed):
    rng = np.random.default_rng(seed)
    f = SetFamily(5, tuple(int(x) for x in rng.integers(0, 32, size=6)))
    mu = Distribution.uniform(f)
    exact = covering_probability_exact(mu, 2)
    est = covering_probability_mc(mu, 2, 20_000, seed=seed)
    assert est.contains(float(exact)) or abs(est.estimate - float(exact)) < 0.01


def test_clean_complete_graph_is_untouched():
    g = graph_from_adjacency(np.ones((3, 4), dtype=bool))
    res = clean_min_degree(g, 1.0)
    assert res.left == (0, 1, 2) and res.right == (0, 1, 2, 3)


def test_clean_perfect_matching_meets_floors():
    g = graph_from_adjacency(np.eye(4, dtype=bool))
    res = clean_min_degree(g, 0.25)
    sub = g.adj[np.ix_(res.left, res.right)]
    assert res.product >= 0.125 * 16
    assert sub.sum(axis=1).min() >= 0.25 and sub.sum(axis=0).min() >= 0.25


def test_clean_empty_graph():
    with pytest.raises(DensityTooLow):
        clean_min_degree(graph_from_adjacency(np.zeros((3, 3), dtype=bool)), 0.5)


@given(st.lists(st.booleans(), min_size=36, max_size=36), st.sampled_from([0.1, 0.25, 0.5]))
def test_clean_postconditions(bits, eps):
    adj = np.array(bits).reshape(6, 6)
    g = graph_from_adjacency(adj)
    if adj.sum() < eps * 36:
        with pytest.raises(DensityTooLow):
            clean_min_degree(g, eps)
        return
    res = clean_min_degree(g, eps)
    assert res.product >= eps / 2 * 36
    sub = adj[np.ix_(res.left, res.right)]
    assert sub.sum(axis=1).min() >= eps * 6 / 4
    assert sub.sum(axis=0).min() >= eps * 6 / 4


def test_clean_is_order_independent():
    rng = np.random.default_rng(1)
    adj = rng.random((8, 9)) < 0.4
    base = clean_min_degree(graph_from_adjacency(adj), 0.3)
    perm = rng.permutation(8)
    inv = np.argsort(perm)
    moved = clean_min_degree(graph_from_adjacency(adj[perm]), 0.3)
    assert sorted(int(perm[i]) for i in moved.left) == list(base.left)
    assert moved.right == base.right
    assert inv.size == 8


def test_grow_tuple_complete_split_graph():
    a = SetFamily.power_set(4, [1, 2])
    b = SetFamily.power_set(4, [3, 4])
    w = grow_tuple(build_graph(a, b))
    assert w.t >= 1 and verify_tuple(build_graph(a, b), w)
    assert len(w.neighborhood_floors) == w.t


def test_grow_tuple_single_edge():
    g = graph_from_adjacency(np.array([[True]]))
    w = grow_tuple(g)
    assert w.t == 1 and w.neighborhood_sizes == (1,)


def test_grow_tuple_construction_one_reverifies():
    a, b = gen_c1(8, 1)
    g = build_graph(a.subfamily(range(40)), b.subfamily(range(40)))
    for side in ("left", "right"):
        w = grow_tuple(g, side)
        assert verify_tuple(g, w)
        assert all(w.satisfied[1:])


def test_drc_finds_certified_tuple_or_exhausts():
    a = SetFamily.power_set(8, [1, 2, 3, 4])
    b = SetFamily.power_set(8, [5, 6, 7, 8])
    try:
        w = drc_witness_search(a, b, 0.5, seed=0, attempts=200)
    except Exhausted as exc:
        assert exc.stats["attempts"] == 200
    else:
        status = check_tuple(a, b, w.tuple_indices, w.params.s)
        assert status["friendly"] and status["wide"]


def test_drc_single_set_repeats_it():
    a = SetFamily.from_lists(3, [[1]])
    b = SetFamily.from_lists(3, [[2]])
    try:
        w = drc_witness_search(a, b, 0.5, attempts=5)
        assert set(w.tuple_indices) == {0}
    except Exhausted as exc:
        assert exc.stats["attempts"] == 5


def test_drc_zero_density():
    one = SetFamily.from_lists(1, [[1]])
    with pytest.raises(Exhausted):
        drc_witness_search(one, one, 0.5)
