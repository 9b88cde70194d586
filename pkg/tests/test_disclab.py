from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import int_matrices
from hypothesis import given
from hypothesis import strategies as st

from zerorect.disclab import (Constants, StepConfig, certify_case, claim_half_check,
                              disc_lower_witness, exact_stats, find_constant_block,
                              gamma2_witness, half_average_deviation_check, halve_reduce_average,
                              min_average_half, rounding_rectangles, two_cases_step,
                              variance_floor)
from zerorect.errors import (BadInput, ConstantsFalsified, PreconditionFailed, ZeroVariance)
from zerorect.matcore import half, is_separated
from zerorect.oracles import cut_norm_exact, disc_exact


def sign_matrices(rows, cols):
    for bits in itertools.product((-1, 1), repeat=rows * cols):
        yield np.array(bits, dtype=np.int64).reshape(rows, cols)


def test_constants_sets():
    paper = Constants.paper()
    assert paper.c == Fraction(1, 10**4) and paper.alpha == Fraction(1, 2**100)
    assert paper.alpha_appendix == Fraction(1, 2**200)
    assert Constants.named("practical").alpha == Fraction(1, 2)
    with pytest.raises(BadInput):
        Constants.named("other")


def test_gamma2_identity_examples():
    w = gamma2_witness(np.eye(4))
    assert w.nuclear == pytest.approx(4)
    assert len(w.rows) == 2 and len(w.cols) == 2
    assert w.value == pytest.approx(1)
    j = gamma2_witness(np.ones((4, 4)))
    assert j.nuclear == pytest.approx(4)
    assert j.value == pytest.approx(2)


def test_gamma2_rejects_zero_matrix():
    with pytest.raises(BadInput):
        gamma2_witness(np.zeros((2, 3)))


@given(int_matrices(max_rows=6, max_cols=6))
def test_gamma2_witness_invariants(m):
    if not m.any():
        return
    w = gamma2_witness(m)
    mm, nn = m.shape
    assert len(w.rows) == half(mm) and len(w.cols) == half(nn)
    assert np.all(np.sum(w.x ** 2, axis=1) <= 1 + 1e-9)
    assert np.all(np.sum(w.y ** 2, axis=1) <= 1 + 1e-9)
    outside_rows = [i for i in range(mm) if i not in w.rows]
    assert not np.any(w.x[outside_rows])
    assert abs(w.value - w.identity_value) <= 1e-6 * max(1, abs(w.identity_value))
    assert w.nuclear <= math.sqrt(w.rank) * np.linalg.norm(m) * (1 + 1e-9)
    assert w.value <= 1.8 * float(cut_norm_exact(m)[0]) + 1e-9


def test_disc_lower_examples():
    with pytest.raises(ZeroVariance):
        disc_lower_witness(np.ones((3, 3)))
    w = disc_lower_witness(np.eye(2))
    assert w.bound <= float(disc_exact(np.eye(2, dtype=int))[0])


@given(int_matrices(max_rows=6, max_cols=6), st.integers(-5, 9))
def test_disc_lower_is_shift_invariant(m, shift):
    if np.all(m == m.flat[0]):
        return
    a = disc_lower_witness(m)
    b = disc_lower_witness(m + shift)
    assert a.selection == b.selection
    assert a.bound == pytest.approx(b.bound, rel=1e-9)


@given(int_matrices(max_rows=6, max_cols=6))
def test_disc_exact_symmetries(m):
    base = disc_exact(m)[0]
    assert disc_exact(-m)[0] == base
    assert disc_exact(m[::-1, ::-1].copy())[0] == base
    assert disc_exact(m.T.copy())[0] == base


def test_rounding_rectangles_are_consistent():
    rng = np.random.default_rng(2)
    m = rng.integers(-3, 4, size=(7, 6))
    best_abs, best_neg = rounding_rectangles(m, samples=32, seed=5)
    cen = m - m.mean()
    assert best_abs[0] == pytest.approx(abs(cen[np.ix_(best_abs[1].rows, best_abs[1].cols)].sum()))
    assert best_abs[0] <= float(disc_exact(m)[0]) + 1e-9
    assert best_neg[0] == pytest.approx(cen[np.ix_(best_neg[1].rows, best_neg[1].cols)].sum())
    assert rounding_rectangles(np.ones((3, 3))) == (None, None)


def test_halve_examples():
    res = halve_reduce_average(np.ones((4, 4), dtype=int))
    assert res.p_after == res.p_before == 1
    eye = halve_reduce_average(np.eye(2, dtype=int))
    assert eye.p_after == 0
    assert eye.target == Fraction(1, 2) - Fraction(1, 2) / 12
    assert eye.meets_target


def test_halve_heuristic_returns_half():
    rng = np.random.default_rng(4)
    m = rng.integers(0, 5, size=(12, 10))
    res = halve_reduce_average(m, mode="heuristic")
    assert res.selection.shape == (6, 5)
    exact = halve_reduce_average(m, mode="exact")
    assert exact.p_after <= res.p_after


@given(int_matrices(max_rows=5, max_cols=5))
def test_min_average_half_matches_enumeration(m):
    sel, val = min_average_half(m)
    mm, nn = m.shape
    best = min(Fraction(int(m[np.ix_(r, c)].sum()), half(mm) * half(nn))
               for r in itertools.combinations(range(mm), half(mm))
               for c in itertools.combinations(range(nn), half(nn)))
    assert val == best
    assert Fraction(int(sel.apply(m).sum()), half(mm) * half(nn)) == best


def test_deviation_check_examples():
    assert half_average_deviation_check(np.ones((3, 3), dtype=int))[0] == 0
    dev, bound, holds = half_average_deviation_check(np.eye(2, dtype=int))
    assert dev == Fraction(1, 2) and bound == Fraction(1, 2) and holds


@pytest.mark.parametrize("shape", [(1, 3), (1, 4), (2, 2), (2, 3), (3, 4), (4, 4)])
def test_claim_half_on_all_sign_matrices(shape):
    for m in sign_matrices(*shape):
        res = claim_half_check(m)
        assert res["exists_low_half"] and res["every_half_close"]


def test_claim_half_low_half_fails_on_some_three_by_three_sign_matrices():
    # with ceil-sized halves of a 3x3 matrix the low half is missed on exactly 9 inputs
    failures = [m for m in sign_matrices(3, 3) if not claim_half_check(m)["exists_low_half"]]
    assert len(failures) == 9
    assert all(claim_half_check(m)["every_half_close"] for m in failures)
    example = np.array([[-1, -1, 1], [1, 1, -1], [1, 1, -1]])
    res = claim_half_check(example)
    assert res["best_half_p"] == 0 and res["target"] == Fraction(-5, 243)


@given(int_matrices(max_rows=5, max_cols=5))
def test_claim_half_every_half_close(m):
    assert claim_half_check(m)["every_half_close"]


def test_find_constant_block():
    m = np.array([[1, 1, 0], [1, 1, 2], [3, 1, 1]])
    sel, val = find_constant_block(m, 2, 2)
    assert val == 1 and np.all(sel.apply(m) == 1)
    assert find_constant_block(np.eye(3, dtype=int), 2, 2) is None
    assert find_constant_block(np.eye(4, dtype=int), 2, 2)[1] == 0
    assert find_constant_block(np.arange(9).reshape(3, 3), 2, 1) is None


def test_variance_floor_examples():
    m = np.array([[0, 1], [1, 0]])
    res = variance_floor(m)
    assert res.floor == Fraction(1, 200) and res.holds
    sep = variance_floor(np.array([[0, 1], [1, 1]]))
    assert sep.p == Fraction(3, 4) and sep.q == Fraction(3, 16) and sep.floor == Fraction(3, 400)
    with pytest.raises(PreconditionFailed):
        variance_floor(np.full((4, 4), 3), "small_variance")
    with pytest.raises(PreconditionFailed):
        variance_floor(np.ones((2, 2)), "large_F")
    with pytest.raises(PreconditionFailed):
        variance_floor(np.array([[0.5, 1]]), "appendix")


@pytest.mark.parametrize("mode", ["large_F", "appendix", "small_variance"])
def test_variance_floors_exhaustive_three_by_three(mode):
    for bits in itertools.product((0, 1), repeat=9):
        m = np.array(bits).reshape(3, 3)
        try:
            res = variance_floor(m, mode)
        except PreconditionFailed:
            continue
        assert res.holds


def test_exact_stats():
    p, q = exact_stats(np.array([[0, 1], [1, 1]]))
    assert (p, q) == (Fraction(3, 4), Fraction(3, 16))


def test_certify_case_rules():
    cfg = StepConfig(rank=4)
    p, q = Fraction(1, 2), Fraction(1, 4)
    assert certify_case(p, q, Fraction(0), Fraction(1), cfg) == "DensityDrop"
    assert certify_case(p, q, Fraction(1, 2), Fraction(1, 8), cfg) == "VarianceDrop"
    assert certify_case(p, q, Fraction(1, 2), Fraction(1, 4), cfg) is None


def test_step_identity_four():
    out = two_cases_step(np.eye(4, dtype=int), StepConfig(rank=4))
    assert out.certified and out.search == "exhaustive"
    p2, q2 = exact_stats(np.eye(4, dtype=int), out.selection)
    assert (p2, q2) == (out.p_after, out.q_after)
    assert certify_case(out.p_before, out.q_before, p2, q2, StepConfig(rank=4)) == out.case


def test_step_variant_rejects_constant():
    with pytest.raises(PreconditionFailed):
        two_cases_step(np.ones((4, 4), dtype=int), StepConfig(rank=1, rule="one-over-r"))


def test_step_paper_constants_on_separated_six_by_six():
    rng = np.random.default_rng(11)
    cfg_args = dict(constants=Constants.paper())
    ran = 0
    for _ in range(40):
        m = rng.choice([0, 0, 0, 0, 1, 2], size=(6, 6))
        p = Fraction(int(m.sum()), 36)
        if not 0 < p < Fraction(9, 10):
            continue
        r = max(1, int(np.linalg.matrix_rank(m)))
        try:
            out = two_cases_step(m, StepConfig(rank=r, **cfg_args))
        except ConstantsFalsified:
            pytest.fail("paper constants falsified on a separated 6x6 matrix")
        assert out.certified
        ran += 1
    assert ran >= 30


def test_step_heuristic_path_on_large_input():
    rng = np.random.default_rng(3)
    m = (rng.random((24, 24)) < 0.3).astype(int)
    out = two_cases_step(m, StepConfig(rank=8, exhaustive_limit=1000))
    assert out.search == "heuristic"
    assert out.selection.shape == (12, 12)
    assert is_separated(m)
