from __future__ import annotations

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zerorect.constructions import gen_c2, gen_c3
from zerorect.disclab import Constants
from zerorect.errors import BadInput, EmptyResult, PreconditionFailed, TooDense
from zerorect.matcore import SubmatrixSelection, half, integer_rank
from zerorect.pipeline import (PipelineConfig, exact_or_numerical_rank, find_constant_submatrix_int,
                               find_zero_submatrix, grow_constant_block, progress_values,
                               regularize_bounded, sparse_zero_extract)


def low_rank_01(rng, size, rank):
    """OR-free 0/1 matrix of rank at most ``rank``: a sum of disjoint-row-support rectangles."""
    m = np.zeros((size, size), dtype=np.int64)
    row_groups = rng.integers(0, rank + 1, size=size)
    for g in range(rank):
        cols = rng.random(size) < 0.5
        m[row_groups == g] = cols
    return m


def test_regularize_examples():
    zero = regularize_bounded(np.zeros((5, 5)), 3)
    assert zero.selection.shape == (5, 5)
    eye = regularize_bounded(np.eye(6), 6)
    assert eye.selection.shape == (6, 6)
    spike = np.zeros((8, 8))
    spike[0, 0] = 10**6
    res = regularize_bounded(spike, 1)
    p = spike.mean()
    assert np.all(res.selection.apply(spike) < 400 * p)
    assert min(res.selection.shape) >= 8 * 0.9


def test_regularize_rejects_negative():
    with pytest.raises(PreconditionFailed):
        regularize_bounded(-np.eye(3), 1)


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(8, 40))
def test_regularize_postcondition(seed, rank, size):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 3, size=(size, rank))
    b = rng.integers(0, 3, size=(rank, size))
    m = (a @ b).astype(float)
    m[rng.integers(size), rng.integers(size)] += 10**5
    r = exact_or_numerical_rank(m)
    if m.sum() == 0:
        return
    res = regularize_bounded(m, r)
    assert np.all(res.selection.apply(m) < 400 * r * r * m.mean())
    assert len(res.selection.rows) >= 0.9 * size and len(res.selection.cols) >= 0.9 * size
    assert len(res.matching) <= r


def test_sparse_examples():
    single = np.zeros((4, 4), dtype=int)
    single[0, 0] = 1
    res = sparse_zero_extract(single, 1)
    assert min(res.selection.shape) >= 2 and not res.selection.apply(single).any()
    corner = np.zeros((8, 8), dtype=int)
    corner[:2, :2] = np.eye(2, dtype=int)
    res = sparse_zero_extract(corner, 2)
    assert min(res.selection.shape) >= 4 and not res.selection.apply(corner).any()
    with pytest.raises(TooDense):
        sparse_zero_extract(np.eye(4, dtype=int), 4)


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(16, 64))
def test_sparse_extraction_and_matching_bound(seed, k, size):
    rng = np.random.default_rng(seed)
    m = np.zeros((size, size), dtype=np.int64)
    for _ in range(k):
        h, w = rng.integers(1, 4, size=2)
        i, j = rng.integers(0, size - 3, size=2)
        m[i:i + h, j:j + w] = rng.integers(1, 3)
    rank = integer_rank(m)
    if rank == 0 or np.count_nonzero(m) * 16 * rank > m.size:
        return
    res = sparse_zero_extract(m, rank)
    assert len(res.matching) <= rank
    assert res.selection.shape[0] >= half(size) and res.selection.shape[1] >= half(size)
    assert not res.selection.apply(m).any()


def test_progress_examples():
    r = 4
    delta = 400 * r * r
    assert progress_values(0.0, 1 / delta, r, 0.1).main == pytest.approx(0)
    assert progress_values(0.5, 0.1, r, 0.1).density == pytest.approx(2)
    assert progress_values(0.3, 0.0, r, 0.1).main == -math.inf
    with pytest.raises(BadInput):
        progress_values(0.5, -1, r, 0.1)


def test_progress_is_increasing_in_p():
    grid = np.linspace(0, 1, 201)
    main = [progress_values(p, 0.1, 9, 0.1).main for p in grid]
    dens = [progress_values(p, 0.1, 9, 0.1).density for p in grid]
    assert np.all(np.diff(main) > 0) and np.all(np.diff(dens) > 0)


def test_config_guards_paper_constant():
    loose = dataclasses.replace(Constants.paper(), c=Fraction(1, 10))
    with pytest.raises(BadInput):
        PipelineConfig(constants=loose)
    with pytest.raises(BadInput):
        PipelineConfig(max_steps=0)
    assert PipelineConfig(constants=Constants.paper()).audit


def test_zero_pipeline_trivial_cases():
    sel, trace = find_zero_submatrix(np.zeros((5, 6), dtype=int))
    assert sel.shape == (5, 6) and trace.steps == []
    with pytest.raises(EmptyResult):
        find_zero_submatrix(np.ones((4, 4), dtype=int))
    with pytest.raises(PreconditionFailed):
        find_zero_submatrix(np.array([[0.5, 0.0], [0.0, 0.0]]))


def test_zero_pipeline_on_construction_two():
    _, mat = gen_c2(16, 2)
    arr = mat.data.astype(np.int64)
    sel, trace = find_zero_submatrix(arr, PipelineConfig())
    assert not sel.apply(arr).any()
    assert min(sel.shape) >= 8
    assert 8 <= min(sel.shape) <= 28
    assert trace.reason in ("sparse", "all-zero")


def test_zero_pipeline_sizes_are_permutation_invariant():
    rng = np.random.default_rng(5)
    m = low_rank_01(rng, 24, 3) * (rng.random((24, 24)) < 0.6)
    m = (m > 0).astype(int)
    if m.mean() > 0.5:
        m = 1 - m
    sel, _ = find_zero_submatrix(m)
    rp, cp = rng.permutation(24), rng.permutation(24)
    sel2, _ = find_zero_submatrix(m[np.ix_(rp, cp)])
    assert sel.shape == sel2.shape


def test_zero_pipeline_paper_audit_small():
    rng = np.random.default_rng(8)
    cfg = PipelineConfig(constants=Constants.paper())
    runs = 0
    for _ in range(30):
        size = int(rng.integers(3, 9))
        m = (rng.random((size, size)) < 0.3).astype(int)
        if m.mean() > 0.5:
            continue
        sel, trace = find_zero_submatrix(m, cfg)
        assert not sel.apply(m).any()
        for step in trace.steps[:-1]:
            assert step.search != "exhaustive" or step.case is not None
        runs += 1
    assert runs >= 20


def test_constant_pipeline_constant_input():
    sel, value, trace = find_constant_submatrix_int(np.full((3, 4), 5))
    assert sel.shape == (3, 4) and value == 5 and trace.reason == "constant"


def test_constant_pipeline_on_shifted_construction_three():
    m = gen_c3(4).data.astype(np.int64) + 1
    sel, value, _ = find_constant_submatrix_int(m)
    assert np.all(sel.apply(m) == value)
    assert min(sel.shape) >= 1


@pytest.mark.parametrize("seed", range(4))
def test_constant_pipeline_on_low_rank_01(seed):
    rng = np.random.default_rng(seed)
    m = low_rank_01(rng, 32, 4)
    assert integer_rank(m) <= 4
    sel, value, _ = find_constant_submatrix_int(m)
    assert np.all(sel.apply(m) == value)


def test_constant_pipeline_rejects_negative():
    with pytest.raises(PreconditionFailed):
        find_constant_submatrix_int(np.array([[-1, 0], [0, 0]]))


def test_grow_constant_block():
    m = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]])
    grown = grow_constant_block(m, SubmatrixSelection([0], [0]), 0)
    assert np.all(grown.apply(m) == 0) and grown.shape[0] * grown.shape[1] >= 2
