from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from conftest import int_matrices
from hypothesis import given
from hypothesis import strategies as st

from zerorect.constructions import gen_c2
from zerorect.errors import BadInput, NumericalFailure
from zerorect.matcore import (DenseMatrix, SubmatrixSelection, frobenius_sq, integer_rank,
                              is_separated, numerical_rank, p_of, q_of, rational_rank,
                              scaled_integer, svd)


def test_average_examples():
    assert p_of(np.ones((2, 2), dtype=int)) == 1
    assert p_of(np.eye(2, dtype=int)) == Fraction(1, 2)
    assert p_of(np.array([[0, 2], [1, 1]])) == 1


def test_variance_examples():
    assert q_of(np.ones((3, 3), dtype=int)) == 0
    assert q_of(np.eye(2, dtype=int)) == Fraction(1, 4)


@given(int_matrices(), st.integers(-5, 5))
def test_variance_is_shift_invariant(m, c):
    assert q_of(m) == q_of(m + c)
    assert p_of(m + c) == p_of(m) + c


@given(int_matrices())
def test_variance_identity(m):
    # q = mean of squares minus square of mean
    assert q_of(m) == frobenius_sq(m) / m.size - p_of(m) ** 2


def test_separation_examples():
    assert is_separated(np.array([[0, 1], [1, 0]]))
    assert not is_separated(np.array([[0.5]]))
    assert is_separated(np.array([[-0.3, 2.0]]))


def test_svd_examples():
    res = svd(np.eye(4))
    assert np.allclose(res.s, 1) and res.rank == 4
    assert res.nuclear == pytest.approx(4)
    res = svd(np.ones((5, 5)))
    assert res.rank == 1 and res.s[0] == pytest.approx(5)


def test_svd_rejects_nonfinite():
    with pytest.raises(NumericalFailure):
        svd(np.array([[np.nan, 1.0]]))
    with pytest.raises(BadInput):
        svd(np.eye(2), tol=0)


def test_c2_rank_is_at_most_r():
    _, mat = gen_c2(16, 2)
    assert numerical_rank(mat) <= 16
    assert integer_rank(mat.data.astype(np.int64)) <= 16


@given(st.integers(1, 4), st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_rank_routes_agree(k, m, n, seed):
    rng = np.random.default_rng(seed)
    mat = rng.integers(-2, 3, size=(m, k)) @ rng.integers(-2, 3, size=(k, n))
    exact = integer_rank(mat)
    assert exact == rational_rank(mat.astype(object)) == numerical_rank(mat)
    assert exact <= k


@given(int_matrices())
def test_svd_reconstructs(m):
    if not np.any(m):
        return
    res = svd(m)
    assert np.allclose(res.reconstruct(), m, atol=1e-8)
    # nuclear norm never exceeds sqrt(rank) * Frobenius norm
    assert res.nuclear <= np.sqrt(res.rank) * np.linalg.norm(m) * (1 + 1e-12)


def test_csv_round_trip_and_modes():
    mat = DenseMatrix.from_csv("1,2\n3,4\n")
    assert mat.shape == (2, 2)
    assert DenseMatrix.from_csv(mat.to_csv()).data.tolist() == [[1, 2], [3, 4]]
    rat = DenseMatrix.from_csv("1/3,2\n", rational=True)
    assert rat.data[0, 0] == Fraction(1, 3)
    assert DenseMatrix.from_csv(rat.to_csv(), rational=True).data[0, 0] == Fraction(1, 3)
    with pytest.raises(BadInput):
        DenseMatrix.from_csv("1,2\n3\n")
    with pytest.raises(BadInput):
        DenseMatrix.from_csv("a,b\n")


def test_selection_compose_and_json():
    outer = SubmatrixSelection((1, 3, 4), (0, 2))
    inner = SubmatrixSelection((0, 2), (1,))
    assert outer.compose(inner) == SubmatrixSelection((1, 4), (2,))
    assert outer.to_json_obj() == {"rows": [2, 4, 5], "cols": [1, 3]}
    with pytest.raises(BadInput):
        outer.validate((4, 3))


def test_scaled_integer():
    arr = np.array([[Fraction(1, 2), Fraction(1, 3)]], dtype=object)
    z, d = scaled_integer(arr)
    assert d == 6 and z.tolist() == [[3, 2]]
