import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentmjpf.errors import NumericError
from latentmjpf.linalg import matmul, matrix_sqrt_psd, symmetrize


def triple_loop_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_matmul_identity():
    m = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_computed():
    out = matmul([[1.0, 2.0], [3.0, 4.0]], [[1.0], [1.0]])
    assert np.array_equal(out, [[3.0], [7.0]])


def test_matmul_matches_triple_loop_oracle():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 4))
    b = rng.normal(size=(4, 3))
    assert np.allclose(matmul(a, b), triple_loop_matmul(a, b), atol=1e-12)


def test_matmul_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_rejects_non_finite():
    bad = np.array([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        matmul(bad, np.eye(2))


@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5),
       st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5),
       st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_matmul_associativity(n, m, p, q, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, m))
    b = rng.normal(size=(m, p))
    c = rng.normal(size=(p, q))
    left = matmul(matmul(a, b), c)
    right = matmul(a, matmul(b, c))
    scale = np.abs(right).max() + 1.0
    assert np.abs(left - right).max() <= 1e-9 * scale


def test_sqrt_diagonal():
    assert np.allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrt_zero_matrix():
    assert np.array_equal(matrix_sqrt_psd(np.zeros((3, 3))), np.zeros((3, 3)))


def test_sqrt_round_trip_spd():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(6, 6))
    m = a @ a.T
    s = matrix_sqrt_psd(m)
    assert np.abs(s @ s.T - m).max() <= 1e-10 * (1.0 + np.abs(m).max())
    assert np.allclose(s, np.tril(s))


def test_sqrt_semidefinite_rank_deficient():
    # rank-1 PSD matrix exercises the zero-pivot path
    v = np.array([1.0, 2.0, 3.0])
    m = np.outer(v, v)
    s = matrix_sqrt_psd(m)
    assert np.abs(s @ s.T - m).max() <= 1e-10 * (1.0 + np.abs(m).max())


def test_sqrt_rejects_non_psd():
    with pytest.raises(NumericError):
        matrix_sqrt_psd(np.diag([1.0, -1.0]))


@given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_sqrt_round_trip_property(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    m = a @ a.T
    s = matrix_sqrt_psd(m)
    assert np.abs(s @ s.T - m).max() <= 1e-10 * (1.0 + np.abs(m).max())


def test_symmetrize():
    m = np.array([[1.0, 2.0], [0.0, 1.0]])
    out = symmetrize(m)
    assert np.array_equal(out, out.T)
    assert out[0, 1] == 1.0
