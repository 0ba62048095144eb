import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dimple.linalg import center_double, eigengap_rank, gram_entry, is_orthonormal, top_k_eigvecs

from conftest import random_basis


def explicit_center(S):
    n = S.shape[0]
    Pp = np.eye(n) - np.ones((n, n)) / n
    return Pp @ S @ Pp


def vec_inner(U1, U2):
    return float(np.dot((U1 @ U1.T).ravel(), (U2 @ U2.T).ravel()))


symmetric = st.integers(2, 8).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-5, 5, allow_nan=False))
).map(lambda a: a + a.T)


class TestCenterDouble:
    def test_zero(self):
        assert np.array_equal(center_double(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_off_diagonal_ones(self):
        S = np.ones((2, 2)) - np.eye(2)
        assert np.allclose(center_double(S), [[-0.5, 0.5], [0.5, -0.5]], atol=1e-15)

    def test_matches_triple_product(self, rng):
        S = rng.choice([-1.0, 0.0, 1.0], size=(4, 4))
        S = np.triu(S, 1) + np.triu(S, 1).T
        assert np.allclose(center_double(S), explicit_center(S), atol=1e-14)

    @given(symmetric)
    def test_properties(self, S):
        C = center_double(S)
        n = S.shape[0]
        scale = 1e-10 * n * max(np.abs(S).max(), 1.0)
        assert np.array_equal(C, C.T)
        assert np.all(np.abs(C.sum(axis=1)) <= scale)
        assert np.allclose(center_double(C), C, atol=1e-10)
        assert np.allclose(C, explicit_center(S), atol=scale)


class TestTopK:
    def test_diagonal(self):
        s = top_k_eigvecs(np.diag([3.0, 2.0, 1.0]), 2)
        assert np.allclose(s.values, [3, 2])
        assert np.allclose(np.abs(s.vectors), np.eye(3)[:, :2])

    def test_dominant_negative(self):
        s = top_k_eigvecs(-np.diag([5.0, 1.0, 1.0]), 1)
        assert np.allclose(s.values, [-5])
        assert np.allclose(np.abs(s.vectors[:, 0]), [1, 0, 0])

    def test_two_by_two(self):
        s = top_k_eigvecs(np.array([[2.0, 1.0], [1.0, 2.0]]), 2)
        assert np.allclose(s.values, [3, 1])
        r = 1 / np.sqrt(2)
        assert np.allclose(np.abs(s.vectors), [[r, r], [r, r]])
        assert np.allclose(s.vectors[0, 0] * s.vectors[1, 0], 0.5)
        assert np.allclose(s.vectors[0, 1] * s.vectors[1, 1], -0.5)

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            top_k_eigvecs(np.eye(3), 4)
        with pytest.raises(ValueError):
            top_k_eigvecs(np.eye(3), 0)

    @pytest.mark.parametrize("n,k", [(5, 2), (40, 3), (60, 30), (100, 1)])
    def test_residual_and_order(self, rng, n, k):
        S = rng.standard_normal((n, n))
        S = S + S.T
        s = top_k_eigvecs(S, k)
        assert is_orthonormal(s.vectors)
        assert np.all(np.diff(np.abs(s.values)) <= 0)
        res = np.linalg.norm(S @ s.vectors - s.vectors * s.values)
        assert res < 1e-8 * (1 + np.linalg.norm(S))
        ref = np.linalg.eigvalsh(S)
        assert np.allclose(s.values, ref[np.argsort(-np.abs(ref))][:k])

    def test_degenerate_spectrum_stays_orthonormal(self):
        s = top_k_eigvecs(np.zeros((40, 40)), 5)
        assert is_orthonormal(s.vectors)
        S = np.diag(np.r_[np.ones(20), -np.ones(20)])
        assert is_orthonormal(top_k_eigvecs(S, 6).vectors)


class TestGramEntry:
    def test_self(self, rng):
        U = random_basis(rng, 10, 3)
        assert gram_entry(U, U) == pytest.approx(3, abs=1e-10)

    def test_orthogonal(self):
        I = np.eye(4)
        assert gram_entry(I[:, :2], I[:, 2:]) == 0

    def test_brute_force(self, rng):
        U1, U2 = random_basis(rng, 4, 2), random_basis(rng, 4, 2)
        assert gram_entry(U1, U2) == pytest.approx(vec_inner(U1, U2), abs=1e-10)
        assert gram_entry(U1, U2) == pytest.approx(gram_entry(U2, U1), abs=1e-14)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            gram_entry(np.eye(3)[:, :1], np.eye(4)[:, :1])


class TestEigengap:
    def test_examples(self):
        assert eigengap_rank([10, 9, 1, 0.5], 3) == 2
        assert eigengap_rank([5, 0, 0], 2) == 1

    def test_tie_prefers_smaller(self):
        assert eigengap_rank([3, 2, 1, 0], 3) == 1

    def test_rejects(self):
        with pytest.raises(ValueError):
            eigengap_rank([], 1)
        with pytest.raises(ValueError):
            eigengap_rank([1.0, 0.5], 2)

    def test_rank_three_synthetic(self, rng):
        n = 200
        U = random_basis(rng, n, 3)
        H = U @ np.diag([40.0, -30.0, 25.0]) @ U.T
        E = rng.standard_normal((n, n))
        H = H + 0.1 * (E + E.T)
        assert eigengap_rank(top_k_eigvecs(H, 11).values, 10) == 3

    @settings(max_examples=50)
    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=12))
    def test_result_in_range(self, vals):
        vals = sorted(vals, key=lambda v: -abs(v))
        k = eigengap_rank(vals, len(vals) - 1)
        assert 1 <= k <= len(vals) - 1
