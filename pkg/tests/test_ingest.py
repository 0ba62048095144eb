import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimple.ingest import (
    ConstantSeriesWarning,
    TensorFormatError,
    correlations,
    edge_budget,
    format_tensor,
    from_timeseries,
    parse_tensor,
    read_tensor,
    read_timeseries_csv,
    write_tensor,
)

from conftest import random_signed_adjacency


def series_with_correlation(R, T=12, seed=0):
    """T x n series whose sample Pearson matrix equals R exactly."""
    rng = np.random.default_rng(seed)
    n = R.shape[0]
    Z = rng.standard_normal((T, n))
    Z -= Z.mean(axis=0)
    Q = np.linalg.qr(Z)[0]
    return Q @ np.linalg.cholesky(R).T


class TestTensorFile:
    def test_header_only(self):
        A = parse_tensor("#dimple v1 n=4 L=2\n")
        assert A.shape == (2, 4, 4) and not A.any()

    def test_single_edge(self):
        A = parse_tensor("#dimple v1 n=2 L=1\n0\t0\t1\t1\n")
        assert A[0, 0, 1] == 1 and A[0, 1, 0] == 1
        assert A.dtype == np.int8

    def test_exact_bytes(self, tmp_path):
        A = np.zeros((2, 3, 3), dtype=np.int8)
        A[1, 0, 2] = A[1, 2, 0] = -1
        A[0, 1, 2] = A[0, 2, 1] = 1
        path = tmp_path / "t.tsv"
        write_tensor(A, path)
        assert path.read_bytes() == b"#dimple v1 n=3 L=2\n0\t1\t2\t1\n1\t0\t2\t-1\n"

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 15), st.floats(0, 1))
    def test_round_trip(self, seed, L, n, density):
        rng = np.random.default_rng(seed)
        A = np.array([random_signed_adjacency(rng, n, density) for _ in range(L)])
        back = parse_tensor(format_tensor(A))
        assert back.dtype == np.int8 and np.array_equal(back, A)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("", 1),
            ("#dimple v2 n=2 L=1\n", 1),
            ("#dimple v1 n=2 L=1\n0\t0\t1\n", 2),
            ("#dimple v1 n=2 L=1\n0\t0\tx\t1\n", 2),
            ("#dimple v1 n=2 L=1\n0\t0\t2\t1\n", 2),
            ("#dimple v1 n=2 L=1\n1\t0\t1\t1\n", 2),
            ("#dimple v1 n=3 L=1\n0\t1\t1\t1\n", 2),
            ("#dimple v1 n=3 L=1\n0\t2\t1\t1\n", 2),
            ("#dimple v1 n=3 L=1\n0\t0\t1\t2\n", 2),
            ("#dimple v1 n=3 L=1\n0\t0\t1\t0\n", 2),
            ("#dimple v1 n=3 L=1\n0\t0\t1\t1\n0\t0\t2\t1\n0\t0\t1\t-1\n", 4),
        ],
    )
    def test_errors_name_line(self, text, line):
        with pytest.raises(TensorFormatError) as info:
            parse_tensor(text)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}:")

    def test_write_rejects_invalid(self, tmp_path):
        with pytest.raises(ValueError):
            write_tensor(np.ones((1, 2, 2), dtype=np.int8), tmp_path / "x")
        bad = np.zeros((1, 2, 2), dtype=np.int8)
        bad[0, 0, 1] = 1
        with pytest.raises(ValueError):
            write_tensor(bad, tmp_path / "x")

    def test_file_round_trip(self, tmp_path, rng):
        A = np.array([random_signed_adjacency(rng, 20) for _ in range(3)])
        write_tensor(A, tmp_path / "a.tsv")
        assert np.array_equal(read_tensor(tmp_path / "a.tsv"), A)


class TestTimeseries:
    def test_identical_series(self):
        y = np.array([1.0, 3.0, 2.0, 5.0])
        for q in (0.01, 0.5, 1.0):
            assert from_timeseries([np.c_[y, y]], q)[0, 0, 1] == 1

    def test_negated_series(self):
        y = np.array([1.0, 3.0, 2.0, 5.0])
        assert from_timeseries([np.c_[y, -y]], 0.4)[0, 0, 1] == -1

    def test_hand_correlations(self):
        R = np.array([[1.0, 0.9, -0.5], [0.9, 1.0, -0.1], [-0.5, -0.1, 1.0]])
        Y = series_with_correlation(R)
        assert np.allclose(correlations(Y), R, atol=1e-12)
        A = from_timeseries([Y], 2 / 3)[0]
        assert A[0, 1] == 1 and A[0, 2] == -1 and A[1, 2] == 0
        assert np.array_equal(A, A.T) and not np.diag(A).any()

    def test_pearson_matches_numpy(self, rng):
        Y = rng.standard_normal((30, 6))
        assert np.allclose(correlations(Y), np.corrcoef(Y, rowvar=False), atol=1e-12)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            correlations(np.zeros((2, 3)))

    def test_bad_fraction(self, rng):
        with pytest.raises(ValueError):
            from_timeseries([rng.standard_normal((5, 3))], 0.0)

    def test_constant_series(self, rng):
        Y = rng.standard_normal((10, 4))
        Y[:, 2] = 7.0
        with pytest.warns(ConstantSeriesWarning):
            A = from_timeseries([Y], 1.0)[0]
        assert not A[2].any()

    def test_ties_lexicographic(self):
        y = np.array([1.0, 2.0, 4.0, 3.0])
        Y = np.c_[y, y, y, y]
        A = from_timeseries([Y], 0.5)[0]
        # all |r| = 1; the first three pairs in (i, j) order win
        assert A[0, 1] == A[0, 2] == A[0, 3] == 1
        assert A[1, 2] == A[1, 3] == A[2, 3] == 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 25), st.floats(0.01, 1.0))
    def test_edge_count(self, seed, n, q):
        rng = np.random.default_rng(seed)
        panel = [rng.standard_normal((15, n)) for _ in range(2)]
        A = from_timeseries(panel, q)
        N = n * (n - 1) // 2
        for a in A:
            assert np.count_nonzero(np.triu(a)) == edge_budget(q, N)
        assert edge_budget(q, N) == math.ceil(q * N - 1e-9)

    def test_affine_and_sign_invariance(self, rng):
        Y = rng.standard_normal((40, 8))
        A = from_timeseries([Y])[0]
        Z = 3.0 * Y + 5.0
        Z[:, 4] = -2.0 * Y[:, 4] + 1.0
        B = from_timeseries([Z])[0]
        flip = np.ones(8)
        flip[4] = -1
        assert np.array_equal(B, (A * np.outer(flip, flip)).astype(np.int8))

    def test_global_threshold(self, rng):
        panel = [rng.standard_normal((20, 6)) for _ in range(3)]
        A = from_timeseries(panel, 0.4, global_threshold=True)
        assert sum(np.count_nonzero(np.triu(a)) for a in A) == edge_budget(0.4, 45)

    def test_csv(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("a,b,c\n1,2,3\n2,1,0\n3,5,1\n")
        assert read_timeseries_csv(p, header=True).shape == (3, 3)
