import warnings

import numpy as np
import pytest

from dimple.kmeans import KMeansConfig
from dimple.layers import (
    DegenerateLayerWarning,
    cluster_algorithm1,
    cluster_algorithm3,
    cluster_gram,
    cluster_layers,
    empirical_gram,
    layer_projections,
)
from dimple.linalg import center_double, is_orthonormal
from dimple.metrics import misclustering_rate, sin_theta
from dimple.model import GeneratorConfig, generate, truncated_normal

from conftest import random_basis


def fig1_config(n, L=9, seed=0, b=0.05):
    return GeneratorConfig(n=n, L=L, latents=[truncated_normal(3)] * 3, b_low=-b, b_high=b, seed=seed)


def test_zero_layer_warns():
    A = np.zeros((1, 6, 6), dtype=np.int8)
    with pytest.warns(DegenerateLayerWarning):
        (U,) = layer_projections(A, 2)
    assert U.shape == (6, 2) and is_orthonormal(U)


def test_noiseless_projection_recovers_centered_span():
    truth, _ = generate(fig1_config(300, L=4, seed=5))
    P = truth.P
    bases = layer_projections(P, truth.layer_ranks())
    for l, U in enumerate(bases):
        m = truth.labels.labels[l]
        V = truth.U_centered[m]
        assert np.linalg.norm(U @ U.T - V @ V.T) < 1e-10
        assert sin_theta(V, U)[1] < 1e-10


def test_gram_diagonal_is_rank():
    _, A = generate(fig1_config(500, L=4, seed=1))
    G = empirical_gram(layer_projections(A, 3))
    assert np.array_equal(np.diag(G), np.full(4, 3.0))
    assert np.array_equal(G, G.T)


def test_gram_identical_and_orthogonal(rng):
    U = random_basis(rng, 10, 2)
    I = np.eye(10)
    G = empirical_gram([U, U, I[:, :2], I[:, 2:4]])
    assert G[0, 1] == pytest.approx(2.0)
    assert G[2, 3] == 0.0


def test_gram_rejects_mismatch(rng):
    with pytest.raises(ValueError):
        empirical_gram([random_basis(rng, 5, 1), random_basis(rng, 6, 1)])


def test_gram_rotation_invariant(rng):
    bases = [random_basis(rng, 30, 3) for _ in range(5)]
    G = empirical_gram(bases)
    W = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    rotated = [bases[0] @ W] + bases[1:]
    assert np.allclose(empirical_gram(rotated), G, atol=1e-10)
    # explicit vec(UU^T) inner products
    vecs = np.array([(U @ U.T).ravel() for U in bases])
    assert np.allclose(vecs @ vecs.T, G, atol=1e-10)


def test_population_gram_block_structure():
    cfg = GeneratorConfig(n=800, L=3, latents=[truncated_normal(3)] * 2, pi=[0.5, 0.5], seed=3)
    truth, _ = generate(cfg)
    while len(set(truth.labels.labels.tolist())) < 2:
        cfg = GeneratorConfig(n=800, L=3, latents=cfg.latents, pi=cfg.pi, seed=cfg.seed + 1)
        truth, _ = generate(cfg)
    bases = [layer_projections([center_double(truth.probability(l))], 3, centered=False)[0] for l in range(3)]
    G = empirical_gram(bases)
    s = truth.labels.labels
    for i in range(3):
        for j in range(3):
            if s[i] == s[j]:
                assert abs(G[i, j] - 3) < 1e-8
            else:
                assert G[i, j] <= 0.5


def test_m_equal_one():
    _, A = generate(fig1_config(60, L=5))
    assert np.all(cluster_algorithm1(A, 1, 3).labels == 0)
    assert np.all(cluster_algorithm3(A, 1, 3).labels == 0)


def test_identical_layers_single_cluster():
    _, A = generate(fig1_config(60, L=1))
    A = np.repeat(A, 4, axis=0)
    assert np.all(cluster_algorithm3(A, 1, 3).labels == 0)
    G = empirical_gram(layer_projections(A, 3, centered=False))
    assert np.allclose(G, 3.0)


def test_m_greater_than_l_rejected():
    _, A = generate(fig1_config(40, L=2))
    with pytest.raises(ValueError):
        cluster_algorithm1(A, 3, 3)
    with pytest.raises(ValueError):
        cluster_gram(np.eye(2), 3)


def test_noiseless_orthogonal_groups():
    n = 120
    I = np.eye(n)
    # two groups on disjoint node blocks, so centered spans are nearly orthogonal
    X1 = np.zeros((n, 2))
    X1[: n // 2] = random_basis(np.random.default_rng(0), n // 2, 2) * 5
    X2 = np.zeros((n, 2))
    X2[n // 2 :] = random_basis(np.random.default_rng(1), n // 2, 2) * 5
    rng = np.random.default_rng(2)
    layers, truth = [], []
    for l in range(8):
        m = l % 2
        X = (X1, X2)[m]
        B = rng.uniform(-0.05, 0.05, size=(2, 2))
        B = B + B.T + np.diag([0.3, -0.2])
        layers.append(X @ B @ X.T)
        truth.append(m)
    part = cluster_algorithm1(np.array(layers), 2, 2)
    assert misclustering_rate(part, np.array(truth)) == 0
    assert I.shape == (n, n)


def test_layer_permutation_equivariant():
    truth, A = generate(fig1_config(200, L=12, seed=7, b=0.3))
    km = KMeansConfig(3, seed=4)
    base = cluster_algorithm1(A, 3, 3, km).labels
    perm = np.random.default_rng(0).permutation(12)
    permuted = cluster_algorithm1(A[perm], 3, 3, km).labels
    assert misclustering_rate(permuted, base[perm]) == 0
    assert misclustering_rate(base, truth.labels) == 0


def test_deterministic_and_auto_m():
    # balanced groups; the eigengap rule cannot see a small group next to large ones
    truth, A = generate(fig1_config(200, L=30, seed=0, b=0.3))
    assert np.array_equal(truth.labels.sizes(), [10, 10, 10])
    a = cluster_layers(A, 3, 3, KMeansConfig(3, seed=1))
    b = cluster_layers(A, 3, 3, KMeansConfig(3, seed=1))
    assert np.array_equal(a.labels, b.labels)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        auto = cluster_layers(A, None, 3)
    assert auto.M == 3
    assert misclustering_rate(auto, truth.labels) == 0


def test_auto_rank_per_layer(rng):
    n = 200
    layers = []
    for k in (2, 4):
        U = np.linalg.qr(rng.standard_normal((n, k)) - 0)[0]
        U = center_double(U @ U.T)
        U = np.linalg.eigh(U)[1][:, -k:]
        S = U @ np.diag(np.linspace(30, 20, k)) @ U.T
        E = rng.normal(0, 0.05, (n, n))
        layers.append(S + E + E.T)
    bases = layer_projections(np.array(layers))
    assert [B.shape[1] for B in bases] == [2, 4]
