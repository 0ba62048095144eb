"""Between-layer clustering of a multiplex network.

Each layer is summarized by the projection onto its leading eigenvectors;
layers sharing an ambient subspace have nearly identical projections, so
the Gram matrix of projection inner products is block structured and its
leading eigenvectors separate the groups.
"""
from __future__ import annotations

import logging
import warnings
from typing import Optional, Sequence

import numpy as np

from .kmeans import KMeansConfig, kmeans_cluster
from .linalg import center_double, eigengap_rank, gram_entry, top_k_eigvecs
from .model import LayerPartition

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 10


class DegenerateLayerWarning(UserWarning):
    pass


def _layer_matrix(A_l, centered: bool, strip_signs: bool):
    A_l = np.asarray(A_l, dtype=float)
    if strip_signs:
        A_l = np.abs(A_l)
    return center_double(A_l) if centered else A_l


def layer_projections(A, Ks=None, centered: bool = True, strip_signs: bool = False, k_max: int = DEFAULT_K_MAX):
    """Orthonormal bases of the ``Ks[l]`` leading eigenvectors of each layer.

    With ``centered`` the layer is first replaced by ``(I - Pi) A (I - Pi)``.
    ``Ks=None`` picks every layer's rank by the eigengap rule.
    """
    L = len(A)
    if Ks is None:
        Ks = [None] * L
    elif np.isscalar(Ks):
        Ks = [int(Ks)] * L
    if len(Ks) != L:
        raise ValueError(f"need one rank per layer, got {len(Ks)} for {L} layers")
    bases = []
    for l in range(L):
        S = _layer_matrix(A[l], centered, strip_signs)
        if not np.any(S):
            warnings.warn(f"layer {l} has no signal; its basis is arbitrary", DegenerateLayerWarning, stacklevel=2)
        k = Ks[l]
        if k is None:
            kk = min(k_max, S.shape[0] - 1)
            k = eigengap_rank(top_k_eigvecs(S, kk + 1).values, kk)
        if k < 1:
            raise ValueError(f"rank of layer {l} must be positive")
        bases.append(top_k_eigvecs(S, int(k)).vectors)
    return bases


def empirical_gram(bases: Sequence[np.ndarray]) -> np.ndarray:
    L = len(bases)
    if L and len({b.shape[0] for b in bases}) > 1:
        raise ValueError("bases must share the node count")
    G = np.zeros((L, L))
    for i in range(L):
        G[i, i] = bases[i].shape[1]
        for j in range(i + 1, L):
            G[i, j] = G[j, i] = gram_entry(bases[i], bases[j])
    return G


def gram_rank(G, k_max: int = DEFAULT_K_MAX) -> int:
    """Number of groups suggested by the eigengap of a Gram matrix."""
    L = G.shape[0]
    if L < 2:
        return 1
    k_max = min(k_max, L - 1)
    return eigengap_rank(top_k_eigvecs(G, k_max + 1).values, k_max)


def cluster_gram(G, M: int, km: Optional[KMeansConfig] = None) -> LayerPartition:
    """k-means on the rows of the ``M`` leading eigenvectors of a Gram matrix."""
    L = G.shape[0]
    if M < 1:
        raise ValueError("M must be positive")
    if M > L:
        raise ValueError(f"cannot split {L} layers into {M} groups")
    if M == 1:
        return LayerPartition(np.zeros(L, dtype=np.int64), 1)
    km = km or KMeansConfig(k=M)
    if km.k != M:
        km = KMeansConfig(M, km.restarts, km.max_iters, km.tol, km.seed)
    V = top_k_eigvecs(G, M).vectors
    labels, obj = kmeans_cluster(V, km)
    log.debug("layer k-means objective %.6g", obj)
    return LayerPartition(labels, M)


def cluster_algorithm1(A, M: int, Ks=None, km: Optional[KMeansConfig] = None, strip_signs: bool = False):
    """Cluster layers using projections of the node-centered layers."""
    return cluster_layers(A, M, Ks, km, centered=True, strip_signs=strip_signs)


def cluster_algorithm3(A, M: int, Ks=None, km: Optional[KMeansConfig] = None, strip_signs: bool = False):
    """Baseline: the same pipeline on uncentered layers.

    The left singular vectors of the ``L x n^2`` matrix of vectorized
    projections are the eigenvectors of its ``L x L`` Gram matrix, so the
    wide matrix is never formed.
    """
    return cluster_layers(A, M, Ks, km, centered=False, strip_signs=strip_signs)


def cluster_layers(
    A,
    M: Optional[int] = None,
    Ks=None,
    km: Optional[KMeansConfig] = None,
    centered: bool = True,
    strip_signs: bool = False,
    k_max: int = DEFAULT_K_MAX,
) -> LayerPartition:
    """Either algorithm, with ``M=None`` choosing the group count by eigengap."""
    if M is not None and M > len(A):
        raise ValueError(f"cannot split {len(A)} layers into {M} groups")
    G = empirical_gram(layer_projections(A, Ks, centered=centered, strip_signs=strip_signs, k_max=k_max))
    if M is None:
        M = gram_rank(G, k_max)
        log.info("eigengap selects %d groups", M)
    return cluster_gram(G, M, km)
