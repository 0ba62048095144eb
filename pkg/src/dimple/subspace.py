"""Ambient subspace estimation inside groups of layers."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kmeans import KMeansConfig, kmeans_cluster
from .linalg import eigengap_rank, top_k_eigvecs
from .model import LayerPartition


class EmptyGroupWarning(UserWarning):
    pass


@dataclass
class GroupEstimate:
    group: int
    H_hat: np.ndarray
    basis: np.ndarray


def debias_square(A) -> np.ndarray:
    """``A^2`` minus the diagonal of absolute row sums.

    Off the diagonal this is an unbiased estimate of ``P^2``; on the
    diagonal it is exactly zero because ``(A^2)_ii = sum_j |A_ij|`` for
    entries in {-1, 0, 1}.
    """
    A = np.asarray(A)
    if np.any(np.diagonal(A) != 0):
        raise ValueError("adjacency matrix must have a zero diagonal")
    Af = A.astype(float)
    G = Af @ Af
    G = 0.5 * (G + G.T)
    G[np.diag_indices_from(G)] -= np.abs(Af).sum(axis=1)
    return G


def aggregate_group(G_hats, part, m: int) -> np.ndarray:
    labels = np.asarray(getattr(part, "labels", part))
    if len(G_hats) != labels.size:
        raise ValueError(f"partition has {labels.size} labels for {len(G_hats)} matrices")
    members = np.flatnonzero(labels == m)
    n = np.asarray(G_hats[0]).shape[0] if len(G_hats) else 0
    H = np.zeros((n, n))
    if members.size == 0:
        warnings.warn(f"group {m} has no layers", EmptyGroupWarning, stacklevel=2)
    for l in members:
        H += G_hats[l]
    return H


def group_sums(A, part: LayerPartition, debias: bool = True, strip_signs: bool = False):
    """Per-group sums of (de-biased) squared layers, accumulated layer by layer."""
    n = A.shape[1] if len(A) else 0
    H = [np.zeros((n, n)) for _ in range(part.M)]
    for l, m in enumerate(part.labels):
        A_l = np.abs(A[l]) if strip_signs else A[l]
        if debias:
            H[m] += debias_square(A_l)
        else:
            Af = np.asarray(A_l, dtype=float)
            H[m] += Af @ Af
    for m in np.flatnonzero(part.sizes() == 0):
        warnings.warn(f"group {m} has no layers", EmptyGroupWarning, stacklevel=2)
    return H


def estimate_subspace(H, K_m: int) -> np.ndarray:
    return top_k_eigvecs(H, K_m).vectors


def refit_rank(H, k_max: int = 10) -> int:
    k_max = min(k_max, H.shape[0] - 1)
    return eigengap_rank(top_k_eigvecs(H, k_max + 1).values, k_max)


def estimate_group_subspaces(A, part: LayerPartition, Ks=None, strip_signs: bool = False, k_max: int = 10):
    """Estimate one basis per group from the sum of de-biased squares.

    ``Ks`` gives each group's dimension; ``None`` refits it from the
    eigengap of the group's aggregated matrix. Empty groups get a
    zero-width basis.
    """
    H = group_sums(A, part, debias=True, strip_signs=strip_signs)
    out = []
    for m, Hm in enumerate(H):
        if not np.any(part.labels == m):
            out.append(GroupEstimate(m, Hm, np.zeros((Hm.shape[0], 0))))
            continue
        k = refit_rank(Hm, k_max) if Ks is None else int(np.broadcast_to(Ks, (part.M,))[m])
        out.append(GroupEstimate(m, Hm, estimate_subspace(Hm, k)))
    return out


def concat_baseline(A_layers, K: int) -> np.ndarray:
    """Left singular subspace of the side-by-side concatenation of the layers.

    ``[A_1 | ... | A_L][A_1 | ... | A_L]^T = sum_l A_l^2`` for symmetric
    layers, so its top eigenvectors give the same subspace.
    """
    if len(A_layers) == 0:
        raise ValueError("need at least one layer")
    n = np.asarray(A_layers[0]).shape[0]
    S = np.zeros((n, n))
    for A_l in A_layers:
        Af = np.asarray(A_l, dtype=float)
        if Af.shape != (n, n):
            raise ValueError("layers must share the node count")
        S += Af @ Af
    return estimate_subspace(0.5 * (S + S.T), K)


def concat_group_subspaces(A, part: LayerPartition, Ks, strip_signs: bool = False):
    out = []
    for m in range(part.M):
        members = np.flatnonzero(part.labels == m)
        if members.size == 0:
            warnings.warn(f"group {m} has no layers", EmptyGroupWarning, stacklevel=2)
            out.append(np.zeros((A.shape[1], 0)))
            continue
        layers = [np.abs(A[l]) if strip_signs else A[l] for l in members]
        out.append(concat_baseline(layers, int(np.broadcast_to(Ks, (part.M,))[m])))
    return out


def node_communities(basis, K_m: int, km: Optional[KMeansConfig] = None) -> np.ndarray:
    """Cluster the rows of an estimated basis into ``K_m`` communities."""
    basis = np.asarray(basis, dtype=float)
    if K_m < 1:
        raise ValueError("K_m must be positive")
    if K_m == 1:
        return np.zeros(basis.shape[0], dtype=np.int64)
    km = km or KMeansConfig(k=K_m)
    if km.k != K_m:
        km = KMeansConfig(K_m, km.restarts, km.max_iters, km.tol, km.seed)
    labels, _ = kmeans_cluster(basis, km)
    return labels
