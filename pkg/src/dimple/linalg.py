"""Dense symmetric spectral primitives shared by the clustering and estimation code."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg


class Spectrum(NamedTuple):
    """Eigenpairs ordered by descending absolute eigenvalue."""

    values: np.ndarray
    vectors: np.ndarray


def center_double(S):
    """Return ``(I - Pi) S (I - Pi)`` with ``Pi = 11^T / n``.

    Subtracting row and column means is the same product without forming
    the projector explicitly.
    """
    S = np.asarray(S, dtype=float)
    C = S - S.mean(axis=0, keepdims=True)
    C = C - C.mean(axis=1, keepdims=True)
    # average with the transpose so the result is symmetric to the last bit
    return 0.5 * (C + C.T)


def top_k_eigvecs(S, k: int) -> Spectrum:
    """Leading ``k`` eigenpairs of a symmetric matrix, selected by ``|lambda|``.

    For a symmetric matrix these are its leading singular pairs, which is
    what makes the selection correct for indefinite (signed) inputs.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    try:
        if 4 * k < n:
            # the k largest |lambda| are among the k most negative and k most positive
            lo = scipy.linalg.eigh(S, subset_by_index=[0, k - 1], driver="evr")
            hi = scipy.linalg.eigh(S, subset_by_index=[n - k, n - 1], driver="evr")
            w = np.concatenate([lo[0], hi[0]])
            v = np.concatenate([lo[1], hi[1]], axis=1)
        else:
            w, v = scipy.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    w, v = w[order], v[:, order]
    if 4 * k < n and not is_orthonormal(v):
        # an eigenvalue with multiplicity spanning both ends; redo in one call
        w, v = scipy.linalg.eigh(S)
        order = np.argsort(-np.abs(w), kind="stable")[:k]
        w, v = w[order], v[:, order]
    return Spectrum(w, v)


def gram_entry(U1, U2) -> float:
    """Inner product of ``vec(U1 U1^T)`` and ``vec(U2 U2^T)``.

    Evaluated as ``||U1^T U2||_F^2`` so the n^2 vectors are never built.
    """
    U1 = np.asarray(U1, dtype=float)
    U2 = np.asarray(U2, dtype=float)
    if U1.shape[0] != U2.shape[0]:
        raise ValueError(f"bases have different row counts: {U1.shape[0]} vs {U2.shape[0]}")
    C = U1.T @ U2
    return float(np.sum(C * C))


def eigengap_rank(values, k_max: int) -> int:
    """Rank at the largest drop between consecutive absolute eigenvalues.

    ``values`` must already be ordered by descending absolute value and hold
    at least ``k_max + 1`` entries. Ties go to the smaller rank.
    """
    a = np.abs(np.asarray(values, dtype=float))
    if a.size == 0:
        raise ValueError("eigengap_rank needs a nonempty spectrum")
    if k_max < 1:
        raise ValueError("k_max must be positive")
    if a.size < k_max + 1:
        raise ValueError(f"need at least {k_max + 1} values, got {a.size}")
    gaps = a[:k_max] - a[1 : k_max + 1]
    return int(np.argmax(gaps)) + 1


def is_orthonormal(U, tol: float = 1e-10) -> bool:
    U = np.asarray(U, dtype=float)
    return bool(np.linalg.norm(U.T @ U - np.eye(U.shape[1])) < tol)


def orthonormalize(Y):
    """Orthonormal basis for the column span of ``Y`` (thin QR)."""
    Q, _ = np.linalg.qr(np.asarray(Y, dtype=float))
    return Q
