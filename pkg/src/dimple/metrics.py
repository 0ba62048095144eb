"""Error measures for layer clustering, subspace estimation and node clustering."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

# exact permutation search up to this many groups
MAX_ENUMERATED_GROUPS = 8


class DegenerateAlignmentWarning(UserWarning):
    pass


def _labels(x):
    return np.asarray(getattr(x, "labels", x), dtype=np.int64)


def confusion(est, truth, M: int) -> np.ndarray:
    C = np.zeros((M, M), dtype=np.int64)
    np.add.at(C, (est, truth), 1)
    return C


def misclustering_rate(est, truth, M: int | None = None) -> float:
    """Fraction of layers mislabeled under the best relabeling of ``est``.

    Equals ``(2L)^-1 min_P ||S_hat - S P||_F^2`` for the one-hot clustering
    matrices; the minimum is an assignment problem on the confusion matrix.
    """
    e, t = _labels(est), _labels(truth)
    if e.shape != t.shape:
        raise ValueError(f"label vectors differ in length: {e.size} vs {t.size}")
    if M is None:
        M = max(getattr(est, "M", 0), getattr(truth, "M", 0), int(max(e.max(initial=-1), t.max(initial=-1))) + 1)
    if e.size == 0:
        return 0.0
    C = confusion(e, t, M)
    rows, cols = linear_sum_assignment(C, maximize=True)
    return float((e.size - C[rows, cols].sum()) / e.size)


def sin_theta(U, V):
    """Operator and Frobenius sin-theta distances between two column spaces."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != V.shape:
        raise ValueError(f"bases must share shape, got {U.shape} and {V.shape}")
    K = U.shape[1]
    if K == 0:
        return 0.0, 0.0
    # singular values of (I - UU^T) V are the sines of the principal angles;
    # this avoids the cancellation in sqrt(1 - cos^2) for nearly equal spans
    R = V - U @ (U.T @ V)
    op = min(1.0, float(np.linalg.norm(R, 2)))
    fro = min(float(np.sqrt(K)), float(np.linalg.norm(R)))
    return op, fro


def align_rotation(U_hat, U) -> np.ndarray:
    """Orthogonal ``W = O1 O2^T`` from the SVD ``U_hat^T U = O1 D O2^T``.

    This is the orthogonal Procrustes minimizer of ``||U_hat W - U||_F``.
    """
    U_hat = np.asarray(U_hat, dtype=float)
    U = np.asarray(U, dtype=float)
    if U_hat.shape[1] != U.shape[1]:
        raise ValueError("bases must have equal widths")
    O1, s, O2t = np.linalg.svd(U_hat.T @ U)
    if s.size and s[-1] < 1e-12:
        warnings.warn("U_hat^T U is rank deficient; alignment is not unique", DegenerateAlignmentWarning, stacklevel=2)
    return O1 @ O2t


def two_inf_norm(Y) -> float:
    Y = np.asarray(Y, dtype=float)
    return float(np.max(np.linalg.norm(Y, axis=1))) if Y.size else 0.0


def two_inf_distance(U_hat, U) -> float:
    """Largest row norm of ``U_hat W_U - U`` after Procrustes alignment."""
    W = align_rotation(U_hat, U)
    return two_inf_norm(np.asarray(U_hat, dtype=float) @ W - np.asarray(U, dtype=float))


@dataclass
class SubspaceErrorReport:
    r_u_2inf: float
    r_u_ave: float
    r_u_max: float
    r_2inf_ave: float
    permutation: tuple
    approximate: bool = False


def _pair_costs(U_true, U_est):
    """Per-pair (sin op, sin fro^2, two-inf) costs; infeasible pairs are inf."""
    M = len(U_true)
    op = np.full((M, M), np.inf)
    fro2 = np.full((M, M), np.inf)
    tinf = np.full((M, M), np.inf)
    for a, U in enumerate(U_true):
        U = np.asarray(U, dtype=float)
        for b, V in enumerate(U_est):
            V = np.asarray(V, dtype=float)
            if V.shape[0] != U.shape[0]:
                raise ValueError("bases must share the node count")
            if V.shape[1] == 0:
                # an empty estimated group scores the maximal error
                op[a, b], fro2[a, b], tinf[a, b] = 1.0, float(U.shape[1]), two_inf_norm(U)
            elif V.shape[1] == U.shape[1]:
                o, f = sin_theta(U, V)
                op[a, b], fro2[a, b] = o, f * f
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DegenerateAlignmentWarning)
                    tinf[a, b] = two_inf_distance(V, U)
    return op, fro2, tinf


def _best(cost, reduce, perms):
    idx = np.arange(cost.shape[0])
    best_val, best_perm = np.inf, None
    for p in perms:
        v = reduce(cost[idx, list(p)])
        if v < best_val:
            best_val, best_perm = v, tuple(p)
    return best_val, best_perm


def _hungarian(cost):
    finite = np.where(np.isfinite(cost), cost, 1e300)
    rows, cols = linear_sum_assignment(finite)
    perm = tuple(int(c) for c in cols[np.argsort(rows)])
    return perm


def subspace_report(U_true, U_est) -> SubspaceErrorReport:
    """Permutation-minimized subspace errors between true and estimated groups.

    ``permutation[m]`` is the estimated group matched to true group ``m``
    under the minimizer of the average squared Frobenius sin-theta error.
    """
    M = len(U_true)
    if len(U_est) != M:
        raise ValueError(f"expected {M} estimated bases, got {len(U_est)}")
    if M == 0:
        return SubspaceErrorReport(0.0, 0.0, 0.0, 0.0, ())
    op, fro2, tinf = _pair_costs(U_true, U_est)
    if M <= MAX_ENUMERATED_GROUPS:
        perms = list(itertools.permutations(range(M)))
        r_u_2inf, _ = _best(tinf, np.max, perms)
        ave2, perm = _best(fro2, np.sum, perms)
        r_u_max, _ = _best(op, np.max, perms)
        sum_tinf, _ = _best(tinf, np.sum, perms)
        approximate = False
    else:
        perm = _hungarian(fro2)
        perm_t = _hungarian(tinf)
        idx = np.arange(M)
        ave2 = fro2[idx, list(perm)].sum()
        sum_tinf = tinf[idx, list(perm_t)].sum()
        # max objectives reuse the sum-optimal matchings
        r_u_max = op[idx, list(perm)].max()
        r_u_2inf = tinf[idx, list(perm_t)].max()
        approximate = True
    if not np.isfinite(ave2):
        raise ValueError("no permutation matches the group widths")
    return SubspaceErrorReport(
        r_u_2inf=float(r_u_2inf),
        r_u_ave=float(np.sqrt(ave2 / M)),
        r_u_max=float(r_u_max),
        r_2inf_ave=float(sum_tinf / M),
        permutation=perm,
        approximate=approximate,
    )


def community_mismatches(est, truth, k: int | None = None) -> int:
    """Fewest mislabeled nodes over relabelings of ``est``."""
    e, t = _labels(est), _labels(truth)
    if e.shape != t.shape:
        raise ValueError("community vectors differ in length")
    if e.size == 0:
        return 0
    if k is None:
        k = int(max(e.max(), t.max())) + 1
    C = confusion(e, t, k)
    rows, cols = linear_sum_assignment(C, maximize=True)
    return int(e.size - C[rows, cols].sum())


def within_layer_error(Z_est, Z_true) -> float:
    """Average within-group node clustering error over the best group matching.

    Each mislabeled node adds 2 to ``||Z_hat - Z P||_F^2``, so the value is
    ``(M n)^-1`` times the total number of mislabeled nodes.
    """
    M = len(Z_true)
    if len(Z_est) != M:
        raise ValueError(f"expected {M} estimated groups, got {len(Z_est)}")
    if M == 0:
        return 0.0
    n = _labels(Z_true[0]).size
    for z in list(Z_est) + list(Z_true):
        if _labels(z).size != n:
            raise ValueError("all community vectors must have n entries")
    cost = np.array([[community_mismatches(Z_est[b], Z_true[a]) for b in range(M)] for a in range(M)], dtype=float)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / (M * n))
