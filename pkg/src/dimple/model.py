"""DIMPLE-SGRDPG instance generation.

Layers are assigned to groups, every group gets a latent position matrix
``X`` with rows in the unit ball, every layer gets a symmetric connection
matrix ``B`` and probability matrix ``P = X B X^T``, and the signed
adjacency matrix keeps an edge with probability ``|P(i,j)|`` carrying the
sign of ``P(i,j)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rng import substream
from .linalg import center_double

TRUNCATED_NORMAL = "truncated_normal"
TRUNCATED_T = "truncated_t"
REDUCED_DIRICHLET = "reduced_dirichlet"
MULTINOMIAL_ONE_HOT = "multinomial_one_hot"
CASES = (TRUNCATED_NORMAL, TRUNCATED_T, REDUCED_DIRICHLET, MULTINOMIAL_ONE_HOT)

# stream tags; layer streams use the layer index itself
_LABEL_STREAM = 2**32
_LATENT_STREAM = 2**32 + 1


class ModelViolationError(ValueError):
    """A probability entry fell outside [-1, 1]."""


@dataclass(frozen=True)
class LayerPartition:
    labels: np.ndarray
    M: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if labels.size and (labels.min() < 0 or labels.max() >= self.M):
            raise ValueError(f"labels must lie in [0, {self.M})")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.labels.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.M)


@dataclass(frozen=True)
class LatentConfig:
    """Row distribution of one group's latent positions.

    ``param`` is sigma for the truncated normal, the degrees of freedom for
    the truncated t, the length ``k + 1`` concentration vector for the
    reduced Dirichlet, and the length ``k`` probability vector for the
    one-hot multinomial.
    """

    case: str
    k: int
    param: object = 1.0

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown latent case {self.case!r}; expected one of {CASES}")
        if self.k < 1:
            raise ValueError("latent dimension must be positive")
        if self.case in (TRUNCATED_NORMAL, TRUNCATED_T):
            if not float(self.param) > 0:
                raise ValueError(f"{self.case} parameter must be positive")
        elif self.case == REDUCED_DIRICHLET:
            alpha = np.asarray(self.param, dtype=float)
            if alpha.shape != (self.k + 1,) or np.any(alpha <= 0):
                raise ValueError("Dirichlet alpha needs k+1 positive entries")
        else:
            w = np.asarray(self.param, dtype=float)
            if w.shape != (self.k,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("multinomial weights must be k nonnegative entries summing to 1")

    @property
    def centered_rank(self) -> int:
        """Rank left after removing the node mean (rows of one-hot latents sum to 1)."""
        return self.k - 1 if self.case == MULTINOMIAL_ONE_HOT else self.k


def truncated_normal(k: int, sigma: float = 1.0) -> LatentConfig:
    return LatentConfig(TRUNCATED_NORMAL, k, float(sigma))


def truncated_t(k: int, nu: float = 2.0) -> LatentConfig:
    return LatentConfig(TRUNCATED_T, k, float(nu))


def reduced_dirichlet(k: int, alpha=0.1) -> LatentConfig:
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (k + 1,))
    return LatentConfig(REDUCED_DIRICHLET, k, tuple(float(a) for a in alpha))


def multinomial_one_hot(k: int, weights=None) -> LatentConfig:
    if weights is None:
        weights = np.full(k, 1.0 / k)
    return LatentConfig(MULTINOMIAL_ONE_HOT, k, tuple(float(w) for w in weights))


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    L: int
    latents: tuple
    pi: Optional[tuple] = None
    b_low: float = -0.05
    b_high: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "latents", tuple(self.latents))
        M = len(self.latents)
        if M < 1:
            raise ValueError("need at least one group")
        pi = np.full(M, 1.0 / M) if self.pi is None else np.asarray(self.pi, dtype=float)
        if pi.shape != (M,) or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
            raise ValueError("pi must be a probability vector with one entry per group")
        object.__setattr__(self, "pi", tuple(float(p) for p in pi))
        if self.n < 2 or self.L < 0:
            raise ValueError("need n >= 2 and L >= 0")
        if not self.b_low <= self.b_high:
            raise ValueError("b_low must not exceed b_high")
        if max(abs(self.b_low), abs(self.b_high)) > 1:
            raise ValueError("|b_low| and |b_high| must be at most 1")

    @property
    def M(self) -> int:
        return len(self.latents)


@dataclass
class GroundTruth:
    """Latent structure behind a generated tensor.

    ``U[m]`` spans the column space of ``X[m]``, the subspace shared by every
    probability matrix in group ``m``. ``U_centered[m]`` spans the column
    space of the node-centered ``X[m]`` and has ``ranks[m]`` columns; it is
    what the centered layer projections recover.
    """

    labels: LayerPartition
    X: list
    B: list
    U: list
    U_centered: list
    ranks: tuple
    latents: tuple = field(default_factory=tuple)

    @property
    def M(self) -> int:
        return self.labels.M

    @property
    def L(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.X[0].shape[0]

    def probability(self, l: int) -> np.ndarray:
        return assemble_probability(self.X[self.labels.labels[l]], self.B[l])

    @property
    def P(self) -> np.ndarray:
        """Full ``(L, n, n)`` probability tensor; memory heavy for large inputs."""
        if self.L == 0:
            return np.zeros((0, self.n, self.n))
        return np.stack([self.probability(l) for l in range(self.L)])

    def layer_ranks(self) -> np.ndarray:
        """Per-layer centered rank ``K^(l)``."""
        return np.asarray(self.ranks, dtype=np.int64)[self.labels.labels]

    def communities(self):
        """Node communities per group for one-hot latents, else ``None``."""
        if not all(lat.case == MULTINOMIAL_ONE_HOT for lat in self.latents):
            return None
        return [np.argmax(X, axis=1) for X in self.X]


def sample_labels(pi: Sequence[float], L: int, rng: np.random.Generator) -> LayerPartition:
    pi = np.asarray(pi, dtype=float)
    labels = rng.choice(pi.size, size=L, p=pi) if L else np.zeros(0, dtype=np.int64)
    return LayerPartition(labels, pi.size)


def sample_latent(cfg: LatentConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    k = cfg.k
    if cfg.case == TRUNCATED_NORMAL:
        eta = rng.normal(0.0, float(cfg.param), size=(n, k))
        return eta / np.linalg.norm(eta, axis=1, keepdims=True)
    if cfg.case == TRUNCATED_T:
        eta = rng.standard_t(float(cfg.param), size=(n, k))
        return eta / np.linalg.norm(eta, axis=1, keepdims=True)
    if cfg.case == REDUCED_DIRICHLET:
        eta = rng.dirichlet(np.asarray(cfg.param, dtype=float), size=n)
        return np.ascontiguousarray(eta[:, :k])
    idx = rng.choice(k, size=n, p=np.asarray(cfg.param, dtype=float))
    return np.eye(k)[idx]


def sample_B(K: int, b_low: float, b_high: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric ``K x K`` matrix with upper triangle (diagonal included) iid uniform."""
    draws = rng.uniform(b_low, b_high, size=(K, K))
    upper = np.triu(draws)
    return upper + np.triu(draws, 1).T


def assemble_probability(X, B, check: bool = True) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    P = X @ np.asarray(B, dtype=float) @ X.T
    P = 0.5 * (P + P.T)
    if check:
        bad = np.abs(P) > 1 + 1e-12
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise ModelViolationError(f"P({i},{j}) = {P[i, j]:.6g} lies outside [-1, 1]")
        np.clip(P, -1.0, 1.0, out=P)
    return P


def sample_signed_adjacency(P, rng: np.random.Generator) -> np.ndarray:
    """Hollow symmetric ``int8`` matrix with ``P(|A_ij| = 1) = |P_ij|`` and sign of ``P_ij``."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    iu = np.triu_indices(n, 1)
    p = P[iu]
    if np.any(np.abs(p) > 1):
        raise ValueError("probability entries must lie in [-1, 1]")
    keep = rng.random(p.size) < np.abs(p)
    A = np.zeros((n, n), dtype=np.int8)
    A[iu] = np.where(keep, np.sign(p), 0).astype(np.int8)
    return A + A.T


def left_basis(Y, rank: int) -> np.ndarray:
    """Leading ``rank`` left singular vectors of ``Y``."""
    u, _, _ = np.linalg.svd(np.asarray(Y, dtype=float), full_matrices=False)
    return u[:, :rank]


def _check_rank(Y, rank, what):
    s = np.linalg.svd(Y, compute_uv=False)
    if rank > s.size or s[rank - 1] <= 1e-10 * max(s[0], 1.0):
        warnings.warn(f"{what} is numerically rank deficient (needs rank {rank})", stacklevel=3)


def generate(cfg: GeneratorConfig):
    """Draw ``(GroundTruth, A)`` where ``A`` is an ``(L, n, n)`` ``int8`` tensor.

    Every layer is drawn from its own substream of ``cfg.seed``, so a
    layer's ``B`` and ``A`` do not depend on how many layers precede it.
    """
    labels = sample_labels(cfg.pi, cfg.L, substream(cfg.seed, _LABEL_STREAM))
    X, U, U_centered = [], [], []
    for m, lat in enumerate(cfg.latents):
        Xm = sample_latent(lat, cfg.n, substream(cfg.seed, _LATENT_STREAM, m))
        Xc = Xm - Xm.mean(axis=0, keepdims=True)
        _check_rank(Xc, lat.centered_rank, f"centered latent matrix of group {m}")
        X.append(Xm)
        U.append(left_basis(Xm, lat.k))
        U_centered.append(left_basis(Xc, lat.centered_rank))

    A = np.zeros((cfg.L, cfg.n, cfg.n), dtype=np.int8)
    B = []
    for l, m in enumerate(labels.labels):
        rng = substream(cfg.seed, l)
        Bl = sample_B(cfg.latents[m].k, cfg.b_low, cfg.b_high, rng)
        A[l] = sample_signed_adjacency(assemble_probability(X[m], Bl), rng)
        B.append(Bl)

    truth = GroundTruth(
        labels=labels,
        X=X,
        B=B,
        U=U,
        U_centered=U_centered,
        ranks=tuple(lat.centered_rank for lat in cfg.latents),
        latents=cfg.latents,
    )
    return truth, A


def centered_probability(truth: GroundTruth, l: int) -> np.ndarray:
    return center_double(truth.probability(l))
