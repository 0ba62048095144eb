"""Reading and writing signed multiplex networks, and building them from time series.

Tensor files are UTF-8 text. The first line is ``#dimple v1 n=<n> L=<L>``;
every following line is ``<layer>\\t<i>\\t<j>\\t<sign>`` for one nonzero
upper-triangle entry (0-based, ``i < j``, sign 1 or -1), sorted by
``(layer, i, j)``, with LF line endings.
"""
from __future__ import annotations

import math
import re
import warnings
from pathlib import Path

import numpy as np

HEADER_RE = re.compile(r"^#dimple v1 n=(\d+) L=(\d+)$")


class TensorFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConstantSeriesWarning(UserWarning):
    pass


def format_tensor(A) -> str:
    A = np.asarray(A)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected an (L, n, n) tensor, got shape {A.shape}")
    L, n, _ = A.shape
    lines = [f"#dimple v1 n={n} L={L}"]
    iu, ju = np.triu_indices(n, 1)
    for l in range(L):
        vals = A[l][iu, ju]
        if np.any(np.abs(vals) > 1) or not np.array_equal(A[l], A[l].T) or np.any(np.diagonal(A[l])):
            raise ValueError(f"layer {l} is not a hollow symmetric matrix with entries in {{-1, 0, 1}}")
        for k in np.flatnonzero(vals):
            lines.append(f"{l}\t{iu[k]}\t{ju[k]}\t{int(vals[k])}")
    return "\n".join(lines) + "\n"


def write_tensor(A, path) -> None:
    Path(path).write_bytes(format_tensor(A).encode("utf-8"))


def parse_tensor(text: str) -> np.ndarray:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TensorFormatError("missing header", 1)
    m = HEADER_RE.match(lines[0])
    if not m:
        raise TensorFormatError(f"malformed header {lines[0]!r}", 1)
    n, L = int(m.group(1)), int(m.group(2))
    A = np.zeros((L, n, n), dtype=np.int8)
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 4:
            raise TensorFormatError(f"expected 4 tab-separated fields, got {len(fields)}", lineno)
        try:
            l, i, j, s = (int(f) for f in fields)
        except ValueError:
            raise TensorFormatError(f"non-integer field in {line!r}", lineno) from None
        if not (0 <= l < L and 0 <= i < n and 0 <= j < n):
            raise TensorFormatError(f"index out of range in {line!r}", lineno)
        if i == j:
            raise TensorFormatError(f"self-loop at node {i}", lineno)
        if i > j:
            raise TensorFormatError(f"record must have i < j, got {i} > {j}", lineno)
        if s not in (-1, 1):
            raise TensorFormatError(f"sign must be 1 or -1, got {s}", lineno)
        if A[l, i, j] != 0:
            raise TensorFormatError(f"duplicate edge ({l}, {i}, {j})", lineno)
        A[l, i, j] = A[l, j, i] = s
    return A


def read_tensor(path) -> np.ndarray:
    return parse_tensor(Path(path).read_bytes().decode("utf-8"))


def edge_budget(keep_fraction: float, n_pairs: int) -> int:
    """``ceil(keep_fraction * n_pairs)`` robust to binary rounding (2/3 * 3 == 2)."""
    return int(math.ceil(round(keep_fraction * n_pairs, 9)))


def correlations(series) -> np.ndarray:
    """Pearson correlations between the columns of a ``T x n`` array.

    A constant column has undefined correlations; they are set to 0.
    """
    Y = np.asarray(series, dtype=float)
    if Y.ndim != 2:
        raise ValueError("time series must be a T x n array")
    T, n = Y.shape
    if T < 3:
        raise ValueError(f"need at least 3 time points, got {T}")
    Yc = Y - Y.mean(axis=0)
    norms = np.sqrt(np.sum(Yc * Yc, axis=0))
    const = norms == 0
    if const.any():
        warnings.warn(f"constant series at columns {np.flatnonzero(const).tolist()}", ConstantSeriesWarning, stacklevel=2)
        norms = np.where(const, 1.0, norms)
    Z = Yc / norms
    R = np.clip(Z.T @ Z, -1.0, 1.0)
    R[:, const] = 0.0
    R[const, :] = 0.0
    np.fill_diagonal(R, 1.0)
    return R


def _select(values, budget):
    # stable sort on -|r| keeps the lexicographic (layer, i, j) order among ties
    order = np.argsort(-np.abs(values), kind="stable")
    return order[:budget]


def from_timeseries(panel, keep_fraction: float = 0.4, global_threshold: bool = False) -> np.ndarray:
    """Signed network per layer from the strongest correlations by absolute value.

    Per layer, the ``ceil(keep_fraction * n(n-1)/2)`` node pairs with the
    largest ``|r|`` become edges with sign ``sign(r)``. With
    ``global_threshold`` the budget is shared across all layers instead.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    panel = [np.asarray(p, dtype=float) for p in panel]
    if not panel:
        raise ValueError("panel has no layers")
    n = panel[0].shape[1]
    if any(p.shape[1] != n for p in panel):
        raise ValueError("all layers must have the same number of series")
    L = len(panel)
    iu, ju = np.triu_indices(n, 1)
    R = np.stack([correlations(p)[iu, ju] for p in panel])
    A = np.zeros((L, n, n), dtype=np.int8)
    if global_threshold:
        flat = R.ravel()
        keep = _select(flat, edge_budget(keep_fraction, flat.size))
        ls, ks = np.divmod(keep, iu.size)
        signs = np.sign(flat[keep]).astype(np.int8)
        A[ls, iu[ks], ju[ks]] = signs
        A[ls, ju[ks], iu[ks]] = signs
        return A
    budget = edge_budget(keep_fraction, iu.size)
    for l in range(L):
        keep = _select(R[l], budget)
        signs = np.sign(R[l][keep]).astype(np.int8)
        A[l, iu[keep], ju[keep]] = signs
        A[l, ju[keep], iu[keep]] = signs
    return A


def read_timeseries_csv(path, header: bool = False) -> np.ndarray:
    Y = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return Y
