"""Monte Carlo sweeps over node and layer counts, emitted as long-format CSV."""
from __future__ import annotations

import configparser
import csv
import io
import itertools
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from . import model
from ._rng import substream
from .kmeans import KMeansConfig
from .layers import cluster_layers
from .metrics import misclustering_rate, subspace_report, within_layer_error
from .model import GeneratorConfig
from .subspace import concat_group_subspaces, estimate_group_subspaces, node_communities

ALGORITHMS = ("alg1", "alg3", "alg2_subspace", "concat_baseline", "node_communities")
PRIMARY_METRIC = {
    "alg1": "r_bl",
    "alg3": "r_bl",
    "alg2_subspace": "r_2inf_ave",
    "concat_baseline": "r_2inf_ave",
    "node_communities": "r_wl",
}
SUBSPACE_METRICS = ("r_2inf_ave", "r_u_max", "r_u_ave", "r_u_2inf")
COLUMNS = ("preset", "distribution", "n", "L", "run", "algorithm", "metric", "value", "status")

DEFAULT_PARAM = {
    model.TRUNCATED_NORMAL: 1.0,
    model.TRUNCATED_T: 2.0,
    model.REDUCED_DIRICHLET: 0.1,
    model.MULTINOMIAL_ONE_HOT: None,
}


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "custom"
    distribution: str = model.TRUNCATED_NORMAL
    dist_param: Optional[float] = None
    M: int = 3
    K: int = 3
    b_low: float = -0.05
    b_high: float = 0.05
    n_grid: tuple = (200, 400, 800)
    L_grid: tuple = (50,)
    runs: int = 20
    algorithms: tuple = ("alg1", "alg3")
    strip_signs: bool = False
    compare_signs: bool = False
    all_metrics: bool = False
    auto_m: bool = False
    auto_k: bool = False
    restarts: int = 20
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        object.__setattr__(self, "L_grid", tuple(int(v) for v in self.L_grid))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.n_grid or not self.L_grid:
            raise ValueError("n_grid and L_grid must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if self.distribution not in model.CASES:
            raise ValueError(f"unknown distribution {self.distribution!r}")

    def latents(self):
        p = DEFAULT_PARAM[self.distribution] if self.dist_param is None else self.dist_param
        if self.distribution == model.TRUNCATED_NORMAL:
            lat = model.truncated_normal(self.K, p)
        elif self.distribution == model.TRUNCATED_T:
            lat = model.truncated_t(self.K, p)
        elif self.distribution == model.REDUCED_DIRICHLET:
            lat = model.reduced_dirichlet(self.K, p)
        else:
            lat = model.multinomial_one_hot(self.K)
        return (lat,) * self.M

    def generator(self, n: int, L: int, seed: int) -> GeneratorConfig:
        return GeneratorConfig(n=n, L=L, latents=self.latents(), b_low=self.b_low, b_high=self.b_high, seed=seed)


# desk-scale versions of the published sweeps
PRESETS = {
    "fig1": ExperimentConfig(preset="fig1", algorithms=("alg1", "alg3")),
    "fig2": ExperimentConfig(
        preset="fig2", n_grid=(400,), L_grid=(50, 100, 150), algorithms=("alg2_subspace", "concat_baseline")
    ),
    "fig3": ExperimentConfig(
        preset="fig3", distribution=model.REDUCED_DIRICHLET, algorithms=("alg1",), compare_signs=True
    ),
}

FULL_SCALE = {"runs": 100, "L_grid": (50, 100, 150)}


def _parse_value(name, raw, current):
    raw = raw.strip()
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(current, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return tuple(items) if name == "algorithms" else tuple(int(s) for s in items)
    if name == "dist_param":
        return None if raw.lower() in ("", "none") else float(raw)
    if name == "out":
        return raw or None
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read ``key = value`` lines named after ``ExperimentConfig`` fields.

    A ``preset`` key selects the starting point; remaining keys override it.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[experiment]\n" + text)
    items = dict(cp["experiment"])
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(items) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = base or ExperimentConfig()
    if "preset" in items and items["preset"].strip() in PRESETS:
        cfg = PRESETS[items["preset"].strip()]
    updates = {k: _parse_value(k, v, getattr(cfg, k)) for k, v in items.items() if k != "preset"}
    if "preset" in items:
        updates["preset"] = items["preset"].strip()
    return replace(cfg, **updates)


def _seed(cfg, *key):
    return int(substream(cfg.seed, *key).integers(2**63))


def _variants(cfg, A):
    if cfg.compare_signs:
        return [("", A), ("_unsigned", np.abs(A))]
    if cfg.strip_signs:
        return [("", np.abs(A))]
    return [("", A)]


def _group_dims(truth, part):
    """Dimension per estimated group: the most common true dimension among its layers."""
    dims = np.array([truth.latents[m].k for m in truth.labels.labels])
    out = []
    for m in range(part.M):
        members = dims[part.labels == m]
        out.append(int(np.bincount(members).argmax()) if members.size else int(dims.max()))
    return out


def run_once(cfg: ExperimentConfig, n: int, L: int, run: int):
    """All rows for one replication at grid point ``(n, L)``."""
    truth, A = model.generate(cfg.generator(n, L, _seed(cfg, n, L, run, 0)))
    km_seed = _seed(cfg, n, L, run, 1)
    rows = []

    def emit(alg, metric, value, status="ok"):
        rows.append((cfg.preset, cfg.distribution, n, L, run, alg, metric, value, status))

    for suffix, data in _variants(cfg, A):
        cache = {}

        def layer_labels(centered):
            key = ("alg1" if centered else "alg3")
            if key not in cache:
                if cfg.auto_k:
                    Ks = None
                elif centered:
                    Ks = truth.layer_ranks()
                else:
                    Ks = np.array([truth.latents[m].k for m in truth.labels.labels])
                cache[key] = cluster_layers(
                    data,
                    None if cfg.auto_m else cfg.M,
                    Ks,
                    KMeansConfig(cfg.M, restarts=cfg.restarts, seed=km_seed),
                    centered=centered,
                )
            return cache[key]

        def alg2_bases():
            if "alg2" not in cache:
                part = layer_labels(True)
                dims = None if cfg.auto_k else _group_dims(truth, part)
                cache["alg2"] = [g.basis for g in estimate_group_subspaces(data, part, dims)]
            return cache["alg2"]

        for alg in cfg.algorithms:
            name = alg + suffix
            metrics = [PRIMARY_METRIC[alg]]
            if cfg.all_metrics and alg in ("alg2_subspace", "concat_baseline"):
                metrics = list(SUBSPACE_METRICS)
            try:
                if alg in ("alg1", "alg3"):
                    part = layer_labels(alg == "alg1")
                    values = {"r_bl": misclustering_rate(part, truth.labels)}
                elif alg == "alg2_subspace":
                    values = vars(subspace_report(truth.U, alg2_bases()))
                elif alg == "concat_baseline":
                    part = layer_labels(True)
                    bases = concat_group_subspaces(data, part, _group_dims(truth, part))
                    values = vars(subspace_report(truth.U, bases))
                else:
                    Z_true = truth.communities()
                    if Z_true is None:
                        raise ValueError("node communities need one-hot latent positions")
                    bases = alg2_bases()
                    Z_est = [
                        node_communities(b, b.shape[1], KMeansConfig(b.shape[1], restarts=cfg.restarts, seed=km_seed))
                        if b.shape[1]
                        else np.zeros(n, dtype=np.int64)
                        for b in bases
                    ]
                    values = {"r_wl": within_layer_error(Z_est, Z_true)}
                for metric in metrics:
                    emit(name, metric, float(values[metric]))
            except Exception as exc:  # a failed replication must not abort the sweep
                for metric in metrics:
                    emit(name, metric, float("nan"), f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
    return rows


def _task(args):
    return run_once(*args)


def sweep(cfg: ExperimentConfig, threads: int = 1):
    """Rows for the whole grid, ordered by ``(n, L, run)`` regardless of ``threads``."""
    tasks = [(cfg, n, L, r) for n, L in itertools.product(cfg.n_grid, cfg.L_grid) for r in range(cfg.runs)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def rows_to_csv(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summarize(rows):
    """Mean and standard deviation per ``(preset, distribution, n, L, algorithm, metric)``."""
    key = lambda r: (r[0], r[1], r[2], r[3], r[5], r[6])  # noqa: E731
    out = []
    for k, group in itertools.groupby(sorted(rows, key=key), key=key):
        vals = [r[7] for r in group if r[8] == "ok"]
        mean = statistics.fmean(vals) if vals else float("nan")
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out.append(k + (mean, sd, len(vals)))
    return out


SUMMARY_COLUMNS = ("preset", "distribution", "n", "L", "algorithm", "metric", "mean", "sd", "count")


def summary_to_csv(summary) -> str:
    return rows_to_csv(summary, SUMMARY_COLUMNS)


def mean_curve(rows, algorithm: str, metric: str, by: str = "n"):
    """``{grid value: mean}`` for one algorithm and metric."""
    idx = {"n": 2, "L": 3}[by]
    acc = {}
    for r in rows:
        if r[5] == algorithm and r[6] == metric and r[8] == "ok":
            acc.setdefault(r[idx], []).append(r[7])
    return {k: statistics.fmean(v) for k, v in sorted(acc.items())}
