"""Command line entry point: ``dimple <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input and 2 on I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ingest, model
from .kmeans import KMeansConfig
from .layers import cluster_layers
from .metrics import misclustering_rate, subspace_report, within_layer_error
from .model import LayerPartition
from .simulate import (
    FULL_SCALE,
    PRESETS,
    ExperimentConfig,
    parse_config,
    rows_to_csv,
    summarize,
    summary_to_csv,
    sweep,
)
from .subspace import concat_group_subspaces, estimate_group_subspaces, node_communities

log = logging.getLogger("dimple")

TRUTH_FORMAT = "dimple-truth v1"


class CLIError(ValueError):
    pass


# ---------------------------------------------------------------- file helpers


def truth_path(tensor_path) -> Path:
    p = Path(tensor_path)
    return p.with_name(p.stem + ".truth.json")


def truth_to_json(truth: model.GroundTruth, cfg: model.GeneratorConfig) -> str:
    doc = {
        "format": TRUTH_FORMAT,
        "n": truth.n,
        "L": truth.L,
        "M": truth.M,
        "seed": cfg.seed,
        "b_low": cfg.b_low,
        "b_high": cfg.b_high,
        "latents": [{"case": lat.case, "k": lat.k, "param": lat.param} for lat in truth.latents],
        "labels": truth.labels.labels.tolist(),
        "dims": [lat.k for lat in truth.latents],
        "ranks": list(truth.ranks),
        "U": [U.tolist() for U in truth.U],
        "U_centered": [U.tolist() for U in truth.U_centered],
        "communities": None if truth.communities() is None else [z.tolist() for z in truth.communities()],
    }
    return json.dumps(doc, indent=1) + "\n"


def read_truth(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != TRUTH_FORMAT:
        raise CLIError(f"{path}: not a {TRUTH_FORMAT} file")
    doc["labels"] = LayerPartition(np.asarray(doc["labels"], dtype=np.int64), doc["M"])
    doc["U"] = [np.asarray(U, dtype=float).reshape(doc["n"], -1) for U in doc["U"]]
    return doc


def write_labels(part: LayerPartition, path) -> None:
    lines = ["layer,group"] + [f"{l},{g}" for l, g in enumerate(part.labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path, M=None) -> LayerPartition:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    labels = np.array([int(r["group"]) for r in sorted(rows, key=lambda r: int(r["layer"]))], dtype=np.int64)
    return LayerPartition(labels, M or (int(labels.max()) + 1 if labels.size else 1))


def write_basis(U, path) -> None:
    np.savetxt(path, np.asarray(U).reshape(np.asarray(U).shape[0], -1), fmt="%.17g", delimiter=" ")


def read_basis(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)


def write_communities(z, path) -> None:
    lines = ["node,community"] + [f"{i},{c}" for i, c in enumerate(z)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_communities(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([int(r["community"]) for r in sorted(rows, key=lambda r: int(r["node"]))], dtype=np.int64)


# ---------------------------------------------------------------- generator config


def _latent(distribution, K, param):
    if distribution == model.TRUNCATED_NORMAL:
        return model.truncated_normal(K, 1.0 if param is None else param)
    if distribution == model.TRUNCATED_T:
        return model.truncated_t(K, 2.0 if param is None else param)
    if distribution == model.REDUCED_DIRICHLET:
        return model.reduced_dirichlet(K, 0.1 if param is None else param)
    return model.multinomial_one_hot(K)


def _experiment(args) -> ExperimentConfig:
    cfg = PRESETS[args.preset] if getattr(args, "preset", None) else ExperimentConfig()
    if args.config:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"), cfg)
    updates = {}
    for name in ("distribution", "M", "K", "seed", "runs", "restarts", "out"):
        v = getattr(args, name, None)
        if v is not None:
            updates[name] = v
    if getattr(args, "param", None) is not None:
        updates["dist_param"] = args.param
    if getattr(args, "c", None) is not None:
        updates["b_low"] = args.c
    if getattr(args, "d", None) is not None:
        updates["b_high"] = args.d
    if getattr(args, "n_grid", None):
        updates["n_grid"] = tuple(int(v) for v in args.n_grid.split(","))
    if getattr(args, "L_grid", None):
        updates["L_grid"] = tuple(int(v) for v in args.L_grid.split(","))
    if getattr(args, "algorithms", None):
        updates["algorithms"] = tuple(args.algorithms.split(","))
    for flag in ("strip_signs", "auto_m", "auto_k", "all_metrics", "compare_signs"):
        if getattr(args, flag, False):
            updates[flag] = True
    if getattr(args, "full_scale", False):
        updates.update(FULL_SCALE)
    return replace(cfg, **updates)


# ---------------------------------------------------------------- subcommands


def cmd_generate(args):
    exp = _experiment(args)
    n = args.n if args.n is not None else exp.n_grid[0]
    L = args.L if args.L is not None else exp.L_grid[0]
    cfg = model.GeneratorConfig(
        n=n,
        L=L,
        latents=(_latent(exp.distribution, exp.K, exp.dist_param),) * exp.M,
        b_low=exp.b_low,
        b_high=exp.b_high,
        seed=exp.seed,
    )
    truth, A = model.generate(cfg)
    out = Path(args.out or exp.out or "network.tsv")
    ingest.write_tensor(A, out)
    truth_path(out).write_text(truth_to_json(truth, cfg), encoding="utf-8")
    print(f"wrote {out} and {truth_path(out)}")


def cmd_ingest(args):
    panel = [ingest.read_timeseries_csv(p, header=args.header) for p in args.series]
    A = ingest.from_timeseries(panel, args.keep_fraction, global_threshold=args.global_threshold)
    out = Path(args.out or "network.tsv")
    ingest.write_tensor(A, out)
    print(f"wrote {out}: n={A.shape[1]} L={A.shape[0]}")


def _layer_ranks(args, L):
    if args.auto_k:
        return None
    if args.K is None:
        raise CLIError("give --K or --auto-k")
    return [args.K] * L


def _cluster(args, A):
    if args.M is None and not args.auto_m:
        raise CLIError("give --M or --auto-m")
    Ks = _layer_ranks(args, len(A))
    M = None if args.auto_m else args.M
    km = KMeansConfig(M or 1, restarts=args.restarts, seed=args.seed or 0)
    algorithm = getattr(args, "algorithm", "alg1")
    return cluster_layers(A, M, Ks, km, centered=algorithm == "alg1", strip_signs=args.strip_signs)


def cmd_cluster_layers(args):
    A = ingest.read_tensor(args.tensor)
    part = _cluster(args, A)
    out = Path(args.out or "labels.csv")
    write_labels(part, out)
    print(f"wrote {out}: {part.M} groups, sizes {part.sizes().tolist()}")


def _estimate(args, A, part):
    dims = None if args.auto_k else [args.K] * part.M
    if args.method == "concat":
        if dims is None:
            raise CLIError("the concatenation baseline needs --K")
        return concat_group_subspaces(A, part, dims, strip_signs=args.strip_signs)
    return [g.basis for g in estimate_group_subspaces(A, part, dims, strip_signs=args.strip_signs)]


def cmd_estimate_subspaces(args):
    A = ingest.read_tensor(args.tensor)
    part = read_labels(args.labels)
    if args.auto_k is False and args.K is None:
        raise CLIError("give --K or --auto-k")
    out = Path(args.out or "bases")
    out.mkdir(parents=True, exist_ok=True)
    for m, U in enumerate(_estimate(args, A, part)):
        write_basis(U, out / f"basis_{m}.txt")
    print(f"wrote {part.M} bases to {out}")


def cmd_cluster_nodes(args):
    out = Path(args.out or "communities")
    out.mkdir(parents=True, exist_ok=True)
    for m, path in enumerate(args.bases):
        U = read_basis(path)
        K = args.K or U.shape[1]
        z = node_communities(U, K, KMeansConfig(K, restarts=args.restarts, seed=args.seed or 0))
        write_communities(z, out / f"communities_{m}.csv")
    print(f"wrote {len(args.bases)} community files to {out}")


def evaluate(truth: dict, part=None, bases=None, communities=None) -> dict:
    report = {}
    if part is not None:
        M = max(part.M, truth["M"])
        report["misclustering_rate"] = misclustering_rate(part.labels, truth["labels"].labels, M)
    if bases is not None:
        if len(bases) != truth["M"]:
            raise CLIError(f"expected {truth['M']} bases, got {len(bases)}")
        rep = subspace_report(truth["U"], bases)
        report.update({k: v for k, v in vars(rep).items()})
        report["permutation"] = list(rep.permutation)
    if communities is not None:
        if truth.get("communities") is None:
            raise CLIError("ground truth has no node communities")
        report["within_layer_error"] = within_layer_error(communities, truth["communities"])
    return report


def cmd_evaluate(args):
    truth = read_truth(args.truth)
    part = read_labels(args.labels) if args.labels else None
    bases = [read_basis(p) for p in args.bases] if args.bases else None
    comms = [read_communities(p) for p in args.communities] if args.communities else None
    text = json.dumps(evaluate(truth, part, bases, comms), indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")


def cmd_pipeline(args):
    A = ingest.read_tensor(args.tensor)
    out = Path(args.out or "pipeline_out")
    out.mkdir(parents=True, exist_ok=True)
    part = _cluster(args, A)
    write_labels(part, out / "labels.csv")
    args.method = "alg2"
    if not args.auto_k and args.dim is not None:
        args.K = args.dim
    bases = _estimate(args, A, part)
    for m, U in enumerate(bases):
        write_basis(U, out / f"basis_{m}.txt")
    comms = None
    if args.nodes:
        comms = []
        for m, U in enumerate(bases):
            k = U.shape[1]
            z = node_communities(U, k, KMeansConfig(k, restarts=args.restarts, seed=args.seed or 0)) if k else np.zeros(U.shape[0], dtype=np.int64)
            write_communities(z, out / f"communities_{m}.csv")
            comms.append(z)
    tp = Path(args.truth) if args.truth else truth_path(args.tensor)
    if tp.exists():
        truth = read_truth(tp)
        if truth.get("communities") is None:
            comms = None
        report = evaluate(truth, part, bases if len(bases) == truth["M"] else None, comms)
        (out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        print(json.dumps(report, indent=1, sort_keys=True))
    else:
        print(f"no ground truth at {tp}; metrics skipped")
    print(f"wrote results to {out}")


def cmd_simulate(args):
    cfg = _experiment(args)
    rows = sweep(cfg, threads=args.threads)
    text = rows_to_csv(rows)
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(text)
    if args.summarize:
        summary = summary_to_csv(summarize(rows))
        if out:
            Path(out).with_suffix(".summary.csv").write_text(summary, encoding="utf-8")
        sys.stderr.write(summary)


# ---------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", default=None, help="key = value file of experiment fields")
    p.add_argument("--out", default=None)
    p.add_argument("--strip-signs", action="store_true", help="analyse |A| instead of A")
    p.add_argument("--auto-m", action="store_true", help="choose the group count by eigengap")
    p.add_argument("--auto-k", action="store_true", help="choose ranks by eigengap")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("-v", "--verbose", action="store_true")


def _model_flags(p):
    p.add_argument("--distribution", choices=model.CASES, default=None)
    p.add_argument("--param", type=float, default=None, help="sigma, nu or Dirichlet alpha")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--c", type=float, default=None, help="lower end of the B entry range")
    p.add_argument("--d", type=float, default=None, help="upper end of the B entry range")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dimple", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a network and its ground truth")
    _common(p)
    _model_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="build a signed tensor from time series CSVs")
    _common(p)
    p.add_argument("series", nargs="+", help="one CSV per layer, T rows x n columns")
    p.add_argument("--keep-fraction", type=float, default=0.4)
    p.add_argument("--header", action="store_true", help="CSV files start with a header row")
    p.add_argument("--global-threshold", action="store_true", help="one edge budget shared by all layers")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster-layers", help="cluster layers into groups")
    _common(p)
    p.add_argument("tensor")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--K", type=int, default=None, help="rank used for every layer")
    p.add_argument("--algorithm", choices=("alg1", "alg3"), default="alg1")
    p.set_defaults(func=cmd_cluster_layers)

    p = sub.add_parser("estimate-subspaces", help="estimate one subspace per layer group")
    _common(p)
    p.add_argument("tensor")
    p.add_argument("--labels", required=True)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--method", choices=("alg2", "concat"), default="alg2")
    p.set_defaults(func=cmd_estimate_subspaces)

    p = sub.add_parser("cluster-nodes", help="k-means on the rows of estimated bases")
    _common(p)
    p.add_argument("bases", nargs="+")
    p.add_argument("--K", type=int, default=None)
    p.set_defaults(func=cmd_cluster_nodes)

    p = sub.add_parser("evaluate", help="compare estimates with a ground-truth sidecar")
    _common(p)
    p.add_argument("--truth", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--bases", nargs="*", default=None)
    p.add_argument("--communities", nargs="*", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="layer clustering, subspace estimation and evaluation")
    _common(p)
    p.add_argument("tensor")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--K", type=int, default=None, help="rank used for every centered layer")
    p.add_argument("--dim", type=int, default=None, help="group subspace dimension (defaults to --K)")
    p.add_argument("--nodes", action="store_true", help="also cluster nodes within each group")
    p.add_argument("--truth", default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("simulate", help="Monte Carlo sweep written as long-format CSV")
    _common(p)
    _model_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--n-grid", default=None, help="comma separated node counts")
    p.add_argument("--L-grid", default=None, help="comma separated layer counts")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--algorithms", default=None, help="comma separated subset of the algorithms")
    p.add_argument("--all-metrics", action="store_true")
    p.add_argument("--compare-signs", action="store_true", help="also run every algorithm on |A|")
    p.add_argument("--full-scale", action="store_true", help="100 runs and L in {50, 100, 150}")
    p.add_argument("--summarize", action="store_true", help="write per-point means next to the CSV")
    p.set_defaults(func=cmd_simulate, restarts=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except OSError as exc:
        print(f"dimple: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"dimple: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
