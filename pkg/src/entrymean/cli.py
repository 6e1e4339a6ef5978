"""Command-line front end.

Every subcommand is driven by a JSON config file (see the ``configs/``
directory in the repository for a worked example of each schema). ``--seed``
and ``--out`` override the corresponding config fields, so shell pipelines
can reuse one config with different outputs.

Exit codes: 0 on success, 1 for configuration problems, 2 for I/O problems.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import corruption, estimators, metrics, recovery
from .data import Dataset, load_dataset_csv, save_dataset_csv
from .datagen import draw_latents, make_structure, synthesize
from .errors import EstimatorFailure
from .experiment import (
    ConfigError,
    ingest_csv,
    load_config,
    parse_config,
    parse_estimator_spec,
    parse_latent_spec,
    parse_structure_spec,
    run_experiment,
    write_results,
)
from .structure import load_structure_csv, min_rows_to_drop_rank, save_structure_csv


def _load_json(path) -> dict:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return obj


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def _out_prefix(cfg: dict, args) -> str:
    prefix = args.out if args.out is not None else cfg.get("out")
    if not prefix:
        raise ConfigError("no output prefix: set 'out' in the config or pass --out")
    return prefix


def _seed(cfg: dict, args, default=0) -> int:
    return args.seed if args.seed is not None else int(cfg.get("seed", default))


def cmd_gen(args) -> int:
    cfg = _load_json(args.config)
    seed = _seed(cfg, args)
    spec = parse_structure_spec(_need(cfg, "structure"), default_seed=seed)
    latent = parse_latent_spec(_need(cfg, "latent"))
    n_samples = int(_need(cfg, "n_samples"))
    if latent.dim != spec.r:
        raise ConfigError("latent dimension must match the structure's r")
    a = make_structure(spec)
    ds = synthesize(a, draw_latents(latent, n_samples, np.random.default_rng(seed)))
    prefix = _out_prefix(cfg, args)
    save_dataset_csv(ds, f"{prefix}.data.csv")
    save_structure_csv(a, f"{prefix}.structure.csv")
    print(f"wrote {prefix}.data.csv ({ds.n_samples}x{ds.dim}) and {prefix}.structure.csv")
    return 0


def cmd_corrupt(args) -> int:
    cfg = _load_json(args.config)
    seed = _seed(cfg, args)
    ds = load_dataset_csv(_need(cfg, "data_csv"))
    adversary = _need(cfg, "adversary")
    budget = float(_need(cfg, "budget"))
    rng = np.random.default_rng(seed)
    if adversary == "sample_shift":
        plan = corruption.plan_sample_shift(ds, budget, float(cfg.get("shift", 10.0)))
    elif adversary == "tail_hiding":
        plan = corruption.plan_tail_hiding(ds, budget)
    elif adversary == "concentrated_hiding":
        plan = corruption.plan_concentrated_hiding(ds, budget)
    elif adversary == "unrecoverable_hiding":
        a = load_structure_csv(_need(cfg, "structure_csv"))
        plan = corruption.plan_unrecoverable_hiding(ds, budget, min_rows_to_drop_rank(a), rng)
    else:
        raise ConfigError(f"unknown adversary {adversary!r}")
    prefix = _out_prefix(cfg, args)
    corruption.save_plan_csv(plan, f"{prefix}.plan.csv")
    save_dataset_csv(corruption.apply_plan(ds, plan), f"{prefix}.corrupted.csv")
    print(f"wrote {prefix}.corrupted.csv and {prefix}.plan.csv ({len(plan)} edits)")
    return 0


def cmd_recover(args) -> int:
    cfg = _load_json(args.config)
    ds = load_dataset_csv(_need(cfg, "data_csv"))
    method = _need(cfg, "method")
    prefix = _out_prefix(cfg, args)
    if method == "known_structure":
        a = load_structure_csv(_need(cfg, "structure_csv"))
        kept = []
        recovered, discarded = [], []
        for i in range(ds.n_samples):
            outcome = recovery.impute_from_structure(ds.values[i], a)
            if outcome.status is recovery.RecoveryStatus.UNRECOVERABLE:
                discarded.append(i)
                continue
            if outcome.status is recovery.RecoveryStatus.RECOVERED:
                recovered.append(i)
            kept.append(outcome.sample)
        if not kept:
            raise ConfigError("every sample was unrecoverable")
        report = recovery.CompletionReport(
            Dataset(np.vstack(kept)), recovered, discarded, 0, True
        )
    elif method == "iterative_svd":
        report = recovery.iterative_svd_complete(
            ds,
            int(_need(cfg, "rank")),
            int(cfg.get("max_iter", 500)),
            float(cfg.get("tol", 1e-9)),
        )
    else:
        raise ConfigError(f"unknown recovery method {method!r}")
    save_dataset_csv(report.completed, f"{prefix}.recovered.csv")
    report.save_json(f"{prefix}.report.json")
    print(
        f"wrote {prefix}.recovered.csv and {prefix}.report.json "
        f"({len(report.recovered_indices)} recovered, {len(report.discarded_indices)} discarded)"
    )
    return 0


def cmd_estimate(args) -> int:
    cfg = _load_json(args.config)
    seed = _seed(cfg, args)
    ds = ingest_csv(_need(cfg, "data_csv"), bool(cfg.get("standardize", False)))
    spec = parse_estimator_spec(_need(cfg, "estimator"))
    a = load_structure_csv(cfg["structure_csv"]) if cfg.get("structure_csv") else None
    try:
        vec = estimators.estimate(ds, spec, a, np.random.default_rng(seed))
    except EstimatorFailure as exc:
        raise ConfigError(f"estimator failed: {exc}") from None
    payload = {"estimator": spec.label, "estimate": [float(v) for v in vec]}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out is not None or cfg.get("out"):
        prefix = _out_prefix(cfg, args)
        with open(f"{prefix}.estimate.json", "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {prefix}.estimate.json")
    else:
        print(text)
    return 0


def cmd_metric(args) -> int:
    cfg = _load_json(args.config)
    kind = _need(cfg, "kind")
    if kind in ("tv", "entrywise_avg", "entrywise_max"):
        left = metrics.load_distribution_csv(_need(cfg, "left_csv"))
        right = metrics.load_distribution_csv(_need(cfg, "right_csv"))
        if kind == "tv":
            value = metrics.tv_distance(left, right)
        elif kind == "entrywise_avg":
            value = metrics.entrywise_distance_avg(left, right)
        else:
            value = metrics.entrywise_distance_max(left, right)
    elif kind in ("l2", "mahalanobis"):
        est = np.array(_need(cfg, "estimate"), dtype=float)
        ref = np.array(_need(cfg, "reference"), dtype=float)
        if kind == "l2":
            value = metrics.l2_error(est, ref)
        else:
            sigma = np.loadtxt(_need(cfg, "covariance_csv"), delimiter=",", ndmin=2)
            value = metrics.mahalanobis_error(est, ref, sigma)
    else:
        raise ConfigError(f"unknown metric kind {kind!r}")
    print(json.dumps({"kind": kind, "value": value}))
    return 0


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = args.seed
        cfg = parse_config(raw)
    prefix = _out_prefix(cfg.raw, args)
    result = run_experiment(cfg, threads=args.threads)
    csv_path, json_path = write_results(result, prefix)
    print(f"wrote {csv_path} and {json_path} ({len(result.rows)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entrymean",
        description="Structured mean estimation under cell-level corruption.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "gen": (cmd_gen, "generate a synthetic dataset and its structure matrix"),
        "corrupt": (cmd_corrupt, "plan and apply corruption to a dataset CSV"),
        "recover": (cmd_recover, "repair hidden entries of a dataset CSV"),
        "estimate": (cmd_estimate, "run one estimator on a dataset CSV"),
        "metric": (cmd_metric, "evaluate a distance or error metric"),
        "experiment": (cmd_experiment, "run a full benchmark sweep"),
    }
    for name, (handler, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output prefix")
        if name == "experiment":
            p.add_argument("--threads", type=int, default=1, help="trial worker threads")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
