"""Benchmark harness: sweep corruption budgets, score estimators, emit tables.

A run is fully described by an :class:`ExperimentConfig`. Rows are produced
for every (method, budget, trial, metric) combination; when a method or
metric fails on the corrupted data the row is kept with a NaN value, which
the CSV writer renders as ``NA``. Reruns with the same config are
byte-identical: per-trial randomness derives from ``seed + trial`` and rows
are sorted into a canonical order before writing.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corruption import (
    CorruptionPlan,
    apply_plan,
    plan_concentrated_hiding,
    plan_sample_shift,
    plan_tail_hiding,
    plan_unrecoverable_hiding,
)
from .data import Dataset, load_dataset_csv
from .datagen import (
    LatentSpec,
    StructureSpec,
    draw_latents,
    make_structure,
    population_covariance,
    population_mean,
    synthesize,
)
from .errors import EstimatorFailure, MetricFailure
from .estimators import EstimatorSpec, RecoverySpec, empirical_mean, estimate
from .metrics import l2_error, mahalanobis_error
from .structure import StructureMatrix, load_structure_csv, min_rows_to_drop_rank

ADVERSARIES = (
    "sample_shift",
    "tail_hiding",
    "concentrated_hiding",
    "unrecoverable_hiding",
)
METRIC_KINDS = ("l2", "mahalanobis")
NA = "NA"


class ConfigError(ValueError):
    """The run configuration is malformed."""


@dataclass(frozen=True, eq=False)
class DataConfig:
    kind: str  # "synthetic" or "csv"
    structure: StructureSpec | None = None
    latent: LatentSpec | None = None
    n_samples: int = 0
    path: str | None = None
    standardize: bool = False
    structure_path: str | None = None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    seed: int
    trials: int
    adversary: str
    budgets: tuple[float, ...]
    data: DataConfig
    methods: tuple[EstimatorSpec, ...]
    metrics: tuple[str, ...] = ("l2",)
    shift: float = 10.0
    raw: dict | None = None


@dataclass(frozen=True)
class ResultRow:
    method: str
    budget: float
    trial: int
    metric: str
    value: float  # NaN encodes a failed evaluation


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ResultRow]

    def summary(self) -> list[dict]:
        """Mean and standard deviation over the trials that produced a value."""
        out = []
        for spec in self.config.methods:
            for budget in self.config.budgets:
                for metric in self.config.metrics:
                    vals = [
                        r.value
                        for r in self.rows
                        if r.method == spec.label
                        and r.budget == budget
                        and r.metric == metric
                        and not np.isnan(r.value)
                    ]
                    out.append(
                        {
                            "method": spec.label,
                            "budget": budget,
                            "metric": metric,
                            "mean": float(np.mean(vals)) if vals else None,
                            "sd": float(np.std(vals)) if vals else None,
                            "n": len(vals),
                        }
                    )
        return out


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def parse_estimator_spec(obj: dict) -> EstimatorSpec:
    _require(isinstance(obj, dict), "each method must be an object")
    _require("kind" in obj, "method needs a 'kind'")
    recovery = None
    if "recovery" in obj and obj["recovery"] is not None:
        rec = obj["recovery"]
        _require(isinstance(rec, dict) and "method" in rec, "recovery needs a 'method'")
        recovery = RecoverySpec(
            method=rec["method"],
            rank=rec.get("rank"),
            max_iter=int(rec.get("max_iter", 500)),
            tol=float(rec.get("tol", 1e-9)),
            exponent=float(rec.get("exponent", 2.0)),
        )
    try:
        return EstimatorSpec(
            kind=obj["kind"],
            recovery=recovery,
            inner=obj.get("inner", "empirical_mean"),
            name=obj.get("name"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_structure_spec(obj: dict, default_seed: int | None = None) -> StructureSpec:
    _require(isinstance(obj, dict) and "kind" in obj, "structure needs a 'kind'")
    try:
        return StructureSpec(
            kind=obj["kind"],
            n=int(obj["n"]),
            r=int(obj["r"]),
            blocks=tuple(tuple(b) for b in obj["blocks"]) if obj.get("blocks") else None,
            entries=np.array(obj["entries"], dtype=float) if "entries" in obj else None,
            seed=int(obj["seed"]) if obj.get("seed") is not None else default_seed,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad structure spec: {exc}") from None


def parse_latent_spec(obj: dict) -> LatentSpec:
    _require(isinstance(obj, dict) and "kind" in obj, "latent needs a 'kind'")
    try:
        return LatentSpec(
            kind=obj["kind"],
            dim=int(obj["dim"]),
            mean=np.array(obj.get("mean", 0.0), dtype=float),
            scale=np.array(obj.get("scale", 1.0), dtype=float),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad latent spec: {exc}") from None


def parse_config(obj: dict) -> ExperimentConfig:
    _require(isinstance(obj, dict), "config must be a JSON object")
    seed = int(obj.get("seed", 0))
    _require(seed >= 0, "seed must be nonnegative")
    trials = int(obj.get("trials", 1))
    _require(trials >= 1, "trials must be at least 1")
    adversary = obj.get("adversary")
    _require(adversary in ADVERSARIES, f"adversary must be one of {ADVERSARIES}")
    budgets = tuple(float(b) for b in obj.get("budgets", ()))
    _require(len(budgets) >= 1, "at least one budget is required")
    _require(all(0.0 <= b <= 1.0 for b in budgets), "budgets must lie in [0, 1]")
    _require(
        all(b1 < b2 for b1, b2 in zip(budgets, budgets[1:])),
        "budgets must be strictly increasing",
    )
    data_obj = obj.get("data")
    _require(isinstance(data_obj, dict) and "kind" in data_obj, "data needs a 'kind'")
    if data_obj["kind"] == "synthetic":
        _require("structure" in data_obj, "synthetic data needs a structure spec")
        _require("latent" in data_obj, "synthetic data needs a latent spec")
        n_samples = int(data_obj.get("n_samples", 0))
        _require(n_samples >= 1, "n_samples must be at least 1")
        data = DataConfig(
            kind="synthetic",
            structure=parse_structure_spec(data_obj["structure"], default_seed=seed),
            latent=parse_latent_spec(data_obj["latent"]),
            n_samples=n_samples,
        )
        _require(
            data.structure.r == data.latent.dim,
            "latent dimension must match the structure's r",
        )
    elif data_obj["kind"] == "csv":
        _require("path" in data_obj, "csv data needs a 'path'")
        data = DataConfig(
            kind="csv",
            path=str(data_obj["path"]),
            standardize=bool(data_obj.get("standardize", False)),
            structure_path=data_obj.get("structure_path"),
        )
    else:
        raise ConfigError("data kind must be 'synthetic' or 'csv'")
    methods_obj = obj.get("methods")
    _require(isinstance(methods_obj, list) and methods_obj, "at least one method is required")
    methods = tuple(parse_estimator_spec(m) for m in methods_obj)
    labels = [m.label for m in methods]
    _require(len(set(labels)) == len(labels), "method labels must be unique")
    metrics = tuple(obj.get("metrics", ["l2"]))
    _require(
        metrics and all(m in METRIC_KINDS for m in metrics),
        f"metrics must be a nonempty subset of {METRIC_KINDS}",
    )
    return ExperimentConfig(
        seed=seed,
        trials=trials,
        adversary=adversary,
        budgets=budgets,
        data=data,
        methods=methods,
        metrics=metrics,
        shift=float(obj.get("shift", 10.0)),
        raw=obj,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(obj)


def ingest_csv(path, standardize: bool = False) -> Dataset:
    """Load a decimal CSV table; optionally standardize each coordinate.

    Standardization centers and scales each coordinate using its visible
    entries only. Coordinates with zero visible variance are centered but not
    scaled.
    """
    ds = load_dataset_csv(path)
    if not standardize:
        return ds
    values = ds.values.copy()
    for j in range(ds.dim):
        col = values[~ds.mask[:, j], j]
        if col.size == 0:
            continue
        center = col.mean()
        spread = col.std()
        values[~ds.mask[:, j], j] = (
            (col - center) / spread if spread > 0 else col - center
        )
    return Dataset(values, ds.mask)


def _plan_for(
    cfg: ExperimentConfig,
    ds: Dataset,
    structure: StructureMatrix | None,
    budget: float,
    rng: np.random.Generator,
) -> CorruptionPlan:
    if cfg.adversary == "sample_shift":
        return plan_sample_shift(ds, budget, cfg.shift)
    if cfg.adversary == "tail_hiding":
        return plan_tail_hiding(ds, budget)
    if cfg.adversary == "concentrated_hiding":
        return plan_concentrated_hiding(ds, budget)
    if structure is None:
        raise ConfigError("unrecoverable_hiding needs a structure matrix")
    margin = min_rows_to_drop_rank(structure)
    return plan_unrecoverable_hiding(ds, budget, margin, rng)


@dataclass
class _TrialContext:
    ds: Dataset
    structure: StructureMatrix | None
    reference: np.ndarray
    covariance: np.ndarray | None


def _prepare_trial(cfg: ExperimentConfig, trial: int) -> _TrialContext:
    if cfg.data.kind == "synthetic":
        structure = make_structure(cfg.data.structure)
        rng = np.random.default_rng(cfg.seed + trial)
        latents = draw_latents(cfg.data.latent, cfg.data.n_samples, rng)
        ds = synthesize(structure, latents)
        reference = population_mean(structure, cfg.data.latent)
        covariance = population_covariance(structure, cfg.data.latent)
        return _TrialContext(ds, structure, reference, covariance)
    ds = ingest_csv(cfg.data.path, cfg.data.standardize)
    structure = (
        load_structure_csv(cfg.data.structure_path) if cfg.data.structure_path else None
    )
    reference = empirical_mean(ds)
    clean = ds.values[~ds.mask.any(axis=1)]
    covariance = np.cov(clean, rowvar=False) if clean.shape[0] > 1 else None
    return _TrialContext(ds, structure, reference, covariance)


def _run_trial(cfg: ExperimentConfig, trial: int) -> list[ResultRow]:
    ctx = _prepare_trial(cfg, trial)
    rows = []
    for budget_idx, budget in enumerate(cfg.budgets):
        # Seed sequences keyed by position make reruns reproducible cell by cell.
        plan_rng = np.random.default_rng((cfg.seed, trial, budget_idx))
        plan = _plan_for(cfg, ctx.ds, ctx.structure, budget, plan_rng)
        corrupted = apply_plan(ctx.ds, plan)
        for method_idx, spec in enumerate(cfg.methods):
            est_rng = np.random.default_rng((cfg.seed, trial, budget_idx, method_idx))
            try:
                value_vec = estimate(corrupted, spec, ctx.structure, est_rng)
            except EstimatorFailure:
                value_vec = None
            for metric in cfg.metrics:
                if value_vec is None:
                    rows.append(ResultRow(spec.label, budget, trial, metric, float("nan")))
                    continue
                try:
                    if metric == "l2":
                        value = l2_error(value_vec, ctx.reference)
                    else:
                        if ctx.covariance is None:
                            raise MetricFailure("no covariance available")
                        value = mahalanobis_error(value_vec, ctx.reference, ctx.covariance)
                except MetricFailure:
                    value = float("nan")
                rows.append(ResultRow(spec.label, budget, trial, metric, value))
    return rows


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Execute all trials; row order is canonical regardless of thread count."""
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    if threads == 1:
        per_trial = [_run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(lambda t: _run_trial(cfg, t), range(cfg.trials)))
    method_order = {m.label: i for i, m in enumerate(cfg.methods)}
    metric_order = {m: i for i, m in enumerate(cfg.metrics)}
    rows = [row for chunk in per_trial for row in chunk]
    rows.sort(
        key=lambda r: (method_order[r.method], r.budget, r.trial, metric_order[r.metric])
    )
    return ExperimentResult(cfg, rows)


def format_value(value: float) -> str:
    return NA if np.isnan(value) else format(value, ".17g")


def write_results(result: ExperimentResult, prefix: str) -> tuple[str, str]:
    """Write ``<prefix>.csv`` with all rows and ``<prefix>.summary.json``."""
    csv_path = f"{prefix}.csv"
    json_path = f"{prefix}.summary.json"
    with open(csv_path, "w", newline="") as fh:
        fh.write("method,budget,trial,metric,value\n")
        for r in result.rows:
            fh.write(
                f"{r.method},{format(r.budget, '.17g')},{r.trial},{r.metric},{format_value(r.value)}\n"
            )
    payload = {"config": result.config.raw, "summary": result.summary()}
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def read_result_rows(csv_path) -> list[ResultRow]:
    """Parse a results CSV back into rows (inverse of :func:`write_results`)."""
    rows = []
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header != "method,budget,trial,metric,value":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            method, budget, trial, metric, value = line.rstrip("\n").split(",")
            rows.append(
                ResultRow(
                    method,
                    float(budget),
                    int(trial),
                    metric,
                    float("nan") if value == NA else float(value),
                )
            )
    return rows
