"""Corruption planners, budgets and the relations between adversary classes.

Three budget semantics are supported:

* ``sample_fraction``: fraction of whole samples the adversary may touch.
* ``per_coordinate_fraction``: largest fraction of entries it may touch
  within any single coordinate.
* ``cell_fraction``: fraction of all cells of the table it may touch.

Planners return an explicit :class:`CorruptionPlan` rather than mutating the
data, so budget accounting and application are separate, testable steps. The
adaptive choices inside planners are deterministic (ties broken by index) to
keep benchmark runs reproducible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset

HIDE = "hide"
REPLACE = "replace"


class AdversaryKind(str, Enum):
    SAMPLE_FRACTION = "sample_fraction"
    PER_COORDINATE_FRACTION = "per_coordinate_fraction"
    CELL_FRACTION = "cell_fraction"


@dataclass(frozen=True)
class Budget:
    kind: AdversaryKind
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", AdversaryKind(self.kind))
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"budget must lie in [0, 1], got {self.value}")


@dataclass(frozen=True)
class CellEdit:
    """One touched cell: hide it, or replace its value."""

    sample: int
    coord: int
    action: str
    value: float | None = None

    def __post_init__(self) -> None:
        if self.action not in (HIDE, REPLACE):
            raise ValueError(f"unknown action {self.action!r}")
        if self.action == HIDE and self.value is not None:
            raise ValueError("hide edits carry no value")
        if self.action == REPLACE and (self.value is None or not np.isfinite(self.value)):
            raise ValueError("replace edits need a finite value")


@dataclass(frozen=True)
class CorruptionPlan:
    edits: tuple[CellEdit, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edits", tuple(self.edits))
        cells = [(e.sample, e.coord) for e in self.edits]
        if len(set(cells)) != len(cells):
            raise ValueError("plan touches some cell twice")

    def __len__(self) -> int:
        return len(self.edits)


def apply_plan(ds: Dataset, plan: CorruptionPlan) -> Dataset:
    """Apply every edit to a copy of ``ds``; the input is left untouched."""
    values = ds.values.copy()
    mask = ds.mask.copy()
    for e in plan.edits:
        if not (0 <= e.sample < ds.n_samples and 0 <= e.coord < ds.dim):
            raise ValueError(
                f"edit at ({e.sample}, {e.coord}) is outside the {ds.n_samples}x{ds.dim} table"
            )
        if e.action == HIDE:
            mask[e.sample, e.coord] = True
            values[e.sample, e.coord] = np.nan
        else:
            values[e.sample, e.coord] = e.value
            mask[e.sample, e.coord] = False
    return Dataset(values, mask)


def plan_budget(plan: CorruptionPlan, kind: AdversaryKind, n_samples: int, dim: int) -> float:
    """Budget the plan consumes under the given accounting semantics."""
    kind = AdversaryKind(kind)
    if n_samples < 1 or dim < 1:
        raise ValueError("table dimensions must be positive")
    if kind is AdversaryKind.SAMPLE_FRACTION:
        return len({e.sample for e in plan.edits}) / n_samples
    if kind is AdversaryKind.PER_COORDINATE_FRACTION:
        per_coord = np.zeros(dim, dtype=int)
        for e in plan.edits:
            per_coord[e.coord] += 1
        return float(per_coord.max(initial=0)) / n_samples
    return len(plan.edits) / (n_samples * dim)


def can_simulate(a: Budget, b: Budget, dim: int) -> bool:
    """Whether an adversary with budget ``a`` can reproduce any plan of ``b``.

    The relation captures worst-case accounting on tables with ``dim``
    coordinates: whatever ``b`` touches within its budget fits inside ``a``'s
    budget under ``a``'s own accounting.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    ka, kb = a.kind, b.kind
    sample = AdversaryKind.SAMPLE_FRACTION
    coord = AdversaryKind.PER_COORDINATE_FRACTION
    cell = AdversaryKind.CELL_FRACTION
    if ka == kb:
        return a.value >= b.value
    # A whole-sample budget dominates entry-level budgets scaled by dim.
    if ka is sample and kb is coord:
        return b.value <= a.value / dim
    if ka is sample and kb is cell:
        return b.value <= a.value / dim
    if ka is coord and kb is cell:
        return b.value <= a.value / dim
    # Entry-level budgets at or above a sample budget can afford whole rows.
    if ka is coord and kb is sample:
        return a.value >= b.value
    if ka is cell and kb is sample:
        return a.value >= b.value
    if ka is cell and kb is coord:
        return a.value >= b.value
    raise AssertionError("unhandled kind pair")


def _order_by_largest_first_coordinate(ds: Dataset) -> np.ndarray:
    key = np.where(ds.mask[:, 0], -np.inf, ds.values[:, 0])
    key = np.nan_to_num(key, nan=-np.inf)
    # Stable sort on the negated key: larger values first, ties by sample index.
    return np.argsort(-key, kind="stable")


def plan_sample_shift(ds: Dataset, epsilon: float, shift=10.0, rng=None) -> CorruptionPlan:
    """Replace every coordinate of the floor(epsilon * N) most extreme samples.

    Victims are the samples with the largest first coordinate, a deterministic
    adaptive rule, and each of their cells is replaced by its value plus
    ``shift`` (scalar or per-coordinate vector). The ``rng`` argument is
    accepted for interface symmetry with the other planners but unused.
    """
    del rng
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    shift_vec = np.broadcast_to(np.asarray(shift, dtype=float), (ds.dim,))
    n_victims = int(np.floor(epsilon * ds.n_samples))
    victims = _order_by_largest_first_coordinate(ds)[:n_victims]
    if ds.mask[victims].any():
        raise ValueError("cannot shift samples that already carry hidden entries")
    edits = [
        CellEdit(int(s), j, REPLACE, float(ds.values[s, j] + shift_vec[j]))
        for s in victims
        for j in range(ds.dim)
    ]
    return CorruptionPlan(tuple(edits))


def plan_tail_hiding(ds: Dataset, rho: float) -> CorruptionPlan:
    """Hide, per coordinate, the floor(rho * N) smallest visible values.

    This biases every per-coordinate statistic upward, the worst direction
    for estimators that ignore hidden cells. Ties go to the lower sample
    index.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    per_coord = int(np.floor(rho * ds.n_samples))
    edits = []
    for j in range(ds.dim):
        key = np.where(ds.mask[:, j], np.inf, ds.values[:, j])
        key = np.nan_to_num(key, nan=np.inf)
        order = np.argsort(key, kind="stable")
        taken = 0
        for s in order:
            if taken == per_coord:
                break
            if ds.mask[s, j]:
                break  # only hidden cells remain in this coordinate
            edits.append(CellEdit(int(s), j, HIDE))
            taken += 1
    return CorruptionPlan(tuple(edits))


def plan_concentrated_hiding(ds: Dataset, alpha: float) -> CorruptionPlan:
    """Spend the whole cell budget hiding the tail of one coordinate.

    The coordinate with the largest visible variance is targeted (ties to the
    lowest index) and its floor(alpha * N * dim) smallest visible values are
    hidden, capped at N cells.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    variances = np.full(ds.dim, -np.inf)
    for j in range(ds.dim):
        col = ds.values[~ds.mask[:, j], j]
        if col.size:
            variances[j] = float(np.var(col))
    target = int(np.argmax(variances))
    n_cells = min(int(np.floor(alpha * ds.n_samples * ds.dim)), ds.n_samples)
    key = np.where(ds.mask[:, target], np.inf, ds.values[:, target])
    key = np.nan_to_num(key, nan=np.inf)
    order = np.argsort(key, kind="stable")
    edits = []
    for s in order[:n_cells]:
        if ds.mask[s, target]:
            break
        edits.append(CellEdit(int(s), target, HIDE))
    return CorruptionPlan(tuple(edits))


def plan_unrecoverable_hiding(
    ds: Dataset,
    alpha: float,
    removal_margin: int,
    rng: np.random.Generator,
) -> CorruptionPlan:
    """Hide a random rank-breaking set of coordinates in each victim sample.

    ``removal_margin`` is the minimum number of rows whose removal drops the
    row space of the structure matrix (see
    :func:`entrymean.structure.min_rows_to_drop_rank`). Hiding that many
    coordinates of a sample can leave its visible rows rank deficient, which
    defeats recovery that relies on the known structure. The number of
    victims is floor(alpha * dim * N / removal_margin) so the total cell
    budget is respected; victims are the samples with the largest first
    coordinate.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 1 <= removal_margin <= ds.dim:
        raise ValueError(f"removal_margin must lie in [1, {ds.dim}]")
    n_victims = min(
        int(np.floor(alpha * ds.dim * ds.n_samples / removal_margin)), ds.n_samples
    )
    victims = _order_by_largest_first_coordinate(ds)[:n_victims]
    edits = []
    for s in victims:
        coords = rng.choice(ds.dim, size=removal_margin, replace=False)
        for j in sorted(int(c) for c in coords):
            edits.append(CellEdit(int(s), j, HIDE))
    return CorruptionPlan(tuple(edits))


def save_plan_csv(plan: CorruptionPlan, path) -> None:
    """Write a plan as CSV with columns sample, coord, action, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "coord", "action", "value"])
        for e in plan.edits:
            writer.writerow(
                [e.sample, e.coord, e.action, "" if e.value is None else format(e.value, ".17g")]
            )


def load_plan_csv(path) -> CorruptionPlan:
    edits = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample", "coord", "action", "value"]:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for i, record in enumerate(reader):
            if len(record) != 4:
                raise ValueError(f"row {i + 1} has {len(record)} fields, expected 4")
            sample, coord, action, value = record
            edits.append(
                CellEdit(
                    int(sample),
                    int(coord),
                    action,
                    None if value == "" else float(value),
                )
            )
    return CorruptionPlan(tuple(edits))
