"""Recovering samples of the form A @ z from hidden or replaced entries.

Three routes are implemented:

* hidden entries, structure known: solve the visible rows for z
  (:func:`impute_from_structure`), or complete the whole table by iterated
  truncated SVD when only the rank is known (:func:`iterative_svd_complete`).
* replaced entries, structure known: find the point of range(A) closest to
  the corrupted vector in Hamming distance, either exhaustively or by
  sampling independent row subsets.
* replaced entries via sparse decoding: project onto a random parity check
  of range(A), so corruption shows up as a sparse vector that orthogonal
  matching pursuit can decode.

Exact replacement recovery is guaranteed only while the number of corrupted
coordinates is below half the removal margin of A (the minimum number of rows
whose loss drops its row space); at or past that point distinct reconstructions
can tie.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .data import Dataset
from .errors import CapExceededError, CompletionInfeasibleError
from .structure import (
    StructureMatrix,
    null_space_basis,
    numerical_rank,
    sample_independent_rows,
    structure_rank,
)

ENTRY_MATCH_TOL = 1e-8
RANGE_RESIDUAL_TOL = 1e-6


class RecoveryStatus(Enum):
    RECOVERED = "recovered"
    UNCHANGED = "unchanged"
    UNRECOVERABLE = "unrecoverable"


@dataclass
class RecoveryOutcome:
    status: RecoveryStatus
    sample: np.ndarray | None = None
    residual_hamming: int | None = None


def impute_from_structure(x: np.ndarray, a: StructureMatrix) -> RecoveryOutcome:
    """Fill the hidden entries of ``x`` (marked NaN) using the known structure.

    Succeeds exactly when the visible rows of ``a`` still span its full row
    space; then the latent vector is determined and the sample is rebuilt as
    A @ z. A least-squares residual above 1e-6 relative means the visible
    entries themselves are inconsistent with the structure (replaced rather
    than hidden), which is reported as unrecoverable rather than trusted.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != a.n:
        raise ValueError(f"sample length {x.size} does not match n={a.n}")
    visible = ~np.isnan(x)
    if visible.all():
        return RecoveryOutcome(RecoveryStatus.UNCHANGED, x.copy(), 0)
    full_rank = structure_rank(a)
    rows = a.entries[visible]
    if numerical_rank(rows, a.rank_tol) < full_rank:
        return RecoveryOutcome(RecoveryStatus.UNRECOVERABLE)
    z, *_ = np.linalg.lstsq(rows, x[visible], rcond=None)
    residual = np.linalg.norm(rows @ z - x[visible])
    if residual > RANGE_RESIDUAL_TOL * np.linalg.norm(x[visible]) and residual > 0:
        return RecoveryOutcome(RecoveryStatus.UNRECOVERABLE)
    return RecoveryOutcome(RecoveryStatus.RECOVERED, a.entries @ z, int(np.count_nonzero(~visible)))


@dataclass
class CompletionReport:
    """Outcome of a whole-table completion.

    ``completed`` keeps the retained samples in their original order;
    ``recovered_indices`` and ``discarded_indices`` refer to positions in the
    input dataset. Samples that had nothing hidden appear in neither list.
    """

    completed: Dataset
    recovered_indices: list[int]
    discarded_indices: list[int]
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "recovered_indices": list(self.recovered_indices),
            "discarded_indices": list(self.discarded_indices),
            "iterations": self.iterations,
            "converged": self.converged,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def iterative_svd_complete(
    ds: Dataset,
    rank: int,
    max_iter: int = 500,
    tol: float = 1e-9,
) -> CompletionReport:
    """Complete hidden entries by alternating rank truncation and re-imposition.

    Samples with fewer than ``rank`` visible entries cannot pin down their
    row of a rank-``rank`` table and are discarded up front. The remaining
    hidden cells start at their coordinate's visible median; each sweep
    projects the table to the nearest rank-``rank`` matrix and copies the
    projected values back into the originally hidden cells only. Stops when
    the largest change on hidden cells falls to ``tol``.
    """
    if rank < 1:
        raise ValueError("rank must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    visible_counts = (~ds.mask).sum(axis=1)
    discarded = [int(i) for i in np.flatnonzero(visible_counts < rank)]
    retained = np.flatnonzero(visible_counts >= rank)
    if retained.size == 0:
        raise CompletionInfeasibleError(
            "every sample has fewer visible entries than the target rank"
        )
    values = ds.values[retained]
    hidden = ds.mask[retained]
    recovered = [int(retained[i]) for i in np.flatnonzero(hidden.any(axis=1))]
    if not hidden.any():
        return CompletionReport(Dataset(values.copy()), [], discarded, 0, True)
    if np.any((~hidden).sum(axis=0) == 0):
        raise CompletionInfeasibleError("a coordinate is hidden in every retained sample")
    filled = values.copy()
    for j in range(filled.shape[1]):
        col_hidden = hidden[:, j]
        if col_hidden.any():
            filled[col_hidden, j] = np.median(values[~col_hidden, j])
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        u, s, vt = np.linalg.svd(filled, full_matrices=False)
        projected = (u[:, :rank] * s[:rank]) @ vt[:rank]
        delta = float(np.max(np.abs(projected[hidden] - filled[hidden])))
        filled[hidden] = projected[hidden]
        if delta <= tol:
            converged = True
            break
    return CompletionReport(Dataset(filled), recovered, discarded, iterations, converged)


def certify_unique_completion(mask: np.ndarray, rank: int) -> bool:
    """Certify that the hiding pattern pins down a unique rank-``rank`` completion.

    Looks for a witness family of rank + 1 disjoint groups of n - rank
    samples in which every subset of k samples leaves at least rank + k
    coordinates not hidden everywhere. Groups are built greedily: seed with a
    sample showing at least rank + 1 coordinates, then grow by samples that
    each expose one coordinate not yet counted. Samples sharing a hiding
    pattern are interchangeable, so each pattern contributes at most
    floor(multiplicity / (rank + 1)) members per group, keeping the groups
    disjoint.

    The certificate is sound: True means samples with at least ``rank``
    visible entries are uniquely completable. False only means the greedy
    search found no witness.
    """
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    n_samples, dim = mask.shape
    if not 1 <= rank < dim:
        raise ValueError(f"rank must lie in [1, {dim - 1}]")
    group_size = dim - rank
    groups_needed = rank + 1
    if n_samples < groups_needed * group_size:
        return False
    counts: dict[bytes, int] = {}
    for row in mask:
        counts[row.tobytes()] = counts.get(row.tobytes(), 0) + 1
    patterns = []
    for key, count in counts.items():
        visible = frozenset(np.flatnonzero(~np.frombuffer(key, dtype=bool)))
        budget = count // groups_needed
        if len(visible) >= rank + 1 and budget >= 1:
            patterns.append((visible, budget))
    if not patterns:
        return False
    # Deterministic order: richest patterns first, then by content.
    patterns.sort(key=lambda item: (-len(item[0]), sorted(item[0])))
    seed_visible, seed_budget = patterns[0]
    exposed = set(sorted(seed_visible)[: rank + 1])
    budgets = [b for _, b in patterns]
    budgets[0] -= 1
    picked = 1
    progress = True
    while picked < group_size and progress:
        progress = False
        for idx, (visible, _) in enumerate(patterns):
            while budgets[idx] > 0 and picked < group_size:
                fresh = visible - exposed
                if not fresh:
                    break
                exposed.add(min(fresh))
                budgets[idx] -= 1
                picked += 1
                progress = True
    return picked >= group_size


def _hamming(candidate: np.ndarray, x: np.ndarray, tol: float) -> int:
    return int(np.count_nonzero(np.abs(candidate - x) > tol))


def _in_range(x: np.ndarray, a: StructureMatrix, tol: float) -> bool:
    z, *_ = np.linalg.lstsq(a.entries, x, rcond=None)
    return bool(np.max(np.abs(a.entries @ z - x)) <= tol)


def replacement_candidates(
    a: StructureMatrix,
    x: np.ndarray,
    tol: float = ENTRY_MATCH_TOL,
    max_subsets: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """All reconstructions from independent r-row subsets, with Hamming residuals.

    Returns ``(candidates, residuals)`` where ``candidates[i]`` solves one
    invertible r-row subsystem exactly and ``residuals[i]`` counts the
    coordinates of ``x`` it fails to reproduce (beyond ``tol``). Dependent
    subsets are skipped.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != a.n:
        raise ValueError(f"sample length {x.size} does not match n={a.n}")
    if np.any(np.isnan(x)):
        raise ValueError("replacement recovery expects a fully visible sample")
    r = a.r
    if structure_rank(a) < r:
        raise ValueError("structure must have full column rank")
    if math.comb(a.n, r) > max_subsets:
        raise CapExceededError(f"C({a.n}, {r}) subsets exceed the cap {max_subsets}")
    subsets = np.array(list(combinations(range(a.n), r)))
    sub_a = a.entries[subsets]  # (n_subsets, r, r)
    svals = np.linalg.svd(sub_a, compute_uv=False)
    invertible = svals[:, -1] > a.rank_tol * svals[:, 0]
    if not invertible.any():
        raise ValueError("no invertible r-row subset exists")
    sub_a = sub_a[invertible]
    sub_x = x[subsets[invertible]]
    zs = np.linalg.solve(sub_a, sub_x[..., None])[..., 0]
    candidates = zs @ a.entries.T
    residuals = (np.abs(candidates - x[None, :]) > tol).sum(axis=1)
    return candidates, residuals


def recover_replacement_exhaustive(
    a: StructureMatrix,
    x: np.ndarray,
    tol: float = ENTRY_MATCH_TOL,
    max_subsets: int = 100_000,
) -> RecoveryOutcome:
    """Reconstruction of minimum Hamming residual over every r-row subset.

    Ties between distinct optimal reconstructions are broken by picking the
    lexicographically smallest vector, so the result is deterministic even in
    the ambiguous regime.
    """
    candidates, residuals = replacement_candidates(a, x, tol, max_subsets)
    best = int(residuals.min())
    if best == 0:
        return RecoveryOutcome(RecoveryStatus.UNCHANGED, np.asarray(x, dtype=float).copy(), 0)
    pool = candidates[residuals == best]
    winner = min(map(tuple, pool))
    return RecoveryOutcome(RecoveryStatus.RECOVERED, np.array(winner), best)


def recover_replacement_randomized(
    a: StructureMatrix,
    x: np.ndarray,
    exponent: float = 2.0,
    rng: np.random.Generator | None = None,
    tol: float = ENTRY_MATCH_TOL,
) -> RecoveryOutcome:
    """Hamming-residual minimization over ceil(r**exponent) random row subsets.

    Each draw picks ``r`` independent rows uniformly, solves the square
    subsystem and scores the rebuilt sample against ``x``. A vector already
    in range(A) (within ``tol``) is returned unchanged without sampling.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != a.n:
        raise ValueError(f"sample length {x.size} does not match n={a.n}")
    if np.any(np.isnan(x)):
        raise ValueError("replacement recovery expects a fully visible sample")
    if structure_rank(a) < a.r:
        raise ValueError("structure must have full column rank")
    if exponent < 0:
        raise ValueError("exponent must be nonnegative")
    if rng is None:
        rng = np.random.default_rng()
    if _in_range(x, a, tol):
        return RecoveryOutcome(RecoveryStatus.UNCHANGED, x.copy(), 0)
    n_draws = int(math.ceil(a.r**exponent))
    best_sample = None
    best_residual = None
    for _ in range(n_draws):
        rows = sample_independent_rows(a, a.r, rng)
        z = np.linalg.solve(a.entries[rows], x[rows])
        candidate = a.entries @ z
        residual = _hamming(candidate, x, tol)
        if best_residual is None or residual < best_residual:
            best_sample, best_residual = candidate, residual
    return RecoveryOutcome(RecoveryStatus.RECOVERED, best_sample, best_residual)


def build_parity_check(
    a: StructureMatrix, n_rows: int, rng: np.random.Generator
) -> np.ndarray:
    """Random matrix F with F @ A = 0, one scaled unit kernel vector per row.

    Rows are independent draws: a direction uniform on the unit sphere of the
    kernel of A', scaled by sqrt(u / n_rows) with u chi-squared on n degrees
    of freedom. The expected squared row norm is therefore n / n_rows. At
    most n - rank(A) rows are meaningful; asking for more raises.
    """
    kernel = null_space_basis(a.entries.T, a.rank_tol)
    max_rows = kernel.vectors.shape[0]
    if n_rows < 0:
        raise ValueError("n_rows must be nonnegative")
    if n_rows > max_rows:
        raise ValueError(f"at most {max_rows} parity rows exist, asked for {n_rows}")
    if n_rows == 0:
        return np.zeros((0, a.n))
    rows = np.zeros((n_rows, a.n))
    for i in range(n_rows):
        direction = np.zeros(a.n)
        while np.linalg.norm(direction) < 1e-12:
            direction = rng.standard_normal(max_rows) @ kernel.vectors
        direction /= np.linalg.norm(direction)
        rows[i] = np.sqrt(rng.chisquare(a.n) / n_rows) * direction
    return rows


def orthogonal_matching_pursuit(f: np.ndarray, y: np.ndarray, sparsity: int) -> np.ndarray:
    """Greedy decode of y = F @ e for an e with at most ``sparsity`` nonzeros.

    Per round: pick the unused column whose direction is most correlated
    with the residual (inner products are scaled by column norm, as for a
    unit-norm dictionary), refit e on the chosen columns by least squares
    and recompute the residual, which is therefore nonincreasing in norm.
    Stops early once the residual is negligible.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.size != f.shape[0]:
        raise ValueError(f"y length {y.size} does not match {f.shape[0]} rows")
    if not 0 <= sparsity <= f.shape[1]:
        raise ValueError(f"sparsity must lie in [0, {f.shape[1]}]")
    e = np.zeros(f.shape[1])
    support: list[int] = []
    residual = y.copy()
    floor = 1e-12 * max(1.0, np.linalg.norm(y))
    norms = np.linalg.norm(f, axis=0)
    for _ in range(sparsity):
        if np.linalg.norm(residual) <= floor:
            break
        scores = np.abs(f.T @ residual) / np.where(norms > 0, norms, 1.0)
        scores[support] = -1.0
        pick = int(np.argmax(scores))
        support.append(pick)
        columns = f[:, support]
        if numerical_rank(columns) < len(support):
            raise ValueError("selected columns became rank deficient")
        coef, *_ = np.linalg.lstsq(columns, y, rcond=None)
        residual = y - columns @ coef
    if support:
        e[support] = coef
    return e


def recover_by_sparse_decoding(
    a: StructureMatrix,
    x: np.ndarray,
    sparsity: int,
    n_parity_rows: int,
    rng: np.random.Generator,
    tol: float = ENTRY_MATCH_TOL,
) -> RecoveryOutcome:
    """Decode replacement corruption through a random parity check of range(A).

    Projecting x by F with F @ A = 0 erases the clean part, leaving y = F @ e
    with e the corruption vector. If the e found by matching pursuit brings
    x - e back into range(A) (residual within 1e-6 relative) the repaired
    sample is returned; otherwise the sample is unrecoverable at this
    sparsity level.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != a.n:
        raise ValueError(f"sample length {x.size} does not match n={a.n}")
    if np.any(np.isnan(x)):
        raise ValueError("sparse decoding expects a fully visible sample")
    if _in_range(x, a, tol):
        return RecoveryOutcome(RecoveryStatus.UNCHANGED, x.copy(), 0)
    f = build_parity_check(a, n_parity_rows, rng)
    e = orthogonal_matching_pursuit(f, f @ x, sparsity)
    repaired = x - e
    z, *_ = np.linalg.lstsq(a.entries, repaired, rcond=None)
    range_gap = np.max(np.abs(a.entries @ z - repaired))
    if range_gap > RANGE_RESIDUAL_TOL * max(1.0, np.max(np.abs(repaired))):
        return RecoveryOutcome(RecoveryStatus.UNRECOVERABLE)
    return RecoveryOutcome(
        RecoveryStatus.RECOVERED, repaired, int(np.count_nonzero(np.abs(e) > tol))
    )
