"""Distances between discrete distributions and error norms for estimates.

The headline quantities are two coupling-based distances that count
disagreement per coordinate rather than per whole vector. For a coupling
gamma of distributions P and Q over R^dim, collect the per-coordinate
disagreement masses m_k = Pr[(x, y) ~ gamma : x_k != y_k]. Minimizing the
mean of m over couplings gives :func:`entrywise_distance_avg`; minimizing the
max gives :func:`entrywise_distance_max`. Both are bounded above by the total
variation distance, which charges a full unit whenever vectors differ at all.

Atoms are compared coordinate by coordinate with exact float equality; the
intended use is distributions whose supports are constructed, not measured.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import CapExceededError, MetricFailure

COUPLING_CELL_CAP = 10_000
SUPPORT_CAP = 100


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported distribution on R^dim.

    ``support`` holds one atom per row; ``probs`` are the matching masses.
    Atoms must be pairwise distinct and the masses must sum to one within
    1e-9.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        support = np.atleast_2d(np.array(self.support, dtype=float))
        probs = np.array(self.probs, dtype=float).ravel()
        if support.shape[0] != probs.shape[0]:
            raise ValueError("one probability per atom required")
        if support.shape[0] < 1:
            raise ValueError("support must hold at least one atom")
        if not np.all(np.isfinite(support)):
            raise ValueError("atoms must be finite")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        if len({tuple(row) for row in support}) != support.shape[0]:
            raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def n_atoms(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint distribution with prescribed marginals ``left`` and ``right``."""

    left: DiscreteDistribution
    right: DiscreteDistribution
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.left.n_atoms, self.right.n_atoms):
            raise ValueError("weights shape must be (left atoms, right atoms)")
        if np.any(weights < -1e-12):
            raise ValueError("coupling weights must be nonnegative")
        weights = np.clip(weights, 0.0, None)
        if np.max(np.abs(weights.sum(axis=1) - self.left.probs), initial=0) > 1e-8:
            raise ValueError("row sums do not match the left marginal")
        if np.max(np.abs(weights.sum(axis=0) - self.right.probs), initial=0) > 1e-8:
            raise ValueError("column sums do not match the right marginal")
        object.__setattr__(self, "weights", weights)

    def coordinate_disagreement(self) -> np.ndarray:
        """Mass placed on pairs that differ, coordinate by coordinate."""
        diff = _disagreement_tensor(self.left, self.right)
        return np.einsum("ij,ijk->k", self.weights, diff)


def _check_same_dim(p: DiscreteDistribution, q: DiscreteDistribution) -> None:
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")


def _disagreement_tensor(p: DiscreteDistribution, q: DiscreteDistribution) -> np.ndarray:
    # (i, j, k) -> 1.0 where atom i of p and atom j of q differ in coordinate k.
    return (p.support[:, None, :] != q.support[None, :, :]).astype(float)


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance, matching atoms by exact equality."""
    _check_same_dim(p, q)
    masses: dict[tuple, float] = {}
    for atom, prob in zip(p.support, p.probs):
        masses[tuple(atom)] = masses.get(tuple(atom), 0.0) + prob
    for atom, prob in zip(q.support, q.probs):
        masses[tuple(atom)] = masses.get(tuple(atom), 0.0) - prob
    return 0.5 * float(sum(abs(v) for v in masses.values()))


def _marginal_constraints(p: DiscreteDistribution, q: DiscreteDistribution, extra_cols: int):
    m, k = p.n_atoms, q.n_atoms
    n_vars = m * k + extra_cols
    a_eq = np.zeros((m + k, n_vars))
    for i in range(m):
        a_eq[i, i * k : (i + 1) * k] = 1.0
    for j in range(k):
        a_eq[m + j, j : m * k : k] = 1.0
    b_eq = np.concatenate([p.probs, q.probs])
    return a_eq, b_eq


def _solve_lp(c, a_eq, b_eq, a_ub=None, b_ub=None):
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise MetricFailure(f"coupling LP failed: {res.message}")
    return res


def optimal_entrywise_coupling(
    p: DiscreteDistribution, q: DiscreteDistribution, norm: str = "avg"
) -> tuple[float, Coupling]:
    """Minimize mean ("avg") or max ("max") coordinate disagreement mass.

    Returns the optimal value together with a witnessing coupling. The "avg"
    case is a transportation problem with normalized Hamming costs; the "max"
    case adds a bound variable shared by all coordinates. Both are solved
    exactly as linear programs.
    """
    _check_same_dim(p, q)
    m, k = p.n_atoms, q.n_atoms
    if m * k > COUPLING_CELL_CAP:
        raise CapExceededError(f"{m}x{k} coupling exceeds the {COUPLING_CELL_CAP}-cell cap")
    if norm == "avg":
        cost = _disagreement_tensor(p, q).mean(axis=2)
        a_eq, b_eq = _marginal_constraints(p, q, extra_cols=0)
        res = _solve_lp(cost.ravel(), a_eq, b_eq)
        weights = res.x.reshape(m, k)
        return float(res.fun), Coupling(p, q, weights)
    if norm == "max":
        if m > SUPPORT_CAP or k > SUPPORT_CAP:
            raise CapExceededError(f"supports exceed the {SUPPORT_CAP}-atom cap")
        diff = _disagreement_tensor(p, q)
        a_eq, b_eq = _marginal_constraints(p, q, extra_cols=1)
        dim = p.dim
        a_ub = np.zeros((dim, m * k + 1))
        for c in range(dim):
            a_ub[c, : m * k] = diff[:, :, c].ravel()
            a_ub[c, -1] = -1.0
        objective = np.zeros(m * k + 1)
        objective[-1] = 1.0
        res = _solve_lp(objective, a_eq, b_eq, a_ub=a_ub, b_ub=np.zeros(dim))
        weights = res.x[:-1].reshape(m, k)
        return float(res.x[-1]), Coupling(p, q, weights)
    raise ValueError(f"norm must be 'avg' or 'max', got {norm!r}")


def entrywise_distance_avg(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Minimum over couplings of the mean per-coordinate disagreement mass."""
    return optimal_entrywise_coupling(p, q, "avg")[0]


def entrywise_distance_max(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Minimum over couplings of the largest per-coordinate disagreement mass."""
    return optimal_entrywise_coupling(p, q, "max")[0]


def cov_to_corr(matrix) -> np.ndarray:
    """Rescale a covariance-like matrix to unit diagonal."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    diag = np.diag(m)
    if np.any(diag <= 0):
        raise ValueError("diagonal entries must be positive")
    inv = 1.0 / np.sqrt(diag)
    return m * np.outer(inv, inv)


def max_sign_quadratic(matrix, max_dim: int = 20) -> float:
    """Largest sqrt(x' S x) over sign vectors x, with S the unit-diagonal rescaling.

    For positive semidefinite input the result lies between sqrt(dim) and dim;
    the identity matrix attains the lower end and the all-ones matrix the
    upper end. Enumerates all sign vectors (up to global sign), hence the
    ``max_dim`` cap.
    """
    s = cov_to_corr(matrix)
    dim = s.shape[0]
    if dim > max_dim:
        raise CapExceededError(f"dim={dim} exceeds the enumeration cap {max_dim}")
    best = -np.inf
    total = 1 << (dim - 1)  # fix the first sign: x and -x agree in value
    chunk = 1 << 14
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = (codes[:, None] >> np.arange(dim - 1, dtype=np.uint64)[None, :]) & 1
        signs = np.hstack([np.ones((codes.size, 1)), 1.0 - 2.0 * bits.astype(float)])
        vals = np.einsum("bi,ij,bj->b", signs, s, signs)
        best = max(best, float(vals.max()))
    if best < 0:
        raise ValueError("quadratic form is negative on every sign vector; input is not PSD")
    return float(np.sqrt(best))


def l2_error(estimate, reference) -> float:
    est = np.asarray(estimate, dtype=float).ravel()
    ref = np.asarray(reference, dtype=float).ravel()
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    return float(np.linalg.norm(est - ref))


def mahalanobis_error(estimate, reference, covariance, rank_tol: float = 1e-10) -> float:
    """sqrt of d' pinv(Sigma) d for d the estimation error.

    For rank-deficient covariance the error must lie in the range of Sigma
    (projection residual within 1e-6 relative), otherwise the quantity is
    infinite in spirit and a MetricFailure is raised.
    """
    d = np.asarray(estimate, dtype=float).ravel() - np.asarray(reference, dtype=float).ravel()
    sigma = np.atleast_2d(np.asarray(covariance, dtype=float))
    if sigma.shape != (d.size, d.size):
        raise ValueError("covariance shape does not match the vectors")
    eigvals, eigvecs = np.linalg.eigh(sigma)
    cutoff = rank_tol * max(eigvals.max(initial=0.0), 0.0)
    keep = eigvals > cutoff
    if not np.any(keep):
        raise MetricFailure("covariance has numerical rank zero")
    coords = eigvecs[:, keep].T @ d
    residual = d - eigvecs[:, keep] @ coords
    if np.linalg.norm(residual) > 1e-6 * max(1.0, np.linalg.norm(d)):
        raise MetricFailure("error vector lies outside the range of the covariance")
    return float(np.sqrt(np.sum(coords**2 / eigvals[keep])))


def load_distribution_csv(path) -> DiscreteDistribution:
    """Read atoms from CSV: each row is the atom's coordinates then its mass."""
    rows = []
    with open(path, newline="") as fh:
        for i, record in enumerate(csv.reader(fh)):
            if len(record) < 2:
                raise ValueError(f"row {i} needs at least one coordinate and a probability")
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                raise ValueError(f"row {i}: non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: empty distribution file")
    table = np.array(rows)
    return DiscreteDistribution(table[:, :-1], table[:, -1])


def save_distribution_csv(dist: DiscreteDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for atom, prob in zip(dist.support, dist.probs):
            writer.writerow([format(v, ".17g") for v in atom] + [format(prob, ".17g")])
