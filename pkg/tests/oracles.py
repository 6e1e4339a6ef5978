"""Independent reference implementations used to pin down expected values.

Everything here favors obviousness over speed: exhaustive enumeration,
plain loops, no shared code with the package internals.
"""
from __future__ import annotations

from itertools import combinations, product

import numpy as np


def transport_minimum(p_masses, q_masses, cost):
    """Exact transportation optimum by enumerating basic feasible solutions.

    Vertices of the transportation polytope correspond to edge subsets of the
    complete bipartite graph that form spanning trees. For each candidate
    subset the flows are solved from the marginal equations; feasible
    (nonnegative, consistent) solutions are scored and the minimum returned.
    Only sensible for supports of a handful of atoms.
    """
    p_masses = np.asarray(p_masses, dtype=float)
    q_masses = np.asarray(q_masses, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, k = cost.shape
    edges = [(i, j) for i in range(m) for j in range(k)]
    n_nodes = m + k
    best = np.inf
    for subset in combinations(edges, n_nodes - 1):
        # Spanning tree check via union-find.
        parent = list(range(n_nodes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for i, j in subset:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic or len({find(v) for v in range(n_nodes)}) != 1:
            continue
        rows = np.zeros((n_nodes, len(subset)))
        for e, (i, j) in enumerate(subset):
            rows[i, e] = 1.0
            rows[m + j, e] = 1.0
        rhs = np.concatenate([p_masses, q_masses])
        flow, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        if np.linalg.norm(rows @ flow - rhs) > 1e-9:
            continue
        if np.any(flow < -1e-10):
            continue
        value = sum(cost[i, j] * f for (i, j), f in zip(subset, flow))
        best = min(best, value)
    return best


def hamming_cost_matrix(support_p, support_q):
    """cost[i, j] = fraction of coordinates where atom i and atom j differ."""
    support_p = np.asarray(support_p, dtype=float)
    support_q = np.asarray(support_q, dtype=float)
    dim = support_p.shape[1]
    cost = np.zeros((support_p.shape[0], support_q.shape[0]))
    for i, x in enumerate(support_p):
        for j, y in enumerate(support_q):
            cost[i, j] = sum(1.0 for a, b in zip(x, y) if a != b) / dim
    return cost


def tv_direct(support_p, probs_p, support_q, probs_q):
    masses = {}
    for atom, w in zip(support_p, probs_p):
        masses[tuple(atom)] = masses.get(tuple(atom), 0.0) + w
    for atom, w in zip(support_q, probs_q):
        masses[tuple(atom)] = masses.get(tuple(atom), 0.0) - w
    return 0.5 * sum(abs(v) for v in masses.values())


def min_rows_to_drop_rank_direct(entries):
    """Row-removal search using numpy's own default rank tolerance."""
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[0]
    base = np.linalg.matrix_rank(entries)
    for k in range(1, n + 1):
        for dropped in combinations(range(n), k):
            kept = [i for i in range(n) if i not in dropped]
            reduced_rank = np.linalg.matrix_rank(entries[kept]) if kept else 0
            if reduced_rank < base:
                return k
    raise AssertionError("unreachable for nonzero input")


def halfplane_depth_direct(points, center, n_grid=7201):
    """Depth by sweeping many directions: every event angle plus a dense grid.

    Exact as long as each constancy arc of the count function contains at
    least one probed angle, which holds for the modest point sets used in
    tests.
    """
    rel = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    norms = np.linalg.norm(rel, axis=1)
    at_center = norms <= 1e-12 * max(1.0, norms.max(initial=0.0))
    base = int(at_center.sum())
    rel = rel[~at_center]
    if rel.shape[0] == 0:
        return base
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    probes = list(np.linspace(0.0, 2 * np.pi, n_grid, endpoint=False))
    for a in angles:
        probes.extend([a + np.pi / 2, a - np.pi / 2])
    best = rel.shape[0]
    for psi in probes:
        u = np.array([np.cos(psi), np.sin(psi)])
        count = int(np.count_nonzero(rel @ u >= -1e-12 * max(1.0, norms.max())))
        best = min(best, count)
    return base + best


def max_sign_quadratic_direct(matrix):
    """Sign enumeration with plain Python loops over itertools.product."""
    m = np.asarray(matrix, dtype=float)
    dim = m.shape[0]
    scale = np.diag(1.0 / np.sqrt(np.diag(m)))
    s = scale @ m @ scale
    best = -np.inf
    for signs in product((-1.0, 1.0), repeat=dim):
        x = np.array(signs)
        best = max(best, float(x @ s @ x))
    return float(np.sqrt(best))


def plan_budgets_direct(edits, n_samples, dim):
    """Recount all three budget figures from the raw edit list."""
    samples = set()
    per_coord = {}
    for sample, coord in edits:
        samples.add(sample)
        per_coord[coord] = per_coord.get(coord, 0) + 1
    return {
        "sample_fraction": len(samples) / n_samples,
        "per_coordinate_fraction": max(per_coord.values(), default=0) / n_samples,
        "cell_fraction": len(edits) / (n_samples * dim),
    }
