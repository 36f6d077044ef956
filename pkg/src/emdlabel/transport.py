"""Exact Earth Mover's Distance between normalized histograms.

Two independent routes are provided and cross-validate each other:

* ``emd_exact`` solves the transportation linear program with a
  transportation-simplex (min-cost-flow pivoting) method and returns the
  optimal flow matrix, for arbitrary nonnegative ground costs.
* ``emd_1d`` is the closed form for the line cost |i - j|: the L1 distance
  between the two cumulative mass vectors.

The labeling pipeline uses the 1D fast path; the exact solver serves
validation and user-supplied cost matrices.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .histogram import CostMatrix, Histogram

MASS_ATOL = 1e-9       # feasibility tolerance on plan marginals
RENORM_TOL = 1e-6      # inputs whose mass is off by more than this are rejected

# pivots before switching to Bland's anti-cycling rule within a degenerate run
_BLAND_TRIGGER = 64


@dataclass(frozen=True)
class TransportPlan:
    """Optimal nonnegative flow matrix and its total transport cost."""

    flows: np.ndarray
    total_cost: float

    def validate(self, q, p, costs, atol: float = MASS_ATOL) -> None:
        """Check flow nonnegativity, marginal sums, and the cost identity."""
        f = self.flows
        if np.any(f < 0):
            raise ValueError("transport plan has negative flow")
        if not np.allclose(f.sum(axis=1), np.asarray(q, float), rtol=0, atol=atol):
            raise ValueError("plan row sums do not match the source histogram")
        if not np.allclose(f.sum(axis=0), np.asarray(p, float), rtol=0, atol=atol):
            raise ValueError("plan column sums do not match the sink histogram")
        cost = float((f * np.asarray(costs, float)).sum())
        if abs(cost - self.total_cost) > atol * (1.0 + abs(self.total_cost)):
            raise ValueError("total_cost does not match the flow-cost sum")


def _as_mass(h, name: str) -> np.ndarray:
    """Extract a validated mass vector, renormalizing at most once."""
    mass = h.mass if isinstance(h, Histogram) else np.asarray(h, dtype=float)
    if mass.ndim != 1:
        raise ValueError(f"{name} must be a 1-D mass vector")
    if np.any(mass < 0) or not np.all(np.isfinite(mass)):
        raise ValueError(f"{name} has negative or non-finite mass")
    total = float(mass.sum())
    if abs(total - 1.0) >= RENORM_TOL:
        raise ValueError(f"{name} is not normalized (sum={total})")
    if total != 1.0:
        mass = mass / total
    return mass


def emd_1d(q, p) -> float:
    """EMD under the implicit |i - j| bin cost: sum of |CDF_q - CDF_p|."""
    qm = _as_mass(q, "q")
    pm = _as_mass(p, "p")
    if qm.shape != pm.shape:
        raise ValueError(f"bin count mismatch: {len(qm)} vs {len(pm)}")
    return float(np.abs(np.cumsum(qm - pm)).sum())


def emd_exact(q, p, c: CostMatrix) -> TransportPlan:
    """Solve the transportation LP exactly and return an optimal plan.

    Zero-mass bins are dropped before solving to shrink the network; the
    returned flow matrix is re-expanded to the full bin grid.
    """
    qm = _as_mass(q, "q")
    pm = _as_mass(p, "p")
    costs = c.costs if isinstance(c, CostMatrix) else np.asarray(c, dtype=float)
    nbins = len(qm)
    if len(pm) != nbins:
        raise ValueError(f"bin count mismatch: {nbins} vs {len(pm)}")
    if costs.shape != (nbins, nbins):
        raise ValueError(
            f"cost matrix shape {costs.shape} does not match {nbins} bins"
        )

    src = np.flatnonzero(qm > 0.0)
    snk = np.flatnonzero(pm > 0.0)
    sub = _transport_simplex(qm[src], pm[snk], costs[np.ix_(src, snk)])

    flows = np.zeros((nbins, nbins))
    flows[np.ix_(src, snk)] = sub
    plan = TransportPlan(flows=flows, total_cost=float((flows * costs).sum()))
    plan.validate(qm, pm, costs)
    return plan


def pairwise_emd(reals, synthetics, c: CostMatrix | None = None, workers: int = 1):
    """Distance matrix with entry (i, j) = EMD(reals[i], synthetics[j]).

    With ``c=None`` the |i - j| fast path is used; otherwise every cell is
    solved exactly under ``c``. Cells are pure and independent, so the result
    is identical for any worker count. Solver errors are re-raised with the
    offending (i, j) coordinates.
    """
    real_masses = [_as_mass(h, f"reals[{i}]") for i, h in enumerate(reals)]
    syn_masses = [_as_mass(h, f"synthetics[{j}]") for j, h in enumerate(synthetics)]
    sizes = {len(m) for m in real_masses} | {len(m) for m in syn_masses}
    if len(sizes) > 1:
        raise ValueError(f"histograms disagree on bin count: {sorted(sizes)}")
    costs = None
    if c is not None:
        costs = c.costs if isinstance(c, CostMatrix) else np.asarray(c, dtype=float)
        if sizes and costs.shape != (sizes.pop(),) * 2:
            raise ValueError("cost matrix does not match histogram bin count")

    n = len(real_masses)
    out = np.zeros((n, len(syn_masses)))
    if workers > 1 and n > 1:
        tasks = [(i, real_masses[i], syn_masses, costs) for i in range(n)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, row in zip(range(n), pool.map(_pairwise_row, tasks)):
                out[i] = row
    else:
        for i in range(n):
            out[i] = _pairwise_row((i, real_masses[i], syn_masses, costs))
    return out


def _pairwise_row(task):
    i, q_mass, syn_masses, costs = task
    row = np.zeros(len(syn_masses))
    for j, p_mass in enumerate(syn_masses):
        try:
            if costs is None:
                row[j] = emd_1d(q_mass, p_mass)
            else:
                row[j] = emd_exact(q_mass, p_mass, costs).total_cost
        except Exception as exc:
            raise RuntimeError(f"EMD failed at cell ({i}, {j}): {exc}") from exc
    return row


def write_distances_csv(path, real_ids, synthetic_ids, matrix) -> None:
    """Dump the distance matrix (rows = real ids, columns = synthetic ids)."""
    matrix = np.asarray(matrix)
    if matrix.shape != (len(real_ids), len(synthetic_ids)):
        raise ValueError("distance matrix shape does not match id lists")
    import csv

    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + list(synthetic_ids))
        for rid, row in zip(real_ids, matrix):
            writer.writerow([rid] + [repr(v) for v in row.tolist()])


# ---------------------------------------------------------------------------
# transportation simplex
# ---------------------------------------------------------------------------


def _northwest_corner(supply, demand):
    """Deterministic initial basic feasible solution with m + n - 1 basic cells."""
    m, n = len(supply), len(demand)
    flows = np.zeros((m, n))
    basis = []
    s_rem = supply.copy()
    d_rem = demand.copy()
    i = j = 0
    while True:
        moved = min(s_rem[i], d_rem[j])
        flows[i, j] += moved
        basis.append((i, j))
        s_rem[i] -= moved
        d_rem[j] -= moved
        if i == m - 1 and j == n - 1:
            break
        # advance one index per step so the basis stays a spanning tree;
        # on the last column keep descending rows (float residue can leave
        # a row not exactly exhausted)
        if j == n - 1 or (s_rem[i] <= 0.0 and i < m - 1):
            i += 1
        else:
            j += 1
    return flows, basis


def _potentials(m, n, basis, costs):
    """Dual potentials u, v with u[i] + v[j] = cost[i, j] on basic cells."""
    adj_src = [[] for _ in range(m)]
    adj_snk = [[] for _ in range(n)]
    for i, j in basis:
        adj_src[i].append(j)
        adj_snk[j].append(i)
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    stack = [(0, True)]
    while stack:
        k, is_source = stack.pop()
        if is_source:
            for j in adj_src[k]:
                if np.isnan(v[j]):
                    v[j] = costs[k, j] - u[k]
                    stack.append((j, False))
        else:
            for i in adj_snk[k]:
                if np.isnan(u[i]):
                    u[i] = costs[i, k] - v[k]
                    stack.append((i, True))
    if np.isnan(u).any() or np.isnan(v).any():
        raise RuntimeError("basis does not span the transportation network")
    return u, v


def _basis_cycle(entering, basis, m, n):
    """Cells of the unique cycle closed by ``entering``, starting with it.

    Signs alternate +, -, +, ... along the returned order.
    """
    i_star, j_star = entering
    adj = {k: [] for k in range(m + n)}  # sources 0..m-1, sinks m..m+n-1
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    # path from the entering source to the entering sink through the tree
    parent = {i_star: None}
    frontier = [i_star]
    while frontier:
        node = frontier.pop()
        if node == m + j_star:
            break
        for nxt in adj[node]:
            if nxt not in parent:
                parent[nxt] = node
                frontier.append(nxt)
    path = [m + j_star]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()  # i_star ... j_star as alternating source/sink nodes
    cells = [entering]
    for a, b in zip(path[-2::-1], path[::-1]):  # walk edges back from j_star
        cells.append((a, b - m) if a < m else (b, a - m))
    return cells


def _transport_simplex(supply, demand, costs, max_pivots: int | None = None):
    """Optimal flows for a balanced transportation problem (all masses > 0).

    Entering cell: most negative reduced cost, ties to the smallest (i, j);
    after a long degenerate run, Bland's smallest-index rule, which cannot
    cycle. Leaving cell: smallest index among the flow-limiting cells.
    """
    m, n = len(supply), len(demand)
    if m == 0 or n == 0:
        raise ValueError("transportation problem has an empty side")
    if max_pivots is None:
        max_pivots = 100 * m * n + 1000

    flows, basis = _northwest_corner(supply, demand)
    in_basis = np.zeros((m, n), dtype=bool)
    for cell in basis:
        in_basis[cell] = True
    tol = 1e-12 * (1.0 + float(np.abs(costs).max(initial=0.0)))

    degenerate_run = 0
    for _ in range(max_pivots):
        u, v = _potentials(m, n, basis, costs)
        reduced = costs - u[:, None] - v[None, :]
        reduced[in_basis] = 0.0
        if degenerate_run >= _BLAND_TRIGGER:
            candidates = np.flatnonzero(reduced.ravel() < -tol)
            if candidates.size == 0:
                break
            entering = np.unravel_index(candidates[0], reduced.shape)
        else:
            flat = int(np.argmin(reduced))
            entering = np.unravel_index(flat, reduced.shape)
            if reduced[entering] >= -tol:
                break
        entering = (int(entering[0]), int(entering[1]))

        cycle = _basis_cycle(entering, basis, m, n)
        minus = cycle[1::2]
        theta = min(flows[cell] for cell in minus)
        leaving = min(cell for cell in minus if flows[cell] == theta)
        for k, cell in enumerate(cycle):
            flows[cell] += theta if k % 2 == 0 else -theta
        flows[leaving] = 0.0
        in_basis[leaving] = False
        in_basis[entering] = True
        basis.remove(leaving)
        basis.append(entering)
        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
    else:
        raise RuntimeError("transportation simplex exceeded its pivot budget")
    return flows
