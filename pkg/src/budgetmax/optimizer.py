"""Allocation algorithms: adaptive-threshold greedy, density enumeration, baselines.

The adaptive-threshold greedy scans the ground set once per threshold
``w_t = d_rho / (1 + delta)^t`` and adds every feasible element whose
marginal gain clears both ``w_t`` and the density gate ``c(z) * rho``.
Two shortcuts keep it cheap without changing which elements are picked:

* a gain is only recomputed when its product's source set changed since
  the last evaluation (the objective is separable across products);
* an element whose last known gain is below the current threshold is
  skipped, since gains can only shrink as the solution grows.

Elements that fail a matroid, the knapsack or the density gate are
retired for good; each of those conditions is permanent once it holds.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .constraints import ConstraintSystem
from .objective import Objective


@dataclass
class RunReport:
    algorithm: str
    selected: list
    value: float
    evaluations: int = 0
    k_a: int = 0
    wall_time: float = 0.0
    rho: float | None = None
    delta: float | None = None
    thresholds: list = field(default_factory=list)
    per_threshold: list = field(default_factory=list)
    picks: list = field(default_factory=list)  # (gain, threshold, density gate) at selection
    blocking: list | None = None
    runs: list = field(default_factory=list)

    def to_dict(self, timing=True) -> dict:
        d = asdict(self)
        d["selected"] = [list(z) for z in self.selected]
        if not timing:
            d.pop("wall_time")
        return d


def threshold_schedule(d_rho: float, d: float, delta: float, n: int) -> list[float]:
    """``d_rho / (1+delta)^t`` down to the first value <= ``delta * d / n``, then 0."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    floor = delta * d / max(n, 1)
    ws = []
    t = 0
    while True:
        w = d_rho / (1.0 + delta) ** t
        ws.append(w)
        if w <= floor:
            break
        t += 1
    ws.append(0.0)
    return ws


def rho_grid(d: float, P: int, k: int, n: int, delta: float) -> list[float]:
    """Geometric density grid from ``2d/(P+2k+1)`` up to ``2nd/(P+2k+1)``.

    Points beyond the upper endpoint are not included.
    """
    if d <= 0:
        return [0.0]
    base = 2.0 * d / (P + 2 * k + 1)
    top = n * base
    grid = []
    t = 0
    while True:
        rho = base * (1.0 + delta) ** t
        if rho > top * (1 + 1e-12):
            break
        grid.append(rho)
        t += 1
    return grid


def _singletons(objective: Objective, ground):
    return np.array([objective.singleton(z) for z in ground], dtype=float)


def blocking_partition(order, reference, constraints: ConstraintSystem) -> list[int]:
    """Sizes of ``C_t``: reference elements outside the solution that become
    infeasible exactly when the ``t``-th greedy element is added."""
    chosen = set(order)
    rest = [z for z in reference if z not in chosen]
    sizes = []
    for t in range(1, len(order) + 1):
        before, after = list(order[:t - 1]), list(order[:t])
        sizes.append(sum(1 for z in rest
                         if constraints.is_feasible(before + [z])
                         and not constraints.is_feasible(after + [z])))
    return sizes


def greedy_fixed_density(objective: Objective, constraints: ConstraintSystem, delta: float,
                         rho: float = 0.0, *, singles=None, d=None, reference=None,
                         algorithm="adaptive-threshold") -> RunReport:
    """Adaptive-threshold greedy for one density threshold ``rho``.

    Parameters
    ----------
    singles, d : optional
        Precomputed singleton values over ``constraints.ground`` and their
        maximum, shared across calls by :func:`density_enumeration`.
    reference : iterable, optional
        A reference solution (typically the optimum); when given, the report
        carries the blocking-partition sizes ``|C_t|``.
    """
    start = time.perf_counter()
    ground = constraints.ground
    n = len(ground)
    evals = 0
    if singles is None:
        singles = _singletons(objective, ground)
        evals += n
    if d is None:
        d = float(singles.max()) if n else 0.0
    costs = np.array([constraints.cost(z) for z in ground], dtype=float)
    qualifying = singles >= costs * rho
    report = RunReport(algorithm, [], 0.0, rho=rho, delta=delta)
    if not qualifying.any():
        report.evaluations = evals
        report.wall_time = time.perf_counter() - start
        return report
    d_rho = float(singles[qualifying].max())
    thresholds = threshold_schedule(d_rho, d, delta, n)

    state = objective.new_state()
    cstate = constraints.new_state()
    prod = np.array([z[0] for z in ground], dtype=np.int64)
    gates = costs * rho
    bound = singles.copy()
    seen_version = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    per_threshold, picks = [], []

    for w in thresholds:
        added = 0
        for e in np.flatnonzero(alive & (bound >= w)):
            z = ground[e]
            if not cstate.matroid_ok(z):
                alive[e] = False
                continue
            i = prod[e]
            if seen_version[e] != state.version[i]:
                bound[e] = objective.gain(state, z)
                seen_version[e] = state.version[i]
                evals += 1
            g = bound[e]
            if g < gates[e]:
                alive[e] = False
                continue
            if g < w:
                continue
            if cstate.check(z) is not None:
                alive[e] = False
                continue
            objective.commit(state, z)
            cstate.add(z)
            alive[e] = False
            picks.append((float(g), float(w), float(gates[e])))
            added += 1
        per_threshold.append(added)

    report.selected = list(state.selected)
    report.value = objective.evaluate(report.selected)
    report.evaluations = evals
    report.k_a = cstate.active_knapsack_count
    report.thresholds = thresholds
    report.per_threshold = per_threshold
    report.picks = picks
    if reference is not None:
        report.blocking = blocking_partition(report.selected, list(reference), constraints)
    report.wall_time = time.perf_counter() - start
    return report


def uniform_cost_greedy(objective: Objective, constraints: ConstraintSystem, delta: float = 0.01,
                        reference=None) -> RunReport:
    """Adaptive-threshold greedy with no density gate (``rho = 0``)."""
    return greedy_fixed_density(objective, constraints, delta, 0.0, reference=reference,
                                algorithm="budgetmax")


def density_enumeration(objective: Objective, constraints: ConstraintSystem,
                        delta: float) -> RunReport:
    """Run the fixed-density greedy over a geometric grid of ``rho`` and keep the best."""
    if constraints.knapsack is None:
        raise ValueError("density enumeration needs group-knapsack constraints")
    start = time.perf_counter()
    ground = constraints.ground
    singles = _singletons(objective, ground)
    d = float(singles.max()) if len(ground) else 0.0
    grid = rho_grid(d, constraints.P, constraints.k, len(ground), delta)
    best, runs, evals = None, [], len(ground)
    for rho in grid:
        rep = greedy_fixed_density(objective, constraints, delta, rho, singles=singles, d=d,
                                   algorithm="budgetmax")
        evals += rep.evaluations
        runs.append({"rho": rho, "value": rep.value, "k_a": rep.k_a, "size": len(rep.selected)})
        if best is None or rep.value > best.value:
            best = rep
    best.runs = runs
    best.evaluations = evals
    best.wall_time = time.perf_counter() - start
    return best


def lazy_greedy(objective: Objective, constraints: ConstraintSystem) -> RunReport:
    """Classic greedy with stale upper bounds in a max-heap (CELF-style).

    Picks the feasible element of largest marginal gain until no feasible
    element has positive gain; ties go to the lower (product, user).
    """
    start = time.perf_counter()
    ground = constraints.ground
    singles = _singletons(objective, ground)
    evals = len(ground)
    state = objective.new_state()
    cstate = constraints.new_state()
    heap = [(-float(g), e, 0) for e, g in enumerate(singles)]
    heapq.heapify(heap)
    picks = []
    while heap:
        neg, e, ver = heapq.heappop(heap)
        z = ground[e]
        if cstate.check(z) is not None:
            continue
        if ver == state.version[z[0]]:
            if -neg <= 0:
                break
            objective.commit(state, z)
            cstate.add(z)
            picks.append((-neg, None, 0.0))
        else:
            g = objective.gain(state, z)
            evals += 1
            heapq.heappush(heap, (-g, e, state.version[z[0]]))
    return RunReport("lazy", list(state.selected), objective.evaluate(state.selected),
                     evaluations=evals, k_a=cstate.active_knapsack_count,
                     wall_time=time.perf_counter() - start, picks=picks)


def _fill(objective, constraints, order, algorithm, start) -> RunReport:
    cstate = constraints.new_state()
    chosen = []
    for z in order:
        if cstate.check(z) is None:
            cstate.add(z)
            chosen.append(z)
    return RunReport(algorithm, chosen, objective.evaluate(chosen), k_a=cstate.active_knapsack_count,
                     wall_time=time.perf_counter() - start)


def _degree_scores(constraints, degrees, use_costs):
    scores = {}
    for z in constraints.ground:
        deg = float(degrees[z[0]][z[1]])
        scores[z] = deg / constraints.cost(z) if use_costs else deg
    return scores


def greedy_degree(objective: Objective, constraints: ConstraintSystem, degrees,
                  use_costs: bool = False) -> RunReport:
    """Add pairs in descending degree (or degree/cost) order, skipping infeasible ones.

    ``degrees[i][j]`` is the degree of user ``j`` in product ``i``'s network.
    """
    start = time.perf_counter()
    scores = _degree_scores(constraints, degrees, use_costs)
    order = sorted(constraints.ground, key=lambda z: (-scores[z], z))
    return _fill(objective, constraints, order, "degree", start)


def greedy_degree_local(objective: Objective, constraints: ConstraintSystem, degrees,
                        groups, use_costs: bool = True) -> RunReport:
    """Degree/cost ordering within each user group, taking turns across groups.

    Each turn a group adds its next feasible pair; users outside every
    group form one extra group at the end.
    """
    start = time.perf_counter()
    scores = _degree_scores(constraints, degrees, use_costs)
    where = {}
    for g, users in enumerate(groups):
        for j in users:
            where.setdefault(int(j), g)
    queues = [[] for _ in range(len(groups) + 1)]
    for z in constraints.ground:
        queues[where.get(z[1], len(groups))].append(z)
    queues = [sorted(q, key=lambda z: (-scores[z], z)) for q in queues if q]
    heads = [0] * len(queues)
    cstate = constraints.new_state()
    chosen = []
    live = True
    while live:
        live = False
        for q, queue in enumerate(queues):
            while heads[q] < len(queue):
                z = queue[heads[q]]
                heads[q] += 1
                if cstate.check(z) is None:
                    cstate.add(z)
                    chosen.append(z)
                    break
            live |= heads[q] < len(queue)
    return RunReport("degree-local", chosen, objective.evaluate(chosen),
                     k_a=cstate.active_knapsack_count, wall_time=time.perf_counter() - start)


def random_allocation(objective: Objective, constraints: ConstraintSystem, seed=0) -> RunReport:
    """Feasibility-checked adds along a uniformly random permutation of the ground set."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    ground = constraints.ground
    order = [ground[e] for e in rng.permutation(len(ground))]
    return _fill(objective, constraints, order, "random", start)


def approximation_floor_uniform(delta: float) -> float:
    """Guaranteed fraction of the optimum for the uniform-cost greedy."""
    return (1.0 - 2.0 * delta) / 3.0


def approximation_floor_knapsack(k_a: int, n_products: int, delta: float) -> float:
    """Guaranteed fraction of the optimum for density enumeration."""
    return max(k_a, 1) / ((2 * n_products + 2) * (1.0 + 3.0 * delta))


def approximation_floor_matroids(P: int, delta: float) -> float:
    """Guaranteed fraction for ``P`` matroids, no knapsacks, exact evaluation."""
    return 1.0 / ((1.0 + 2.0 * delta) * (P + 1))


__all__ = [
    "RunReport", "threshold_schedule", "rho_grid", "blocking_partition",
    "greedy_fixed_density", "uniform_cost_greedy", "density_enumeration", "lazy_greedy",
    "greedy_degree", "greedy_degree_local", "random_allocation",
    "approximation_floor_uniform", "approximation_floor_knapsack", "approximation_floor_matroids",
]

