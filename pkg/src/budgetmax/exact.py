"""Ground truth for small instances.

Closed-form influence for deterministic networks and exponential paths,
and exhaustive search for the constrained optimum.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .constraints import MAX_ENUMERATION, ConstraintSystem
from .diffusion import Deterministic, DiffusionNetwork, Exponential, earliest_arrival
from .objective import Objective

RATE_TIE = 1e-9


def exact_influence_deterministic(net: DiffusionNetwork, R, horizon: float) -> int:
    """Nodes reached within ``horizon`` when every delay is fixed."""
    if not all(isinstance(tf, Deterministic) for _, _, tf in net.edges):
        raise ValueError("all edges must be Deterministic")
    delays = [tf.delay for _, _, tf in net.edges]
    return int(np.count_nonzero(earliest_arrival(net, delays, R, horizon) <= horizon))


def erlang_cdf(m: int, rate: float, t: float) -> float:
    if t <= 0:
        return 0.0
    x = rate * t
    term, tail = 1.0, 1.0
    for k in range(1, m):
        term *= x / k
        tail += term
    return 1.0 - math.exp(-x) * tail


def hypoexponential_cdf(rates, t: float) -> float:
    """``P(X_1 + ... + X_m <= t)`` for independent ``X_k ~ Exp(rates[k])``.

    Partial fractions when all rates are distinct, the Erlang formula when
    they all coincide (within ``RATE_TIE``), and the matrix exponential of
    the phase-type generator for mixed cases.
    """
    rates = [float(x) for x in rates]
    m = len(rates)
    if m == 0:
        return 1.0
    if t <= 0:
        return 0.0
    if max(rates) - min(rates) <= RATE_TIE:
        return erlang_cdf(m, rates[0], t)
    distinct = all(abs(a - b) > RATE_TIE for k, a in enumerate(rates) for b in rates[k + 1:])
    if distinct:
        survival = 0.0
        for k, lk in enumerate(rates):
            coef = 1.0
            for q, lq in enumerate(rates):
                if q != k:
                    coef *= lq / (lq - lk)
            survival += coef * math.exp(-lk * t)
        return 1.0 - survival
    return phase_type_cdf(rates, t)


def phase_type_cdf(rates, t: float) -> float:
    """Same quantity via ``expm`` of the sub-generator; valid for any rates."""
    m = len(rates)
    Q = np.zeros((m, m))
    for k, lk in enumerate(rates):
        Q[k, k] = -lk
        if k + 1 < m:
            Q[k, k + 1] = lk
    return float(1.0 - expm(Q * t)[0].sum())


def path_rates(net: DiffusionNetwork) -> list[float]:
    """Rates along a directed path 0 -> 1 -> ... in traversal order from its head.

    Raises ``ValueError`` unless the network is a single directed path
    covering every node with Exponential edges.
    """
    n = net.node_count
    if net.edge_count != n - 1:
        raise ValueError("not a path: edge count must be node count - 1")
    nxt, indeg = {}, [0] * n
    for u, v, tf in net.edges:
        if not isinstance(tf, Exponential):
            raise ValueError("all path edges must be Exponential")
        if u in nxt:
            raise ValueError("not a path: node with out-degree > 1")
        nxt[u] = (v, tf.rate)
        indeg[v] += 1
    heads = [u for u in range(n) if indeg[u] == 0]
    if len(heads) != 1 or max(indeg, default=0) > 1:
        raise ValueError("not a path: needs exactly one head and in-degrees <= 1")
    rates, u, seen = [], heads[0], 1
    while u in nxt:
        u, rate = nxt[u]
        rates.append(rate)
        seen += 1
    if seen != n:
        raise ValueError("not a path: disconnected")
    return rates


def exponential_path_influence(rates, horizon: float) -> float:
    """Expected reach of the head of an exponential path within ``horizon``."""
    return 1.0 + sum(hypoexponential_cdf(rates[:m], horizon) for m in range(1, len(rates) + 1))


def exact_influence_exponential_path(net: DiffusionNetwork, horizon: float) -> float:
    return exponential_path_influence(path_rates(net), horizon)


def brute_force_optimum(objective: Objective, constraints: ConstraintSystem, ground=None):
    """Best feasible set by exhaustive search.

    Values use the same estimator as the greedy algorithms, recomputed per
    product and memoized on the product's source set.

    Returns
    -------
    (float, list)
        Optimal value and one optimal set (the first found in DFS order).
    """
    ground = list(constraints.ground if ground is None else ground)
    if len(ground) > MAX_ENUMERATION:
        raise ValueError(f"ground set of {len(ground)} exceeds the bound {MAX_ENUMERATION}")
    memo = [{} for _ in range(objective.n_products)]

    def product_value(i, R):
        key = frozenset(R)
        if key not in memo[i]:
            memo[i][key] = objective.product_value(i, key)
        return memo[i][key]

    best_value, best_set = -1.0, []
    for S in constraints.enumerate_feasible(ground):
        per = [[] for _ in range(objective.n_products)]
        for i, j in S:
            per[i].append(j)
        total = 0.0
        for i in range(objective.n_products):
            total += product_value(i, per[i])
        if total > best_value:
            best_value, best_set = total, sorted(S)
    return best_value, best_set
