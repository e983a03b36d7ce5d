"""Matroid and group-knapsack constraints over (product, user) pairs.

All algorithms grow their solution one element at a time, so constraints
are exposed through an incremental oracle (:class:`ConstraintState`).  The
full-set checker :meth:`ConstraintSystem.is_feasible` is slow and meant
for tests and brute force.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable

MAX_ENUMERATION = 24
# slack on the unit budget so that e.g. ten costs of 0.1 still fit
BUDGET_SLACK = 1e-12


class PartitionMatroid:
    """``|S ∩ block| <= capacity[block]`` for a partition of the ground set.

    ``block_of`` maps an element to its block key; blocks missing from
    ``capacity`` are uncapacitated.
    """

    def __init__(self, block_of: Callable[[tuple], Hashable], capacity: dict, default=math.inf,
                 name="partition"):
        for b, u in list(capacity.items()) + [("default", default)]:
            if u < 0:
                raise ValueError(f"negative capacity {u} for block {b!r}")
        self.block_of = block_of
        self.capacity = dict(capacity)
        self.default = default
        self.name = name

    def cap(self, b):
        return self.capacity.get(b, self.default)

    def new_counts(self):
        return Counter()

    def can_add(self, counts, z) -> bool:
        b = self.block_of(z)
        return counts[b] < self.cap(b)

    def add(self, counts, z):
        counts[self.block_of(z)] += 1

    def remove(self, counts, z):
        counts[self.block_of(z)] -= 1

    def is_independent(self, S) -> bool:
        c = Counter(self.block_of(z) for z in set(S))
        return all(n <= self.cap(b) for b, n in c.items())


def user_matroid(capacity) -> PartitionMatroid:
    """Each user ``j`` receives at most ``capacity[j]`` products (a scalar applies to all)."""
    if isinstance(capacity, dict):
        return PartitionMatroid(lambda z: z[1], capacity, name="users")
    return PartitionMatroid(lambda z: z[1], {}, default=capacity, name="users")


def product_matroid(capacity) -> PartitionMatroid:
    """Each product ``i`` goes to at most ``capacity[i]`` users."""
    if isinstance(capacity, dict):
        return PartitionMatroid(lambda z: z[0], capacity, name="products")
    if isinstance(capacity, (list, tuple)):
        return PartitionMatroid(lambda z: z[0], dict(enumerate(capacity)), name="products")
    return PartitionMatroid(lambda z: z[0], {}, default=capacity, name="products")


class LaminarMatroid:
    """Capacities on a laminar family of element groups.

    ``groups`` is a list of ``(elements, capacity)``; any two groups must be
    nested or disjoint.
    """

    def __init__(self, groups, name="laminar"):
        self.groups = [(frozenset(g), c) for g, c in groups]
        for g, c in self.groups:
            if c < 0:
                raise ValueError(f"negative group capacity {c}")
        for a in range(len(self.groups)):
            for b in range(a + 1, len(self.groups)):
                ga, gb = self.groups[a][0], self.groups[b][0]
                if ga & gb and not (ga <= gb or gb <= ga):
                    raise ValueError(f"groups {a} and {b} properly intersect; family is not laminar")
        self._member = {}
        for k, (g, _) in enumerate(self.groups):
            for z in g:
                self._member.setdefault(z, []).append(k)
        self.name = name

    def new_counts(self):
        return [0] * len(self.groups)

    def can_add(self, counts, z) -> bool:
        return all(counts[k] < self.groups[k][1] for k in self._member.get(z, ()))

    def add(self, counts, z):
        for k in self._member.get(z, ()):
            counts[k] += 1

    def remove(self, counts, z):
        for k in self._member.get(z, ()):
            counts[k] -= 1

    def is_independent(self, S) -> bool:
        S = set(S)
        return all(len(S & g) <= c for g, c in self.groups)


def community_matroid(ground, user_groups) -> LaminarMatroid:
    """Laminar matroid from a community tree over users.

    ``user_groups`` is a list of ``(users, limit)``; a community caps the
    number of (product, user) pairs whose user lies in it.  A root without
    a limit is simply omitted.
    """
    groups = []
    for users, limit in user_groups:
        users = set(users)
        groups.append(({z for z in ground if z[1] in users}, limit))
    return LaminarMatroid(groups, name="communities")


@dataclass
class GroupKnapsack:
    """Normalized per-product budgets: ``c(S ∩ Z_i*) <= 1`` for every product."""

    costs: dict
    dropped: list = field(default_factory=list)

    def __post_init__(self):
        for z, c in self.costs.items():
            if not 0 < c <= 1:
                raise ValueError(f"normalized cost of {z} must lie in (0, 1], got {c}")

    @property
    def products(self):
        return sorted({z[0] for z in self.costs})

    def cost(self, z) -> float:
        return self.costs[z]


def normalize_costs(raw_costs: dict, budgets) -> GroupKnapsack:
    """Divide each cost by its product's budget and drop pairs costing more than the budget."""
    costs, dropped = {}, []
    for z, c in sorted(raw_costs.items()):
        B = budgets[z[0]]
        if not c > 0:
            raise ValueError(f"cost of {z} must be positive, got {c}")
        if not B > 0:
            raise ValueError(f"budget of product {z[0]} must be positive, got {B}")
        c = c / B
        if c > 1:
            dropped.append(z)
        else:
            costs[z] = c
    return GroupKnapsack(costs, dropped)


def uniform_capacity(cost: float, budget: float = 1.0) -> int:
    """Equivalent per-product cardinality ``floor(B / c)`` under uniform cost."""
    return math.floor(budget / cost)


@dataclass(frozen=True)
class Blocked:
    reason: str  # "matroid" or "knapsack"
    index: int   # matroid position or product id


class ConstraintSystem:
    """Intersection of matroids plus optional group-knapsack budgets.

    ``ground`` is the ground set; elements dropped by cost normalization
    are removed from it.
    """

    def __init__(self, ground, matroids, knapsack: GroupKnapsack | None = None):
        if not matroids:
            raise ValueError("at least one matroid is required")
        self.matroids = list(matroids)
        self.knapsack = knapsack
        ground = sorted(set(ground))
        if knapsack is not None:
            missing = [z for z in ground if z not in knapsack.costs and z not in knapsack.dropped]
            if missing:
                raise ValueError(f"no cost given for {missing[:3]}")
            ground = [z for z in ground if z in knapsack.costs]
        self.ground = ground

    @property
    def P(self) -> int:
        return len(self.matroids)

    @property
    def k(self) -> int:
        """Knapsack groups that still contain at least one element."""
        if self.knapsack is None:
            return 0
        return len({z[0] for z in self.ground})

    def cost(self, z) -> float:
        return 0.0 if self.knapsack is None else self.knapsack.costs[z]

    def new_state(self) -> "ConstraintState":
        return ConstraintState(self)

    def is_feasible(self, S) -> bool:
        S = set(S)
        if not S <= set(self.ground):
            return False
        if not all(m.is_independent(S) for m in self.matroids):
            return False
        if self.knapsack is not None:
            per = {}
            for z in S:
                per.setdefault(z[0], []).append(self.knapsack.costs[z])
            if any(math.fsum(c) > 1 + BUDGET_SLACK for c in per.values()):
                return False
        return True

    def enumerate_feasible(self, ground=None):
        """Yield every feasible subset (as a tuple) by depth-first search.

        Heredity makes pruning at the first infeasible extension sound.
        """
        ground = list(self.ground if ground is None else ground)
        if len(ground) > MAX_ENUMERATION:
            raise ValueError(f"ground set of {len(ground)} elements exceeds the enumeration bound {MAX_ENUMERATION}")
        state = self.new_state()
        chosen = []

        def walk(start):
            yield tuple(chosen)
            for e in range(start, len(ground)):
                z = ground[e]
                if state.check(z, record=False) is None:
                    state.add(z)
                    chosen.append(z)
                    yield from walk(e + 1)
                    chosen.pop()
                    state.remove(z)

        yield from walk(0)


class ConstraintState:
    """Incremental counters for one growing solution."""

    def __init__(self, system: ConstraintSystem):
        self.system = system
        self.counts = [m.new_counts() for m in system.matroids]
        self.spent = {}
        self.selected = set()
        self.active = set()

    def matroid_ok(self, z) -> bool:
        return all(m.can_add(c, z) for m, c in zip(self.system.matroids, self.counts))

    def knapsack_ok(self, z) -> bool:
        ks = self.system.knapsack
        return ks is None or math.fsum([*self.spent.get(z[0], ()), ks.costs[z]]) <= 1 + BUDGET_SLACK

    def spend(self, product) -> float:
        return math.fsum(self.spent.get(product, ()))

    def check(self, z, record=True) -> Blocked | None:
        """``None`` if ``z`` can be added, otherwise the blocking constraint.

        Matroids are checked first; a knapsack block marks the product
        active unless ``record`` is false.
        """
        for k, (m, c) in enumerate(zip(self.system.matroids, self.counts)):
            if not m.can_add(c, z):
                return Blocked("matroid", k)
        if not self.knapsack_ok(z):
            if record:
                self.active.add(z[0])
            return Blocked("knapsack", z[0])
        return None

    def can_add(self, z) -> bool:
        return self.check(z) is None

    def add(self, z):
        for m, c in zip(self.system.matroids, self.counts):
            m.add(c, z)
        if self.system.knapsack is not None:
            self.spent.setdefault(z[0], []).append(self.system.knapsack.costs[z])
        self.selected.add(z)

    def remove(self, z):
        for m, c in zip(self.system.matroids, self.counts):
            m.remove(c, z)
        if self.system.knapsack is not None:
            self.spent[z[0]].remove(self.system.knapsack.costs[z])
        self.selected.discard(z)

    @property
    def active_knapsack_count(self) -> int:
        return len(self.active)


def active_knapsack_count(state: ConstraintState) -> int:
    return state.active_knapsack_count
