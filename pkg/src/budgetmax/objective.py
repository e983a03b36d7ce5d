"""Overall influence over the ground set of (product, user) pairs.

``f(S) = sum_i a_i * sigma_i(R_i)`` where ``R_i`` holds the users assigned
to product ``i``.  The value is a weighted sum of per-product coverage
functions, so a gain for ``(i, j)`` only touches product ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .influence import CoverageIndex, CoverageState, coverage_count


class Objective:
    """Weighted multi-product influence over per-product coverage indices.

    Parameters
    ----------
    indices : list of CoverageIndex
        One index per product, in product order, each built at that
        product's horizon.
    weights : list of float, optional
        Positive product weights; defaults to all ones.
    """

    def __init__(self, indices: list[CoverageIndex], weights=None):
        self.indices = list(indices)
        if weights is None:
            weights = [1.0] * len(self.indices)
        if len(weights) != len(self.indices):
            raise ValueError("one weight per product required")
        if any(not w > 0 for w in weights):
            raise ValueError("product weights must be positive")
        self.weights = [float(w) for w in weights]

    @property
    def n_products(self) -> int:
        return len(self.indices)

    @property
    def horizons(self):
        return [ix.horizon for ix in self.indices]

    def ground_set(self):
        """All ``(product, user)`` pairs in ascending order."""
        return [(i, int(j)) for i, ix in enumerate(self.indices) for j in ix.candidates]

    def new_state(self) -> "ObjectiveState":
        return ObjectiveState([CoverageState(ix) for ix in self.indices])

    def gain(self, state: "ObjectiveState", z) -> float:
        i, j = z
        if z in state.selected_set:
            return 0.0
        cs = state.products[i]
        return self.weights[i] * cs.gain_count(j) / cs.index.r

    def commit(self, state: "ObjectiveState", z) -> "ObjectiveState":
        i, j = z
        if z in state.selected_set:
            return state
        state.products[i].commit(j)
        state.selected.append(z)
        state.selected_set.add(z)
        state.version[i] += 1
        state.cached = self._weighted(state.products)
        return state

    def value(self, state: "ObjectiveState") -> float:
        return state.cached

    def singleton(self, z) -> float:
        i, j = z
        ix = self.indices[i]
        return self.weights[i] * len(ix.reach_flat(j)) / ix.r

    def evaluate(self, S) -> float:
        """Value of ``S`` recomputed from scratch, without incremental state."""
        per = [[] for _ in self.indices]
        for i, j in S:
            per[i].append(j)
        total = 0.0
        for i, ix in enumerate(self.indices):
            total += self.weights[i] * coverage_count(ix, set(per[i])) / ix.r
        return total

    def product_value(self, i: int, R) -> float:
        ix = self.indices[i]
        return self.weights[i] * coverage_count(ix, R) / ix.r

    def _weighted(self, products) -> float:
        total = 0.0
        for w, cs in zip(self.weights, products):
            total += w * cs.count / cs.index.r
        return total


@dataclass
class ObjectiveState:
    products: list
    selected: list = field(default_factory=list)
    selected_set: set = field(default_factory=set)
    version: list = None
    cached: float = 0.0

    def __post_init__(self):
        if self.version is None:
            self.version = [0] * len(self.products)

    def sources(self, i: int) -> list:
        return list(self.products[i].sources)

    def copy(self) -> "ObjectiveState":
        return ObjectiveState([p.copy() for p in self.products], list(self.selected),
                              set(self.selected_set), list(self.version), self.cached)
