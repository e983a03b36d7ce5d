"""Synthetic experiment assets: Kronecker networks, Weibull dynamics, costs, budgets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionNetwork, Exponential, Weibull

SEEDS = {
    "core-periphery": ((0.9, 0.5), (0.5, 0.3)),
    "random": ((0.5, 0.5), (0.5, 0.5)),
    "hierarchical": ((0.9, 0.1), (0.1, 0.9)),
}
NETWORK_TYPES = tuple(SEEDS)


@dataclass(frozen=True)
class KroneckerSpec:
    seed: tuple
    power: int
    kind: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.seed, dtype=float)
        if m.shape != (2, 2) or (m < 0).any() or (m > 1).any():
            raise ValueError("seed matrix must be 2x2 with entries in [0, 1]")
        if self.power < 1:
            raise ValueError("power must be >= 1")

    @classmethod
    def of(cls, kind: str, power: int) -> "KroneckerSpec":
        try:
            return cls(SEEDS[kind], power, kind)
        except KeyError:
            raise ValueError(f"unknown network type {kind!r}; choose from {NETWORK_TYPES}") from None

    @property
    def node_count(self) -> int:
        return 2 ** self.power

    @property
    def expected_edges(self) -> float:
        """Expected edge count excluding self-loops."""
        m = np.asarray(self.seed, dtype=float)
        return float(m.sum() ** self.power - np.trace(m) ** self.power)


def kronecker_probability(spec: KroneckerSpec, u: int, v: int) -> float:
    """Product over bit positions of ``seed[bit(u)][bit(v)]``."""
    p = 1.0
    for k in range(spec.power):
        p *= spec.seed[(u >> k) & 1][(v >> k) & 1]
    return p


def _kron_power(m, power):
    out = np.ones((1, 1))
    for _ in range(power):
        out = np.kron(out, m)
    return out


def sample_kronecker_graph(spec: KroneckerSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Include each ordered pair ``u != v`` independently with its Kronecker probability.

    The probability matrix is assembled in row blocks (high bits times a
    precomputed low-bit block) so it is never held in full.
    """
    m = np.asarray(spec.seed, dtype=float)
    low_bits = min(spec.power, 8)
    high_bits = spec.power - low_bits
    low = _kron_power(m, low_bits)
    high = _kron_power(m, high_bits)
    nl = low.shape[0]
    edges = []
    for hu in range(high.shape[0]):
        block = np.kron(high[hu][None, :], low)  # rows hu*nl .. hu*nl+nl-1, all columns
        hit = rng.random(block.shape) < block
        rows, cols = np.nonzero(hit)
        rows = rows + hu * nl
        keep = rows != cols
        edges.extend(zip(rows[keep].tolist(), cols[keep].tolist()))
    return edges


def assign_weibull(edges, rng: np.random.Generator, low=1.0, high=10.0):
    """Weibull shape and scale drawn independently, uniform on ``[low, high]``."""
    params = rng.uniform(low, high, size=(len(edges), 2))
    return [(u, v, Weibull(float(a), float(b))) for (u, v), (a, b) in zip(edges, params)]


def kronecker_network(kind: str, power: int, rng: np.random.Generator, product_id=0) -> DiffusionNetwork:
    spec = KroneckerSpec.of(kind, power)
    edges = sample_kronecker_graph(spec, rng)
    return DiffusionNetwork(spec.node_count, assign_weibull(edges, rng), product_id=product_id)


def generate_costs(degrees, exponent: float = 3.0) -> np.ndarray:
    """``(d + 1)^-n`` rescaled so the largest cost is 1.

    The +1 keeps isolated users finite.
    """
    raw = (np.asarray(degrees, dtype=float) + 1.0) ** (-exponent)
    return raw / raw.max()


def generate_budgets(n_products: int, rng: np.random.Generator) -> np.ndarray:
    """Integer base in [1, 10] plus a uniform adjustment in [0, 1)."""
    return rng.integers(1, 11, size=n_products) + rng.random(n_products)


def random_small_network(n: int, edge_prob: float, rng: np.random.Generator, product_id=0,
                         rate_range=(0.5, 2.0)) -> DiffusionNetwork:
    """Erdős–Rényi digraph with exponential delays, for brute-forceable instances."""
    hit = rng.random((n, n)) < edge_prob
    np.fill_diagonal(hit, False)
    u, v = np.nonzero(hit)
    rates = rng.uniform(*rate_range, size=len(u))
    edges = [(int(a), int(b), Exponential(float(c))) for a, b, c in zip(u, v, rates)]
    return DiffusionNetwork(n, edges, product_id=product_id)
