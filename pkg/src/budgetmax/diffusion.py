"""Continuous-time independent cascade networks.

Each product spreads over its own directed network.  Every edge carries a
transmission-time distribution; a cascade draws one delay per edge and a
node's infection time is its earliest arrival from the source set.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    def quantile(self, u):
        return -np.log1p(-u) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"weibull parameters must be positive, got {self.shape}, {self.scale}")

    def quantile(self, u):
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    @property
    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


@dataclass(frozen=True)
class Deterministic:
    delay: float

    def __post_init__(self):
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise ValueError(f"deterministic delay must be >= 0, got {self.delay}")

    def quantile(self, u):
        return np.full(np.shape(u), self.delay, dtype=float) if np.ndim(u) else self.delay

    @property
    def mean(self):
        return self.delay


TransmissionFunction = Exponential | Weibull | Deterministic

_KINDS = {"exp": Exponential, "weibull": Weibull, "det": Deterministic}
_KIND_NAMES = {Exponential: "exp", Weibull: "weibull", Deterministic: "det"}


def sample_delay(tf: TransmissionFunction, rng: np.random.Generator) -> float:
    """Draw one transmission time by inverse-CDF transform of a uniform."""
    return float(tf.quantile(rng.random()))


@dataclass
class DiffusionNetwork:
    """Directed network of one product; edges are ``(src, dst, tf)`` triples."""

    node_count: int
    edges: list = field(default_factory=list)
    product_id: int = 0

    def __post_init__(self):
        self.edges = [(int(u), int(v), tf) for u, v, tf in self.edges]
        seen = set()
        for u, v, tf in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.node_count})")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if type(tf) not in _KIND_NAMES:
                raise TypeError(f"unknown transmission function {tf!r}")
            seen.add((u, v))
        self._arrays = None
        self._adj = None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def arrays(self):
        """Edge endpoints as int arrays, in edge order."""
        if self._arrays is None:
            src = np.fromiter((e[0] for e in self.edges), dtype=np.int64, count=len(self.edges))
            dst = np.fromiter((e[1] for e in self.edges), dtype=np.int64, count=len(self.edges))
            self._arrays = (src, dst)
        return self._arrays

    def out_neighbors(self):
        """Adjacency list ``node -> [(edge index, dst), ...]``."""
        if self._adj is None:
            adj = [[] for _ in range(self.node_count)]
            for k, (u, v, _) in enumerate(self.edges):
                adj[u].append((k, v))
            self._adj = adj
        return self._adj

    def out_degrees(self) -> np.ndarray:
        src, _ = self.arrays()
        return np.bincount(src, minlength=self.node_count)

    def quantiles(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms of shape ``(..., edge_count)`` to delays, edge by edge.

        Edges are grouped by distribution family so the transform is
        vectorized; the result does not depend on the grouping.
        """
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        groups = self._param_groups()
        if "exp" in groups:
            idx, rate = groups["exp"]
            out[..., idx] = -np.log1p(-u[..., idx]) / rate
        if "weibull" in groups:
            idx, (shape, scale) = groups["weibull"]
            out[..., idx] = scale * (-np.log1p(-u[..., idx])) ** (1.0 / shape)
        if "det" in groups:
            idx, delay = groups["det"]
            out[..., idx] = delay
        return out

    def _param_groups(self):
        if getattr(self, "_groups", None) is None:
            buckets = {}
            for k, (_, _, tf) in enumerate(self.edges):
                buckets.setdefault(_KIND_NAMES[type(tf)], []).append(k)
            groups = {}
            for kind, idx in buckets.items():
                idx = np.asarray(idx, dtype=np.int64)
                tfs = [self.edges[k][2] for k in idx]
                if kind == "exp":
                    groups[kind] = (idx, np.array([t.rate for t in tfs]))
                elif kind == "weibull":
                    groups[kind] = (idx, (np.array([t.shape for t in tfs]), np.array([t.scale for t in tfs])))
                else:
                    groups[kind] = (idx, np.array([t.delay for t in tfs]))
            self._groups = groups
        return self._groups

    def sample_delays(self, rng: np.random.Generator) -> np.ndarray:
        """One delay per edge, drawn from a single uniform per edge."""
        return self.quantiles(rng.random(self.edge_count))

    def content_hash(self) -> str:
        import hashlib

        return hashlib.sha256(format_network(self).encode()).hexdigest()


@dataclass
class CascadeOutcome:
    infection_time: np.ndarray

    def infected(self, horizon: float = math.inf) -> np.ndarray:
        return np.flatnonzero(self.infection_time <= horizon)


def earliest_arrival(net: DiffusionNetwork, delays: Sequence[float], sources: Iterable[int],
                     horizon: float) -> np.ndarray:
    """Multi-source shortest path over sampled delays, truncated at ``horizon``.

    Labels above the horizon are never expanded and are reported as +inf.
    """
    times = np.full(net.node_count, math.inf)
    heap = []
    for s in set(sources):
        if not 0 <= s < net.node_count:
            raise ValueError(f"source {s} is not a node")
        times[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    adj = net.out_neighbors()
    done = np.zeros(net.node_count, dtype=bool)
    while heap:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for k, v in adj[u]:
            cand = t + delays[k]
            if cand <= horizon and cand < times[v]:
                times[v] = cand
                heapq.heappush(heap, (cand, v))
    return times


def sample_cascade(net: DiffusionNetwork, sources: Iterable[int], horizon: float,
                   rng: np.random.Generator) -> CascadeOutcome:
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    delays = net.sample_delays(rng)
    return CascadeOutcome(earliest_arrival(net, delays, sources, horizon))


# -- edge-list file format ---------------------------------------------------
#
#   nodes N product P
#   src dst kind p1 [p2]
#
# kind is one of exp (p1 = rate), weibull (p1 = shape, p2 = scale) or
# det (p1 = delay).  Blank lines and lines starting with '#' are ignored.

def _tf_fields(tf) -> str:
    if isinstance(tf, Exponential):
        return f"exp {tf.rate!r}"
    if isinstance(tf, Weibull):
        return f"weibull {tf.shape!r} {tf.scale!r}"
    return f"det {tf.delay!r}"


def format_network(net: DiffusionNetwork) -> str:
    lines = [f"nodes {net.node_count} product {net.product_id}"]
    lines += [f"{u} {v} {_tf_fields(tf)}" for u, v, tf in net.edges]
    return "\n".join(lines) + "\n"


def write_network(net: DiffusionNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_network(net))


def parse_network(text: str) -> DiffusionNetwork:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.partition("#")[0].strip()
        if not line:
            continue
        tok = line.split()
        if header is None:
            if len(tok) != 4 or tok[0] != "nodes" or tok[2] != "product":
                raise ValueError(f"line {lineno}: expected 'nodes N product P' header")
            header = (int(tok[1]), int(tok[3]))
            continue
        try:
            kind = tok[2]
            params = [float(x) for x in tok[3:]]
            if kind not in _KINDS or len(params) != (2 if kind == "weibull" else 1):
                raise ValueError(f"bad transmission spec {' '.join(tok[2:])!r}")
            edges.append((int(tok[0]), int(tok[1]), _KINDS[kind](*params)))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if header is None:
        raise ValueError("missing 'nodes N product P' header")
    return DiffusionNetwork(header[0], edges, product_id=header[1])


def read_network(path) -> DiffusionNetwork:
    with open(path) as fh:
        return parse_network(fh.read())
