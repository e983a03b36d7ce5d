"""Monte-Carlo influence estimation as a coverage function.

A :class:`SampleBank` fixes ``r`` independent draws of every edge delay.
For each draw and each candidate source we precompute the set of nodes
reached within the horizon; the influence estimate of a source set is the
average size of the union of those reach sets.  Over a fixed bank this is
an exact coverage function, hence normalized, monotone and submodular.

Reach sets of candidate ``j`` are stored flattened as ``s * n + v`` for
sample ``s`` and node ``v`` (sorted), so a marginal gain is one fancy-index
into a per-product coverage bitmap of size ``r * n``.
"""
from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .diffusion import DiffusionNetwork

DEFAULT_SAMPLES = 2048


@dataclass(frozen=True)
class SampleBank:
    """``r`` independent draws of all edge delays, regenerated from the seed.

    Sample ``s`` is drawn from its own stream keyed by ``(seed, product, s)``,
    so individual samples can be produced lazily and in any order.
    """

    network: DiffusionNetwork
    r: int
    seed: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"sample count must be >= 1, got {self.r}")

    @property
    def product_id(self):
        return self.network.product_id

    def delays(self, s: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, self.network.product_id, s])
        return self.network.sample_delays(rng)

    def __iter__(self):
        for s in range(self.r):
            yield self.delays(s)

    def matrix(self) -> np.ndarray:
        """All delays as an ``(r, edge_count)`` array."""
        out = np.empty((self.r, self.network.edge_count))
        for s in range(self.r):
            out[s] = self.delays(s)
        return out


def build_sample_bank(net: DiffusionNetwork, r: int = DEFAULT_SAMPLES, seed: int = 0) -> SampleBank:
    return SampleBank(net, int(r), int(seed))


class CoverageIndex:
    """Per-sample reach sets of each candidate within one horizon.

    Immutable after construction.
    """

    def __init__(self, product_id, horizon, node_count, r, candidates, offsets, flat):
        self.product_id = int(product_id)
        self.horizon = float(horizon)
        self.node_count = int(node_count)
        self.r = int(r)
        self.candidates = np.asarray(candidates, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.flat = np.asarray(flat, dtype=np.int64)
        self.flat.setflags(write=False)
        self._pos = {int(j): k for k, j in enumerate(self.candidates)}
        if len(self._pos) != len(self.candidates):
            raise ValueError("duplicate candidates")

    def position(self, j: int) -> int:
        try:
            return self._pos[int(j)]
        except KeyError:
            raise KeyError(f"node {j} is not an indexed candidate") from None

    def __contains__(self, j):
        return int(j) in self._pos

    def reach_flat(self, j: int) -> np.ndarray:
        k = self.position(j)
        return self.flat[self.offsets[k]:self.offsets[k + 1]]

    def reach_set(self, s: int, j: int) -> np.ndarray:
        """Sorted nodes reached from candidate ``j`` in sample ``s``."""
        fl = self.reach_flat(j)
        n = self.node_count
        lo, hi = np.searchsorted(fl, [s * n, (s + 1) * n])
        return fl[lo:hi] - s * n

    def mean_reach(self, j: int) -> float:
        return len(self.reach_flat(j)) / self.r


def _csr_template(net: DiffusionNetwork):
    """CSR adjacency whose ``data`` can be refilled per sample via ``perm``."""
    n = net.node_count
    src, dst = net.arrays()
    perm = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    graph = csr_matrix((np.ones(len(perm)), dst[perm].astype(np.int32), indptr), shape=(n, n))
    return graph, perm


def build_coverage_index(bank: SampleBank, candidates, horizon: float) -> CoverageIndex:
    """Truncated earliest-arrival from every candidate under every sample.

    Explicit zero entries of a scipy CSR graph are edges, so zero delays
    are handled correctly.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    net = bank.network
    n = net.node_count
    cand = np.asarray(sorted(int(j) for j in candidates), dtype=np.int64)
    if len(cand) and (cand[0] < 0 or cand[-1] >= n):
        raise ValueError("candidates must be nodes of the network")
    graph, perm = _csr_template(net)
    cand_ids, flat_ids = [], []
    for s in range(bank.r):
        if len(cand) == 0:
            break
        if net.edge_count:
            graph.data = bank.delays(s)[perm]
            dist = dijkstra(graph, directed=True, indices=cand, limit=horizon)
            ci, nodes = np.nonzero(dist <= horizon)
        else:
            ci = np.arange(len(cand))
            nodes = cand
        cand_ids.append(ci)
        flat_ids.append(nodes + s * n)
    if cand_ids:
        ci = np.concatenate(cand_ids)
        fl = np.concatenate(flat_ids)
        order = np.lexsort((fl, ci))
        ci, fl = ci[order], fl[order]
    else:
        ci = fl = np.zeros(0, dtype=np.int64)
    offsets = np.zeros(len(cand) + 1, dtype=np.int64)
    np.cumsum(np.bincount(ci, minlength=len(cand)), out=offsets[1:])
    return CoverageIndex(net.product_id, horizon, n, bank.r, cand, offsets, fl)


def coverage_count(index: CoverageIndex, R) -> int:
    """Total covered (sample, node) pairs of source set ``R``, recomputed from scratch."""
    R = list(R)
    if not R:
        return 0
    return int(np.unique(np.concatenate([index.reach_flat(j) for j in R])).size)


def influence_value(index: CoverageIndex, R) -> float:
    """Average number of nodes reached within the horizon from ``R``."""
    return coverage_count(index, R) / index.r


@dataclass
class CoverageState:
    """Source set of one product with its per-sample covered flags."""

    index: CoverageIndex
    sources: list = field(default_factory=list)
    covered: np.ndarray = None
    count: int = 0

    def __post_init__(self):
        if self.covered is None:
            self.covered = np.zeros(self.index.r * self.index.node_count, dtype=bool)

    def gain_count(self, j: int) -> int:
        fl = self.index.reach_flat(j)
        return int(fl.size - np.count_nonzero(self.covered[fl]))

    def marginal_gain(self, j: int) -> float:
        return self.gain_count(j) / self.index.r

    def value(self) -> float:
        return self.count / self.index.r

    def commit(self, j: int) -> int:
        """Add ``j`` to the source set; returns the covered-count gain."""
        if j in self.sources:
            return 0
        fl = self.index.reach_flat(j)
        g = self.gain_count(j)
        self.covered[fl] = True
        self.sources.append(int(j))
        self.count += g
        return g

    def copy(self) -> "CoverageState":
        return CoverageState(self.index, list(self.sources), self.covered.copy(), self.count)


def marginal_gain(index: CoverageIndex, state: CoverageState, j: int) -> float:
    assert state.index is index
    return state.marginal_gain(j)


def commit(state: CoverageState, j: int) -> CoverageState:
    state.commit(j)
    return state


# -- on-disk cache -------------------------------------------------------------
#
# Little-endian layout:
#   magic  b"BMCI", version u8
#   product u32, r u32, node_count u32, n_candidates u32, horizon f64
#   candidates      n_candidates x u32
#   per candidate:  r x u32 reach-set lengths, then the concatenated node ids (u32)

_MAGIC = b"BMCI"
_VERSION = 1
_HEADER = struct.Struct("<4sBIIIId")


def save_index(index: CoverageIndex, path) -> None:
    n = index.node_count
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, index.product_id, index.r, n,
                              len(index.candidates), index.horizon))
        fh.write(index.candidates.astype("<u4").tobytes())
        for k in range(len(index.candidates)):
            fl = index.flat[index.offsets[k]:index.offsets[k + 1]]
            fh.write(np.bincount(fl // n, minlength=index.r).astype("<u4").tobytes())
            fh.write((fl % n).astype("<u4").tobytes())


def load_index(path) -> CoverageIndex:
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, version, product, r, n, nc, horizon = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a coverage index file")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported index version {version}")
    pos = _HEADER.size
    cand = np.frombuffer(buf, dtype="<u4", count=nc, offset=pos).astype(np.int64)
    pos += 4 * nc
    pieces, sizes = [], []
    for _ in range(nc):
        lens = np.frombuffer(buf, dtype="<u4", count=r, offset=pos).astype(np.int64)
        pos += 4 * r
        total = int(lens.sum())
        nodes = np.frombuffer(buf, dtype="<u4", count=total, offset=pos).astype(np.int64)
        pos += 4 * total
        pieces.append(nodes + np.repeat(np.arange(r, dtype=np.int64) * n, lens))
        sizes.append(total)
    offsets = np.zeros(nc + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    flat = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)
    return CoverageIndex(product, horizon, n, r, cand, offsets, flat)


def cache_key(net: DiffusionNetwork, seed: int, r: int, horizon: float, candidates) -> str:
    h = hashlib.sha256()
    h.update(net.content_hash().encode())
    h.update(repr((int(seed), int(r), float(horizon), sorted(int(j) for j in candidates))).encode())
    return h.hexdigest()[:24]


def cached_index(net: DiffusionNetwork, r: int, seed: int, horizon: float, candidates,
                 cache_dir=None) -> CoverageIndex:
    """Build an index, reusing ``cache_dir/<key>.bmci`` when present."""
    if cache_dir is None:
        return build_coverage_index(build_sample_bank(net, r, seed), candidates, horizon)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, cache_key(net, seed, r, horizon, candidates) + ".bmci")
    if os.path.exists(path):
        return load_index(path)
    index = build_coverage_index(build_sample_bank(net, r, seed), candidates, horizon)
    tmp = path + ".tmp"
    save_index(index, tmp)
    os.replace(tmp, path)
    return index
