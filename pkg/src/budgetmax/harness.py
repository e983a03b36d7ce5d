"""Experiment configuration, asset building, held-out evaluation and sweeps."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constraints import (ConstraintSystem, community_matroid, normalize_costs, product_matroid,
                          user_matroid)
from .diffusion import DiffusionNetwork, earliest_arrival, read_network, write_network
from .influence import DEFAULT_SAMPLES, build_coverage_index, build_sample_bank, cached_index
from .netgen import (NETWORK_TYPES, generate_budgets, generate_costs, kronecker_network,
                     random_small_network)
from .objective import Objective
from .optimizer import (RunReport, density_enumeration, greedy_degree, greedy_degree_local,
                        lazy_greedy, random_allocation, uniform_cost_greedy)

log = logging.getLogger(__name__)

ALGORITHMS = ("budgetmax", "lazy", "degree", "degree-local", "random")
AXES = ("products", "product_budget", "user_constraint", "time_window", "delta", "group_limit")
DEFAULT_AXIS_VALUES = {
    "products": [2, 4, 8],
    "product_budget": [2, 4, 8],
    "user_constraint": [1, 2, 3],
    "time_window": [1.0, 2.0, 5.0, 10.0],
    "delta": [0.01, 0.1, 0.5, 1.0],
    "group_limit": [4, 8, 16],
}
CSV_FIELDS = ["algorithm", "axis", "axis_value", "objective", "relative_to_lazy", "heldout",
              "k_a", "size", "evaluations", "wall_time"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """One experiment; every field has a default that is echoed into reports.

    Uniform-cost mode caps each product at ``product_capacity`` users.
    Setting ``budgets`` (a number, a per-product list, or ``"random"``)
    switches to non-uniform costs ``(degree + 1)^-cost_exponent``.
    """

    products: int = 8
    candidates: int = 64
    power: int = 10
    network_types: list = field(default_factory=lambda: list(NETWORK_TYPES))
    networks: list | None = None
    candidate_set: list | None = None
    user_capacity: int = 2
    product_capacity: int | None = 8
    budgets: float | list | str | None = None
    cost_exponent: float = 3.0
    groups: int | None = None
    group_limit: int | None = None
    horizon: float | list = 5.0
    delta: float = 0.01
    samples: int = DEFAULT_SAMPLES
    weights: list | None = None
    seed: int = 0
    algorithms: list = field(default_factory=lambda: ["budgetmax", "degree", "random"])
    cascades: str | None = None
    cache_dir: str | None = None
    sweep: dict | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        if "budgets" in data and data["budgets"] is not None and "product_capacity" not in data:
            data["product_capacity"] = None
        for key in ("cascades", "cache_dir"):
            if data.get(key):
                data[key] = os.path.join(base_dir, data[key])
        if data.get("networks"):
            data["networks"] = [os.path.join(base_dir, p) for p in data["networks"]]
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    @property
    def knapsack_mode(self) -> bool:
        return self.budgets is not None

    def horizons(self) -> list[float]:
        if isinstance(self.horizon, list):
            return [float(t) for t in self.horizon]
        return [float(self.horizon)] * self.products

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.products >= 1, "products must be >= 1")
        need(self.candidates >= 1, "candidates must be >= 1")
        need(1 <= self.power <= 14, "power must lie in [1, 14]")
        need(self.user_capacity >= 0, "user_capacity must be >= 0")
        need(self.delta > 0, "delta must be positive")
        need(self.samples >= 1, "samples must be >= 1")
        need(self.workers >= 1, "workers must be >= 1")
        need(all(t in NETWORK_TYPES for t in self.network_types),
             f"network_types must be drawn from {NETWORK_TYPES}")
        need(not (self.knapsack_mode and self.product_capacity is not None),
             "product_capacity and budgets are mutually exclusive")
        need(self.knapsack_mode or self.product_capacity is not None,
             "set either product_capacity or budgets")
        if self.product_capacity is not None:
            need(self.product_capacity >= 0, "product_capacity must be >= 0")
        if isinstance(self.budgets, str):
            need(self.budgets == "random", "budgets must be a number, a list or 'random'")
        elif isinstance(self.budgets, list):
            need(len(self.budgets) == self.products, "one budget per product required")
            need(all(b > 0 for b in self.budgets), "budgets must be positive")
        elif self.budgets is not None:
            need(self.budgets > 0, "budgets must be positive")
        hs = self.horizons()
        need(len(hs) == self.products, "one horizon per product required")
        need(all(t >= 0 for t in hs), "horizons must be non-negative")
        if self.weights is not None:
            need(len(self.weights) == self.products and all(w > 0 for w in self.weights),
                 "weights must be positive, one per product")
        need(all(a in ALGORITHMS for a in self.algorithms), f"algorithms must be drawn from {ALGORITHMS}")
        need((self.groups is None) == (self.group_limit is None),
             "groups and group_limit go together")
        if self.groups is not None:
            need(1 <= self.groups <= self.candidates, "groups must lie in [1, candidates]")
        need("degree-local" not in self.algorithms or self.groups is not None,
             "degree-local needs groups")
        if self.networks is not None:
            need(len(self.networks) >= self.products, "fewer network files than products")
            for p in self.networks:
                need(os.path.exists(p), f"network file not found: {p}")
        else:
            need(self.candidates <= 2 ** self.power, "more candidates than nodes")
        if self.cascades is not None:
            need(os.path.exists(self.cascades), f"cascade file not found: {self.cascades}")
        if self.sweep is not None:
            need(self.sweep.get("axis") in AXES, f"sweep axis must be one of {AXES}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# -- cascades ------------------------------------------------------------------
#
# One cascade per line:  product_id; node:time,node:time,...
# with strictly increasing times.  Blank lines and '#' comments are skipped.

@dataclass
class CascadeRecord:
    product: int
    events: list  # [(node, time), ...]

    @property
    def nodes(self):
        return [v for v, _ in self.events]


class CascadeFormatError(ValueError):
    pass


def parse_cascades(text: str) -> list[CascadeRecord]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            head, _, body = line.partition(";")
            if not _:
                raise ValueError("missing ';' after the product id")
            product = int(head)
            events = []
            for item in body.split(","):
                node, sep, t = item.strip().partition(":")
                if not sep:
                    raise ValueError(f"event {item.strip()!r} is not node:time")
                events.append((int(node), float(t)))
        except ValueError as exc:
            raise CascadeFormatError(f"line {lineno}: {exc}") from None
        if any(b[1] <= a[1] for a, b in zip(events, events[1:])):
            raise CascadeFormatError(f"line {lineno}: timestamps must be strictly increasing")
        out.append(CascadeRecord(product, events))
    return out


def load_cascades(path) -> list[CascadeRecord]:
    with open(path) as fh:
        return parse_cascades(fh.read())


def format_cascades(cascades) -> str:
    return "".join(f"{c.product}; " + ",".join(f"{v}:{t!r}" for v, t in c.events) + "\n"
                   for c in cascades)


def heldout_evaluate(allocation, cascades) -> float:
    """Sum over assigned pairs of the mean number of events after the user.

    For ``(i, j)`` the mean runs over product ``i``'s cascades that contain
    ``j``; pairs whose user never appears contribute 0.
    """
    by_product = {}
    for c in cascades:
        by_product.setdefault(c.product, []).append(c)
    total = 0.0
    for i, j in allocation:
        after = []
        for c in by_product.get(i, ()):
            nodes = c.nodes
            if j in nodes:
                after.append(len(nodes) - nodes.index(j) - 1)
        if after:
            total += sum(after) / len(after)
    return total


def simulate_cascades(networks, horizons, per_product, rng) -> list[CascadeRecord]:
    """Cascades from single random sources, truncated at each product's horizon."""
    out = []
    for net, T in zip(networks, horizons):
        for _ in range(per_product):
            src = int(rng.integers(net.node_count))
            times = earliest_arrival(net, net.sample_delays(rng), [src], T)
            hit = np.flatnonzero(np.isfinite(times))
            order = hit[np.lexsort((hit, times[hit]))]
            events, last = [], -math.inf
            for v in order:
                if times[v] > last:
                    events.append((int(v), float(times[v])))
                    last = times[v]
            out.append(CascadeRecord(net.product_id, events))
    return out


# -- assets --------------------------------------------------------------------

@dataclass
class Assets:
    networks: list
    candidates: list
    objective: Objective
    constraints: ConstraintSystem
    groups: list | None
    budgets: list | None
    raw_costs: dict | None

    def degrees(self):
        return [net.out_degrees() for net in self.networks]


_INDEX_CACHE: dict = {}


def build_networks(cfg: ExperimentConfig) -> list[DiffusionNetwork]:
    if cfg.networks is not None:
        nets = [read_network(p) for p in cfg.networks[:cfg.products]]
        if len({n.node_count for n in nets}) != 1:
            raise ConfigError("all networks must share one node set")
        for i, n in enumerate(nets):
            n.product_id = i
        return nets
    nets = []
    for i in range(cfg.products):
        kind = cfg.network_types[i % len(cfg.network_types)]
        nets.append(kronecker_network(kind, cfg.power, np.random.default_rng([cfg.seed, 1, i]), i))
    return nets


def choose_candidates(cfg: ExperimentConfig, node_count: int) -> list[int]:
    if cfg.candidate_set is not None:
        return sorted(int(j) for j in cfg.candidate_set)
    if cfg.candidates > node_count:
        raise ConfigError("more candidates than nodes")
    rng = np.random.default_rng([cfg.seed, 2])
    return sorted(int(j) for j in rng.choice(node_count, cfg.candidates, replace=False))


def _index(net, cfg, horizon, candidates):
    key = (net.content_hash(), cfg.seed, cfg.samples, horizon, tuple(candidates))
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = cached_index(net, cfg.samples, cfg.seed, horizon, candidates, cfg.cache_dir)
    return _INDEX_CACHE[key]


def build_assets(cfg: ExperimentConfig, networks=None) -> Assets:
    nets = networks if networks is not None else build_networks(cfg)
    n = nets[0].node_count
    cand = choose_candidates(cfg, n)
    hs = cfg.horizons()
    objective = Objective([_index(net, cfg, hs[i], cand) for i, net in enumerate(nets)], cfg.weights)
    ground = objective.ground_set()
    matroids = [user_matroid(cfg.user_capacity)]
    groups = None
    if cfg.groups is not None:
        perm = np.random.default_rng([cfg.seed, 4]).permutation(cand)
        groups = [sorted(int(j) for j in g) for g in np.array_split(perm, cfg.groups)]
        matroids.append(community_matroid(ground, [(g, cfg.group_limit) for g in groups]))
    knapsack = budgets = raw = None
    if cfg.knapsack_mode:
        if cfg.budgets == "random":
            budgets = [float(b) for b in generate_budgets(cfg.products, np.random.default_rng([cfg.seed, 3]))]
        elif isinstance(cfg.budgets, list):
            budgets = [float(b) for b in cfg.budgets]
        else:
            budgets = [float(cfg.budgets)] * cfg.products
        raw = {}
        for i, net in enumerate(nets):
            costs = generate_costs(net.out_degrees()[cand], cfg.cost_exponent)
            raw.update({(i, j): float(c) for j, c in zip(cand, costs)})
        knapsack = normalize_costs(raw, budgets)
    else:
        matroids.append(product_matroid(cfg.product_capacity))
    return Assets(nets, cand, objective, ConstraintSystem(ground, matroids, knapsack), groups, budgets, raw)


def write_assets(cfg: ExperimentConfig, out_dir, cascades_per_product=0) -> dict:
    """Write network files and a JSON manifest (candidates, costs, budgets, seeds)."""
    os.makedirs(out_dir, exist_ok=True)
    nets = build_networks(cfg)
    cand = choose_candidates(cfg, nets[0].node_count)
    manifest = {"seed": cfg.seed, "candidates": cand, "networks": [],
                "weibull_parameters": "shape and scale each uniform on [1, 10]",
                "cost_degree": "out-degree in the product's own network, cost = (d + 1)^-n / max"}
    for i, net in enumerate(nets):
        name = f"product_{i:03d}.net"
        write_network(net, os.path.join(out_dir, name))
        manifest["networks"].append({"file": name, "type": cfg.network_types[i % len(cfg.network_types)],
                                     "nodes": net.node_count, "edges": net.edge_count})
    if cfg.knapsack_mode:
        assets = build_assets(cfg, nets)
        manifest["budgets"] = assets.budgets
        manifest["raw_costs"] = [[i, j, c] for (i, j), c in sorted(assets.raw_costs.items())]
    if cascades_per_product:
        rng = np.random.default_rng([cfg.seed, 5])
        casc = simulate_cascades(nets, cfg.horizons(), cascades_per_product, rng)
        with open(os.path.join(out_dir, "cascades.txt"), "w") as fh:
            fh.write(format_cascades(casc))
        manifest["cascades"] = "cascades.txt"
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


# -- runs ----------------------------------------------------------------------

def run_algorithm(name: str, assets: Assets, cfg: ExperimentConfig) -> RunReport:
    obj, cons = assets.objective, assets.constraints
    if name == "budgetmax":
        if cfg.knapsack_mode:
            return density_enumeration(obj, cons, cfg.delta)
        return uniform_cost_greedy(obj, cons, cfg.delta)
    if name == "lazy":
        return lazy_greedy(obj, cons)
    if name == "degree":
        return greedy_degree(obj, cons, assets.degrees(), use_costs=cfg.knapsack_mode)
    if name == "degree-local":
        return greedy_degree_local(obj, cons, assets.degrees(), assets.groups,
                                   use_costs=cfg.knapsack_mode)
    if name == "random":
        return random_allocation(obj, cons, seed=cfg.seed)
    raise ConfigError(f"unknown algorithm {name!r}")


def run_experiment(cfg: ExperimentConfig, axis=None, axis_value=None):
    """Run every configured algorithm once.

    Returns ``(rows, reports)``: one CSV-ready row and one RunReport per
    algorithm.
    """
    cfg.validate()
    assets = build_assets(cfg)
    cascades = load_cascades(cfg.cascades) if cfg.cascades else None
    algos = list(cfg.algorithms)
    if axis == "delta" and "lazy" not in algos:
        algos.append("lazy")
    reports = {a: run_algorithm(a, assets, cfg) for a in algos}
    lazy_value = reports["lazy"].value if "lazy" in reports else None
    rows = []
    for a, rep in reports.items():
        rows.append({
            "algorithm": a,
            "axis": axis or "",
            "axis_value": "" if axis_value is None else axis_value,
            "objective": rep.value,
            "relative_to_lazy": (rep.value / lazy_value) if lazy_value else "",
            "heldout": heldout_evaluate(rep.selected, cascades) if cascades is not None else "",
            "k_a": rep.k_a,
            "size": len(rep.selected),
            "evaluations": rep.evaluations,
            "wall_time": rep.wall_time,
        })
        log.info("%s: value %.4f with %d pairs", a, rep.value, len(rep.selected))
    return rows, list(reports.values())


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "products":
        changes = {"products": int(value)}
        if isinstance(cfg.horizon, list):
            changes["horizon"] = cfg.horizon[:int(value)]
        if cfg.weights is not None:
            changes["weights"] = cfg.weights[:int(value)]
        if isinstance(cfg.budgets, list):
            changes["budgets"] = cfg.budgets[:int(value)]
    elif axis == "product_budget":
        changes = {"budgets": float(value)} if cfg.knapsack_mode else {"product_capacity": int(value)}
    elif axis == "user_constraint":
        changes = {"user_capacity": int(value)}
    elif axis == "time_window":
        changes = {"horizon": float(value)}
    elif axis == "delta":
        changes = {"delta": float(value)}
    elif axis == "group_limit":
        if cfg.groups is None:
            raise ConfigError("group_limit sweep needs groups")
        changes = {"group_limit": int(value)}
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return dataclasses.replace(cfg, **changes)


def _sweep_point(args):
    cfg, axis, value = args
    return run_experiment(cfg, axis, value)


def sweep(cfg: ExperimentConfig, axis: str, values=None, workers=None):
    """One :func:`run_experiment` per axis value; rows come back in axis order."""
    if axis not in AXES:
        raise ConfigError(f"sweep axis must be one of {AXES}")
    if values is None:
        values = (cfg.sweep or {}).get("values") or DEFAULT_AXIS_VALUES[axis]
    points = [(_apply_axis(cfg, axis, v).validate(), axis, v) for v in values]
    workers = workers or cfg.workers
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    rows, reports = [], []
    for r, rep in results:
        rows.extend(r)
        reports.extend(rep)
    return rows, reports


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row.get(k, "")) for k in CSV_FIELDS})
    return buf.getvalue()


def write_results(out_dir, stem, cfg, rows, reports):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, stem + ".csv"), "w") as fh:
        fh.write(rows_to_csv(rows))
    with open(os.path.join(out_dir, stem + ".json"), "w") as fh:
        json.dump({"config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}, fh, indent=1)


# -- brute-force check ---------------------------------------------------------

def random_instance(rng, n_products, n_candidates, *, user_caps=(1, 2), product_caps=(1, 2),
                    knapsack=False, nodes=10, edge_prob=0.25, horizon=1.0, samples=64):
    """Small random instance over fresh exponential-delay networks.

    Returns ``(objective, constraints)``.  With ``knapsack`` the product
    matroid is replaced by normalized costs uniform on (0.1, 1].
    """
    nets = [random_small_network(nodes, edge_prob, rng, product_id=i) for i in range(n_products)]
    cand = sorted(int(j) for j in rng.choice(nodes, n_candidates, replace=False))
    seed = int(rng.integers(2**31))
    indices = [build_coverage_index(build_sample_bank(net, samples, seed), cand, horizon) for net in nets]
    obj = Objective(indices)
    ground = obj.ground_set()
    u = int(rng.choice(user_caps))
    matroids = [user_matroid(u)]
    ks = None
    if knapsack:
        raw = {z: float(rng.uniform(0.1, 1.0)) for z in ground}
        ks = normalize_costs(raw, [1.0] * n_products)
    else:
        matroids.append(product_matroid([int(rng.choice(product_caps)) for _ in range(n_products)]))
    return obj, ConstraintSystem(ground, matroids, ks)


def brute_check(n_instances=50, seed=0, delta_uniform=0.01, delta_knapsack=0.1):
    """Greedy against brute force on small instances; one row per instance."""
    from .exact import brute_force_optimum
    from .optimizer import approximation_floor_knapsack, approximation_floor_uniform

    rng = np.random.default_rng(seed)
    rows = []
    for k in range(n_instances):
        for mode in ("uniform", "knapsack"):
            L = int(rng.choice([2, 3]))
            V = int(rng.choice([4, 6])) if mode == "uniform" else int(rng.choice([4, 5, 6]))
            obj, cons = random_instance(rng, L, V, knapsack=(mode == "knapsack"))
            opt, best = brute_force_optimum(obj, cons)
            if mode == "uniform":
                rep = uniform_cost_greedy(obj, cons, delta_uniform, reference=best)
                floor = approximation_floor_uniform(delta_uniform)
            else:
                rep = density_enumeration(obj, cons, delta_knapsack)
                floor = approximation_floor_knapsack(rep.k_a, L, delta_knapsack)
            ratio = rep.value / opt if opt > 0 else 1.0
            rows.append({"instance": k, "mode": mode, "products": L, "candidates": V,
                         "opt": opt, "greedy": rep.value, "ratio": ratio, "floor": floor,
                         "k_a": rep.k_a, "ok": ratio >= floor})
    return rows
