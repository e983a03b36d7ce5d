import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from budgetmax.diffusion import (Deterministic, DiffusionNetwork, Exponential, Weibull,
                                 earliest_arrival, parse_network, format_network, sample_cascade,
                                 sample_delay)


def test_deterministic_delay_is_exact(rng):
    assert all(sample_delay(Deterministic(1.5), rng) == 1.5 for _ in range(10))


def test_exponential_mean():
    u = np.random.default_rng(1).random(10**6)
    assert abs(Exponential(1.0).quantile(u).mean() - 1.0) < 0.01


def test_weibull_shape_one_is_exponential_with_mean_scale():
    u = np.random.default_rng(2).random(10**6)
    assert abs(Weibull(1.0, 2.0).quantile(u).mean() - 2.0) < 0.02


def test_sample_delay_uses_one_uniform_per_draw():
    tf = Weibull(2.0, 3.0)
    a = [sample_delay(tf, np.random.default_rng(7)) for _ in range(3)]
    u = np.random.default_rng(7).random()
    assert a == [pytest.approx(3.0 * (-math.log1p(-u)) ** 0.5)] * 3


@pytest.mark.parametrize("bad", [lambda: Exponential(0), lambda: Weibull(1, -1),
                                 lambda: Deterministic(-0.1), lambda: Exponential(math.inf)])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_network_invariants():
    with pytest.raises(ValueError, match="self-loop"):
        DiffusionNetwork(2, [(0, 0, Deterministic(1))])
    with pytest.raises(ValueError, match="duplicate"):
        DiffusionNetwork(2, [(0, 1, Deterministic(1)), (0, 1, Exponential(1))])
    with pytest.raises(ValueError, match="outside"):
        DiffusionNetwork(2, [(0, 2, Deterministic(1))])


def test_path_cascade(rng):
    net = DiffusionNetwork(3, [(0, 1, Deterministic(1.0)), (1, 2, Deterministic(1.0))])
    assert list(sample_cascade(net, {0}, 5, rng).infection_time) == [0, 1, 2]
    assert list(sample_cascade(net, {0}, 1.5, rng).infection_time) == [0, 1, math.inf]


def test_diamond_earliest_arrival(rng):
    net = DiffusionNetwork(4, [(0, 1, Deterministic(1)), (0, 2, Deterministic(2)),
                               (1, 3, Deterministic(1)), (2, 3, Deterministic(0.5))])
    assert sample_cascade(net, {0}, 10, rng).infection_time[3] == 2


def test_empty_sources_infect_nothing(rng):
    net = DiffusionNetwork(3, [(0, 1, Exponential(1.0))])
    assert np.isinf(sample_cascade(net, set(), 10, rng).infection_time).all()


def test_deterministic_network_ignores_seed():
    net = DiffusionNetwork(4, [(0, 1, Deterministic(0.3)), (1, 2, Deterministic(0.0)), (0, 3, Deterministic(2))])
    outs = [sample_cascade(net, {0}, 3, np.random.default_rng(s)).infection_time for s in range(5)]
    assert all((o == outs[0]).all() for o in outs)


def _random_net(seed, n=8, p=0.3):
    r = np.random.default_rng(seed)
    edges = [(u, v, Exponential(float(r.uniform(0.5, 2)))) for u in range(n) for v in range(n)
             if u != v and r.random() < p]
    return DiffusionNetwork(n, edges)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), T1=st.floats(0, 3), T2=st.floats(0, 3),
       extra=st.sets(st.integers(0, 7), max_size=3))
def test_reach_monotone_in_sources_and_horizon(seed, T1, T2, extra):
    net = _random_net(seed)
    delays = net.sample_delays(np.random.default_rng(seed))
    lo, hi = sorted((T1, T2))
    R1 = {0}
    R2 = R1 | extra
    reach = lambda R, T: set(np.flatnonzero(earliest_arrival(net, delays, R, T) <= T))
    assert reach(R1, hi) <= reach(R2, hi)
    assert reach(R1, lo) <= reach(R1, hi)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_infection_times_consistent_with_parents(seed):
    net = _random_net(seed)
    delays = net.sample_delays(np.random.default_rng(seed))
    t = earliest_arrival(net, delays, {0, 1}, 2.5)
    assert t[0] == 0 and t[1] == 0
    for v in np.flatnonzero(np.isfinite(t)):
        if v in (0, 1):
            continue
        arrivals = [t[u] + delays[k] for k, (u, w, _) in enumerate(net.edges) if w == v and np.isfinite(t[u])]
        assert min(arrivals) == t[v]


def test_network_file_roundtrip():
    net = DiffusionNetwork(5, [(0, 1, Exponential(0.7)), (1, 2, Weibull(2.5, 3.25)), (3, 4, Deterministic(0.0))],
                           product_id=3)
    back = parse_network(format_network(net))
    assert back.node_count == 5 and back.product_id == 3 and back.edges == net.edges


def test_network_file_comments():
    net = parse_network("# toy\nnodes 3 product 1  # header\n0 1 weibull 2.0 4.5  # shape scale\n\n")
    assert net.product_id == 1 and net.edges == [(0, 1, Weibull(2.0, 4.5))]


def test_network_file_errors():
    with pytest.raises(ValueError, match="header"):
        parse_network("0 1 exp 1.0\n")
    with pytest.raises(ValueError, match="line 2"):
        parse_network("nodes 3 product 0\n0 1 weibull 1.0\n")
