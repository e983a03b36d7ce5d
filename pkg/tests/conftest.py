import numpy as np
import pytest

from budgetmax.diffusion import Deterministic, DiffusionNetwork
from budgetmax.influence import build_coverage_index, build_sample_bank
from budgetmax.objective import Objective

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(n, ok, detail):
        ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        print(ACCEPTANCE[-1])
    return _record


def det_path(n, delay=1.0, product_id=0):
    return DiffusionNetwork(n, [(k, k + 1, Deterministic(delay)) for k in range(n - 1)],
                            product_id=product_id)


def det_index(net, candidates, horizon, r=4, seed=0):
    return build_coverage_index(build_sample_bank(net, r, seed), candidates, horizon)


def disjoint_reach_objective(sizes_per_product):
    """One deterministic star per candidate, reach sets disjoint.

    ``sizes_per_product[i][k]`` is the reach (star size including the centre)
    of candidate ``k`` for product ``i``.  Candidates are the star centres,
    which are the same node ids across products.
    """
    n_cand = len(sizes_per_product[0])
    width = max(max(s) for s in sizes_per_product)
    n = n_cand * width
    indices = []
    for i, sizes in enumerate(sizes_per_product):
        edges = []
        for k, size in enumerate(sizes):
            centre = k * width
            edges += [(centre, centre + m, Deterministic(1.0)) for m in range(1, size)]
        net = DiffusionNetwork(n, edges, product_id=i)
        indices.append(det_index(net, [k * width for k in range(n_cand)], 5.0))
    return Objective(indices)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
