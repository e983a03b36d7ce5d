"""Budgeted multi-product influence maximization on continuous-time diffusion networks."""
from .constraints import (ConstraintSystem, GroupKnapsack, LaminarMatroid, PartitionMatroid,
                          community_matroid, normalize_costs, product_matroid, user_matroid)
from .diffusion import (Deterministic, DiffusionNetwork, Exponential, Weibull, read_network,
                        sample_cascade, sample_delay, write_network)
from .influence import (CoverageIndex, CoverageState, SampleBank, build_coverage_index,
                        build_sample_bank, influence_value)
from .objective import Objective
from .optimizer import (RunReport, density_enumeration, greedy_degree, greedy_degree_local,
                        greedy_fixed_density, lazy_greedy, random_allocation, uniform_cost_greedy)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSystem", "GroupKnapsack", "LaminarMatroid", "PartitionMatroid", "community_matroid",
    "normalize_costs", "product_matroid", "user_matroid",
    "Deterministic", "DiffusionNetwork", "Exponential", "Weibull", "read_network", "sample_cascade",
    "sample_delay", "write_network",
    "CoverageIndex", "CoverageState", "SampleBank", "build_coverage_index", "build_sample_bank",
    "influence_value",
    "Objective",
    "RunReport", "density_enumeration", "greedy_degree", "greedy_degree_local", "greedy_fixed_density",
    "lazy_greedy", "random_allocation", "uniform_cost_greedy",
]
