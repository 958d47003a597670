"""D-iteration PageRank solver and a simulator of its asynchronous distributed form."""
from .graph import Graph, GraphStats, load_edge_list, stats
from .oracle import dense_solve, power_iteration
from .partition import Partition, adapt_boundary, cost_balanced_partition, uniform_partition
from .sim import SimConfig, SimResult, idle_proportion, run, run_adaptive
from .solver import SolverConfig, SolverState, error_bound, init_state, solve_single
from .synthetic import synthetic_web_graph, web_sample

__all__ = [
    "Graph", "GraphStats", "load_edge_list", "stats",
    "dense_solve", "power_iteration",
    "Partition", "adapt_boundary", "cost_balanced_partition", "uniform_partition",
    "SimConfig", "SimResult", "idle_proportion", "run", "run_adaptive",
    "SolverConfig", "SolverState", "error_bound", "init_state", "solve_single",
    "synthetic_web_graph", "web_sample",
]

__version__ = "0.1.0"
