"""Distributed time-varying optimization with an estimated Hessian feedforward."""

from .costs import CostAssumptions, CostSet, QuadraticCost, example1_costs, example2_costs
from .exceptions import (
    ConfigurationError,
    GainViolationError,
    InvalidTopologyError,
    InvariantViolation,
    OracleFailure,
    SimulationDivergedError,
    SymmetryViolationError,
)
from .graph import Graph, complete_graph, path_graph, ring_graph
from .model import AdaptiveTrackingOptimizer
from .sim import SimConfig, Trajectory, metrics, optimal_trajectory, run, simulate

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTrackingOptimizer",
    "ConfigurationError",
    "CostAssumptions",
    "CostSet",
    "GainViolationError",
    "Graph",
    "InvalidTopologyError",
    "InvariantViolation",
    "OracleFailure",
    "QuadraticCost",
    "SimConfig",
    "SimulationDivergedError",
    "SymmetryViolationError",
    "Trajectory",
    "complete_graph",
    "example1_costs",
    "example2_costs",
    "metrics",
    "optimal_trajectory",
    "path_graph",
    "ring_graph",
    "run",
    "simulate",
]
