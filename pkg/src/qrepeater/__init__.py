"""Discrete-event simulation of purify-and-swap quantum repeater paths and
cost-metric routing over them."""
from .calibration import CalibrationEntry, CalibrationTable, calibrate_link, reference_table
from .engine import EventKind, EventQueue, RandomStream, classical_latency
from .fidelity import LinkModelParams, WernerPair, base_fidelity, purify_map, rounds_to_reach, swap_map
from .linklayer import QubitBuffer, WorkCounters, link_throughput_effect
from .network import LinkSpec, NodeSpec, Path, Topology, chain, enumerate_paths, parse_topology
from .protocols import (Infeasible, Plan, PurificationSchedule, SimResult, SwapTree, TimedOut,
                        enumerate_swap_trees, fit_throughput, plan_path, run_path_simulation)
from .routing import CostMetric, CostVector, NoRoute, dijkstra, inv_trans, link_cost, path_cost

__version__ = "0.1.0"
