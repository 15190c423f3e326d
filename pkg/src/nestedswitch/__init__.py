"""Nested quantum switch: topology, routing, fidelity and graph-state simulation."""
from .fidelity import WernerParams, end_to_end
from .requests import Matching, random_perfect_matching
from .routing import RoutePlan, k_shortest_paths, plan_metrics, route_matching
from .topology import Architecture, Topology, apply_failures, build_nested, resource_count

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "Matching",
    "RoutePlan",
    "Topology",
    "WernerParams",
    "apply_failures",
    "build_nested",
    "end_to_end",
    "k_shortest_paths",
    "plan_metrics",
    "random_perfect_matching",
    "resource_count",
    "route_matching",
]
