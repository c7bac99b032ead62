"""Placement-then-schedule pipeline for the two connectivity models."""

from dataclasses import dataclass

import numpy as np

from .electrical import ElectricalAdjacency, electrical_connectivity, resistance_distance
from .network import PowerNetwork, dc_laplacian, nominal_susceptance, topological_connectivity
from .placement import PlacementSolution, solve_placement
from .scheduler import Schedule, build_schedule, scheduling_submatrix, svd_ordering

METHODS = ("topology", "electrical")


@dataclass(frozen=True)
class Plan:
    method: str
    connectivity: np.ndarray
    scheduling_matrix: np.ndarray  # B x B matrix whose submatrix drives the order
    placement: PlacementSolution
    schedule: Schedule
    adjacency: ElectricalAdjacency | None = None


def connectivity_for(net: PowerNetwork, method, reference_bus=1):
    """Return ``(C, M, adjacency)``: ILP matrix, scheduling matrix, and the
    electrical adjacency record (None for topology)."""
    L = dc_laplacian(net, nominal_susceptance(net))
    if method == "topology":
        return topological_connectivity(net), L, None
    if method == "electrical":
        E = resistance_distance(L, reference_bus).entries
        adj = electrical_connectivity(E, net.branch_count, resolve_ties=True)
        return adj.matrix, E, adj
    raise ValueError(f"method must be one of {METHODS}, got {method!r}")


def plan(net: PowerNetwork, method, T=20, reference_bus=1) -> Plan:
    C, M, adj = connectivity_for(net, method, reference_bus)
    sol = solve_placement(C)
    sub = scheduling_submatrix(M, sol.pmu_buses)
    sched = build_schedule(svd_ordering(sub), sol.pmu_buses, T, source=method)
    return Plan(method, C, M, sol, sched, adj)


def schedule_buses(net: PowerNetwork, method, buses, T=20, reference_bus=1) -> Schedule:
    """Schedule an externally supplied placement set."""
    _, M, _ = connectivity_for(net, method, reference_bus)
    sub = scheduling_submatrix(M, buses)
    return build_schedule(svd_ordering(sub), buses, T, source=method)
