import logging
from dataclasses import dataclass, field
from typing import List, Optional

import networkx as nx

from ..errors import InvalidGridError
from .grid import GridModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ValidationIssue:
    severity: str
    message: str
    bus: Optional[str] = None

    def __str__(self) -> str:
        where = f" ({self.bus})" if self.bus is not None else ""
        return f"{self.severity}: {self.message}{where}"


@dataclass(frozen=True)
class ValidationReport:
    issues: List[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def errors(self) -> List[ValidationIssue]:
        return [issue for issue in self.issues if issue.severity == "error"]


def network_graph(grid: GridModel) -> nx.Graph:
    """Undirected graph on all buses; edges are lines plus generator internal branches."""
    graph = nx.Graph()
    graph.add_nodes_from(grid.load_buses)
    graph.add_nodes_from(grid.gen_ids)
    graph.add_edges_from((ln.from_bus, ln.to_bus) for ln in grid.lines)
    graph.add_edges_from((g.bus, g.terminal) for g in grid.generators)
    return graph


def validate_grid(grid: GridModel) -> ValidationReport:
    r"""
    Check a grid for structural well-formedness.

    Problems are collected into the returned report rather than raised. A grid is
    ``ok`` when it has at least one generator and one load bus, every id is unique
    and resolves, every susceptance is positive, ``0 <= h0 <= h_max`` holds and
    the network graph is connected with no isolated load bus.
    """
    issues: List[ValidationIssue] = []

    def error(message: str, bus: Optional[str] = None) -> None:
        issues.append(ValidationIssue("error", message, bus))

    if grid.n < 1:
        error("grid has no generators")
    if grid.m < 1:
        error("grid has no load buses")
    if grid.f0 <= 0:
        error(f"nominal frequency must be positive, got {grid.f0}")
    if grid.s_base <= 0:
        error(f"MVA base must be positive, got {grid.s_base}")

    seen = set()
    for bus in grid.bus_ids:
        if not bus:
            error("empty bus id")
        elif bus in seen:
            error("duplicate bus id", bus)
        seen.add(bus)

    load_set = set(grid.load_buses)
    for gen in grid.generators:
        if gen.terminal not in load_set:
            error(f"terminal '{gen.terminal}' is not a load bus", gen.bus)
        if gen.internal_susceptance <= 0:
            error("non-positive internal susceptance", gen.bus)
        if gen.h0 < 0:
            error("negative synchronous inertia", gen.bus)
        if gen.h0 > gen.h_max:
            error("h0 exceeds h_max", gen.bus)
        if gen.cost_coeff < 0:
            error("negative virtual inertia cost", gen.bus)

    for ln in grid.lines:
        for bus in (ln.from_bus, ln.to_bus):
            if bus not in load_set:
                error("line endpoint is not a load bus", bus)
        if ln.from_bus == ln.to_bus:
            error("line connects a bus to itself", ln.from_bus)
        if ln.susceptance <= 0:
            error("non-positive line susceptance", f"{ln.from_bus}-{ln.to_bus}")

    if grid.n >= 1 and grid.m >= 1:
        graph = network_graph(grid)
        for bus in grid.load_buses:
            if bus in graph and graph.degree(bus) == 0:
                error("isolated bus", bus)
        if graph.number_of_nodes() and not nx.is_connected(graph):
            islands = list(nx.connected_components(graph))
            error(f"graph disconnected into {len(islands)} islands")

    report = ValidationReport(issues)
    logger.debug("validated grid n=%d m=%d: %d issue(s)", grid.n, grid.m, len(issues))
    return report


def require_valid(grid: GridModel) -> None:
    """Raise :class:`InvalidGridError` unless ``validate_grid`` passes."""
    report = validate_grid(grid)
    if not report.ok:
        raise InvalidGridError("; ".join(str(issue) for issue in report.errors), report.errors)
