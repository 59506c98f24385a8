import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import torch

from ..data import GridModel
from ..errors import InvalidDisturbanceError
from ..network import assemble_blocks
from .engine import (
    TIE_TOL_HZ_PER_S,
    Disturbance,
    RoCoFReport,
    check_disturbance,
    nodal_rocof_report,
    propagation_matrix,
)

logger = logging.getLogger(__name__)

ALL_LOAD_BUSES = "all-load-buses"


@dataclass(frozen=True, eq=False)
class ScreeningResult:
    r"""
    Reports for a contingency set, in input order.

    Args:
        reports: One report per disturbance.
        worst_delta_pg_n: Per generator, the largest ``|delta_pg|`` over the set, MW.
    """

    reports: List[RoCoFReport]
    worst_delta_pg_n: torch.Tensor

    @property
    def worst(self) -> RoCoFReport:
        """Report with the largest ``|worst_rocof|``; the earliest one wins ties."""
        peak = max(abs(r.worst_rocof) for r in self.reports)
        return next(r for r in self.reports if abs(r.worst_rocof) >= peak - TIE_TOL_HZ_PER_S)

    @property
    def disturbances(self) -> List[Disturbance]:
        return [r.disturbance for r in self.reports]


def expand_contingencies(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    p_dis: Optional[float] = None,
) -> List[Disturbance]:
    r"""
    Expand the ``"all-load-buses"`` sentinel into one disturbance of ``p_dis`` MW per load bus.
    """
    if isinstance(contingencies, str):
        if contingencies != ALL_LOAD_BUSES:
            raise ValueError(f"Unknown contingency set '{contingencies}'; expected '{ALL_LOAD_BUSES}'.")
        if p_dis is None:
            raise ValueError("A disturbance size is required with the all-load-buses set.")
        contingencies = [Disturbance(bus, p_dis) for bus in grid.load_buses]
    contingencies = list(contingencies)
    if not contingencies:
        raise ValueError("The contingency set is empty.")
    for d in contingencies:
        check_disturbance(grid, d)
    return contingencies


def screen_contingencies(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    p_dis: Optional[float] = None,
    h_v: Optional[Sequence[float]] = None,
    max_workers: int = 1,
) -> ScreeningResult:
    r"""
    Evaluate the initial nodal RoCoF of every disturbance in a contingency set.

    The blocks and their factorization are shared read-only by all disturbances,
    which may be evaluated on up to ``max_workers`` threads. Reports keep the
    order of the input.

    Example::

        >>> result = screen_contingencies(chain_grid, "all-load-buses", p_dis=150.0)
        >>> [(r.worst_bus, round(r.worst_rocof, 3)) for r in result.reports]
        [('G1', -3.214), ('G2', -3.214)]

    Args:
        grid (GridModel): Valid grid.
        contingencies (Union[Sequence[Disturbance], str]): Disturbances, or ``"all-load-buses"``.
        p_dis (Optional[float]): Disturbance size in MW for the ``"all-load-buses"`` set.
        h_v (Optional[Sequence[float]]): Optional virtual inertia awards.
        max_workers (int): Number of threads. Default: ``1``.
    """
    contingencies = expand_contingencies(grid, contingencies, p_dis)
    blocks = assemble_blocks(grid)
    t = propagation_matrix(blocks)

    def evaluate(d: Disturbance) -> RoCoFReport:
        return nodal_rocof_report(grid, d, h_v=h_v, blocks=blocks, t=t)

    if max_workers > 1 and len(contingencies) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(evaluate, contingencies))
    else:
        reports = [evaluate(d) for d in contingencies]

    worst_delta_pg_n = torch.stack([r.impact.delta_pg_n.abs() for r in reports]).max(dim=0).values
    logger.debug("screened %d contingencies on %d threads", len(reports), max_workers)
    return ScreeningResult(reports=reports, worst_delta_pg_n=worst_delta_pg_n)


def trip_generator(grid: GridModel, bus: str, p_mw: float) -> Tuple[GridModel, Disturbance]:
    r"""
    Model the trip of generator ``bus`` carrying ``p_mw`` MW as a load step.

    The unit is removed from the grid and its lost output appears as a load
    increase at its terminal bus. This ignores the unit's own inertial response
    in the first instant.

    Raises:
        InvalidDisturbanceError: If ``bus`` is not a generator, is the last one, or ``p_mw`` is not
            a positive finite number.
    """
    if bus not in grid.gen_ids:
        raise InvalidDisturbanceError(f"'{bus}' is not a generator bus")
    if grid.n == 1:
        raise InvalidDisturbanceError(f"cannot trip '{bus}', the only generator of the grid")
    if not (math.isfinite(p_mw) and p_mw > 0):
        raise InvalidDisturbanceError(f"tripped output must be positive and finite, got {p_mw} MW")
    terminal = grid.generator(bus).terminal
    logger.warning("modelling trip of %s as a %g MW load step at %s", bus, p_mw, terminal)
    return grid.without_generator(bus), Disturbance(terminal, p_mw, label=f"trip {bus}")
