import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from ..data import GridModel
from ..network import assemble_blocks
from ..rocof import Disturbance, distribute_impact, expand_contingencies

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RowTag:
    r"""
    Provenance of one inequality row.

    Args:
        kind: ``"rocof"`` for a nodal generator row, ``"coi"`` for an aggregate row.
        contingency: Index into the problem's contingency list.
        generator: Generator bus id, ``None`` for aggregate rows.
        side: ``"lo"`` (RoCoF >= -rocof_max) or ``"hi"`` (RoCoF <= rocof_max).
    """

    kind: str
    contingency: int
    generator: Optional[str] = None
    side: str = "hi"

    def __str__(self) -> str:
        who = self.generator if self.generator is not None else "system"
        return f"({who}, contingency {self.contingency + 1}, {self.side})"


@dataclass(frozen=True, eq=False)
class LpStandardForm:
    r"""
    ``min c @ x  s.t.  a_ub @ x <= b_ub,  lb <= x <= ub``.

    Every RoCoF row is normalized to ``f0 |dP| / (2 rocof_max) - h0 <= h_v`` so its
    dual is in currency per MW·s; ``dual_scale`` holds the factor ``2 rocof_max``
    that turns a normalized row back into ``f0 dP <= 2 rocof_max (h0 + h_v)``.
    """

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    rows: List[RowTag]
    variables: List[str]
    dual_scale: float

    def __post_init__(self) -> None:
        assert self.a_ub.shape == (len(self.rows), len(self.c)), "Every row must carry a provenance tag."
        for name in ("c", "a_ub", "b_ub", "lb", "ub"):
            assert np.isfinite(getattr(self, name)).all(), f"Non-finite entry in LP field '{name}'."


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    r"""
    Inertia dispatch over a contingency set.

    Args:
        grid: Valid grid.
        contingencies: Disturbances the dispatch must secure.
        rocof_max: RoCoF limit, Hz/s.
        delta_pg_kn: Impact of every contingency on every generator, MW.
    """

    grid: GridModel
    contingencies: List[Disturbance]
    rocof_max: float
    delta_pg_kn: torch.Tensor


def prepare_problem(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    rocof_max: float,
    p_dis: Optional[float] = None,
) -> DispatchProblem:
    if not (math.isfinite(rocof_max) and rocof_max > 0):
        raise ValueError(f"rocof_max must be positive and finite, got {rocof_max} Hz/s")
    contingencies = expand_contingencies(grid, contingencies, p_dis)
    blocks = assemble_blocks(grid)
    delta_pg_kn = torch.stack([distribute_impact(blocks, d).delta_pg_n for d in contingencies])
    return DispatchProblem(grid=grid, contingencies=contingencies, rocof_max=rocof_max, delta_pg_kn=delta_pg_kn)


def _box(grid: GridModel) -> Tuple[np.ndarray, np.ndarray]:
    lb = np.zeros(grid.n)
    ub = np.array([g.headroom for g in grid.generators], dtype=float)
    return lb, ub


def build_dispatch(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    rocof_max: float,
    p_dis: Optional[float] = None,
) -> Tuple[DispatchProblem, LpStandardForm]:
    r"""
    Build the nodal inertia dispatch LP.

    For every contingency ``k`` and generator ``i`` two rows are emitted, one per
    side of ``|f0 dP_ik / (2 (h0_i + h_v_i))| <= rocof_max``; with the load-increase
    sign convention only the ``"hi"`` side can bind. Awards are boxed by
    ``0 <= h_v_i <= h_max_i - h0_i`` and cost ``cost_coeff_i`` per MW·s.

    Example::

        >>> problem, lp = build_dispatch(star_grid, "all-load-buses", rocof_max=1.0, p_dis=150.0)
        >>> lp.a_ub.shape
        (4, 2)

    Raises:
        ValueError: If ``rocof_max <= 0`` or the contingency set is empty.
    """
    problem = prepare_problem(grid, contingencies, rocof_max, p_dis)
    scale = 2 * rocof_max
    h0_n = np.array([g.h0 for g in grid.generators])
    demand_kn = grid.f0 * problem.delta_pg_kn.numpy() / scale

    a_rows, b_rows, tags = [], [], []
    for k in range(len(problem.contingencies)):
        for i, bus in enumerate(grid.gen_ids):
            e_i = np.zeros(grid.n)
            e_i[i] = -1.0
            # lo: -f0 dP / (2 r) - h0 <= h_v
            a_rows.append(e_i)
            b_rows.append(h0_n[i] + demand_kn[k, i])
            tags.append(RowTag("rocof", k, bus, "lo"))
            # hi: f0 dP / (2 r) - h0 <= h_v
            a_rows.append(e_i.copy())
            b_rows.append(h0_n[i] - demand_kn[k, i])
            tags.append(RowTag("rocof", k, bus, "hi"))

    lb, ub = _box(grid)
    lp = LpStandardForm(
        c=np.array(grid.cost_coeffs(), dtype=float),
        a_ub=np.array(a_rows),
        b_ub=np.array(b_rows),
        lb=lb,
        ub=ub,
        rows=tags,
        variables=list(grid.gen_ids),
        dual_scale=scale,
    )
    logger.debug("built nodal dispatch LP: %d rows, %d variables", len(tags), grid.n)
    return problem, lp


def build_coi_dispatch(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    rocof_max: float,
    p_dis: Optional[float] = None,
) -> Tuple[DispatchProblem, LpStandardForm]:
    r"""
    Build the centre-of-inertia dispatch LP.

    One row per contingency bounds the system RoCoF,
    ``f0 p_dis / (2 rocof_max) - sum(h0) <= sum(h_v)``, so inertia is priced
    uniformly no matter where it sits.
    """
    problem = prepare_problem(grid, contingencies, rocof_max, p_dis)
    scale = 2 * rocof_max
    total_h0 = grid.total_inertia()

    a_rows, b_rows, tags = [], [], []
    for k, d in enumerate(problem.contingencies):
        a_rows.append(-np.ones(grid.n))
        b_rows.append(total_h0 - grid.f0 * d.p_dis / scale)
        tags.append(RowTag("coi", k))

    lb, ub = _box(grid)
    lp = LpStandardForm(
        c=np.array(grid.cost_coeffs(), dtype=float),
        a_ub=np.array(a_rows),
        b_ub=np.array(b_rows),
        lb=lb,
        ub=ub,
        rows=tags,
        variables=list(grid.gen_ids),
        dual_scale=scale,
    )
    logger.debug("built COI dispatch LP: %d rows, %d variables", len(tags), grid.n)
    return problem, lp
