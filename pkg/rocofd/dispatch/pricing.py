import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..data import GridModel
from ..errors import InternalConsistencyError, NotOptimalError
from ..network import assemble_blocks
from ..rocof import Disturbance, nodal_rocof_report, propagation_matrix
from .problem import DispatchProblem, LpStandardForm, build_coi_dispatch, build_dispatch
from .solver import KKT_TOL, degenerate_rows, kkt_residuals, solve_lp

logger = logging.getLogger(__name__)

AUDIT_TOL_HZ_PER_S = 1e-6


@dataclass(frozen=True)
class DispatchAudit:
    r"""
    Nodal RoCoF of every bus under every contingency with the awards in place.

    Args:
        worst_bus: Bus with the largest ``|RoCoF|`` over all contingencies.
        worst_rocof: RoCoF at ``worst_bus``, Hz/s.
        worst_contingency: Index of the contingency that produced it.
        secure: Whether every ``|RoCoF|`` is within ``rocof_max + 1e-6``.
    """

    worst_bus: str
    worst_rocof: float
    worst_contingency: int
    secure: bool


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    r"""
    Outcome of an inertia dispatch.

    Args:
        status: ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.
        gen_ids: Generator bus ids, in award order.
        contingencies: The secured contingency set.
        rocof_max: RoCoF limit, Hz/s.
        h_v: Virtual inertia awards, MW·s.
        objective: Cost of the awards.
        sigma_lo: Duals of the lower RoCoF rows in ``f0 dP <= 2 rocof_max H`` form, shape ``(k, n)``.
        sigma_hi: Duals of the upper RoCoF rows in the same form, shape ``(k, n)``.
        prices: Nodal virtual inertia prices, currency per MW·s.
        kkt: Scaled KKT residuals.
        degenerate: Whether an active row carries a zero dual, so the prices are one of several.
        infeasible_pairs: ``(generator, contingency index)`` pairs no award can secure.
        audit: Post-award nodal RoCoF audit.
        model: ``"nodal"`` or ``"coi"``.
    """

    status: str
    gen_ids: List[str]
    contingencies: List[Disturbance]
    rocof_max: float
    h_v: Optional[np.ndarray] = None
    objective: float = float("nan")
    sigma_lo: Optional[np.ndarray] = None
    sigma_hi: Optional[np.ndarray] = None
    prices: Optional[np.ndarray] = None
    kkt: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False
    infeasible_pairs: List[Tuple[str, int]] = field(default_factory=list)
    audit: Optional[DispatchAudit] = None
    model: str = "nodal"

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _row_duals_kn(lp: LpStandardForm, row_duals: np.ndarray, n_contingencies: int, side: str) -> np.ndarray:
    index = {bus: i for i, bus in enumerate(lp.variables)}
    duals_kn = np.zeros((n_contingencies, len(lp.variables)))
    for r, tag in enumerate(lp.rows):
        if tag.kind == "rocof" and tag.side == side:
            duals_kn[tag.contingency, index[tag.generator]] = row_duals[r]
    return duals_kn


def extract_prices(solution: DispatchSolution, rocof_max: float) -> np.ndarray:
    r"""
    Nodal virtual inertia prices ``rho_i = 2 rocof_max (sigma_hi_i + sigma_lo_i)``.

    Duals are first summed over contingencies per generator.

    Raises:
        NotOptimalError: If the solution is not optimal.
    """
    if not solution.optimal:
        raise NotOptimalError(f"prices are only defined for an optimal dispatch, status is '{solution.status}'")
    sigma_n = solution.sigma_hi.sum(axis=0) + solution.sigma_lo.sum(axis=0)
    return 2 * rocof_max * sigma_n


def audit_dispatch(problem: DispatchProblem, h_v: Sequence[float]) -> DispatchAudit:
    r"""
    Re-run the nodal RoCoF model with ``h0 + h_v`` for every contingency of ``problem``.
    """
    blocks = assemble_blocks(problem.grid)
    t = propagation_matrix(blocks)
    worst: Optional[Tuple[float, str, float, int]] = None
    for k, d in enumerate(problem.contingencies):
        report = nodal_rocof_report(problem.grid, d, h_v=h_v, blocks=blocks, t=t)
        candidate = (abs(report.worst_rocof), report.worst_bus, report.worst_rocof, k)
        if worst is None or candidate[0] > worst[0]:
            worst = candidate
    magnitude, bus, rocof, k = worst
    return DispatchAudit(
        worst_bus=bus,
        worst_rocof=rocof,
        worst_contingency=k,
        secure=magnitude <= problem.rocof_max + AUDIT_TOL_HZ_PER_S,
    )


def _solve(problem: DispatchProblem, lp: LpStandardForm, model: str) -> DispatchSolution:
    grid = problem.grid
    result = solve_lp(lp)
    common = dict(
        gen_ids=list(grid.gen_ids),
        contingencies=problem.contingencies,
        rocof_max=problem.rocof_max,
        model=model,
    )
    if result.status == "unbounded":
        raise InternalConsistencyError("the dispatch LP is unbounded although its feasible set is a bounded box")
    if result.status == "infeasible":
        pairs = [(lp.rows[r].generator or "system", lp.rows[r].contingency) for r in result.infeasible_rows]
        for gen, k in pairs:
            logger.info("no inertia award secures %s under %s", gen, problem.contingencies[k].name)
        return DispatchSolution(status="infeasible", infeasible_pairs=pairs, **common)

    kkt = kkt_residuals(lp, result)
    worst_kkt = max(kkt.values())
    if worst_kkt > KKT_TOL:
        raise InternalConsistencyError(f"LP solution violates KKT conditions: {kkt}")
    degenerate = bool(degenerate_rows(lp, result))
    if degenerate:
        logger.warning("dispatch LP is dual degenerate; prices are those of the solver's optimal basis")

    # dual feasibility holds within KKT_TOL
    row_duals = np.maximum(result.row_duals, 0.0)
    n_k = len(problem.contingencies)
    if model == "nodal":
        y_lo_kn = _row_duals_kn(lp, row_duals, n_k, "lo")
        y_hi_kn = _row_duals_kn(lp, row_duals, n_k, "hi")
    else:
        # aggregate rows price every generator alike
        y_hi_kn = np.repeat(row_duals[:, None], grid.n, axis=1)
        y_lo_kn = np.zeros_like(y_hi_kn)

    solution = DispatchSolution(
        status="optimal",
        h_v=result.x,
        objective=result.objective,
        sigma_lo=y_lo_kn / lp.dual_scale,
        sigma_hi=y_hi_kn / lp.dual_scale,
        kkt=kkt,
        degenerate=degenerate,
        **common,
    )
    prices = extract_prices(solution, problem.rocof_max)
    # each RoCoF row has coefficient -1 on its generator, so stationarity gives rho = c + upper - lower
    bound_n = lp.c + result.upper_duals - result.lower_duals
    if not np.allclose(prices, bound_n, rtol=0.0, atol=KKT_TOL * (1 + np.abs(lp.c).max() + len(lp.rows))):
        raise InternalConsistencyError(f"nodal prices {prices} disagree with the bound multipliers {bound_n}")

    audit = audit_dispatch(problem, result.x)
    if model == "nodal" and not audit.secure:
        raise InternalConsistencyError(
            f"optimal awards leave {audit.worst_bus} at {audit.worst_rocof:.9g} Hz/s "
            f"beyond the {problem.rocof_max} Hz/s limit"
        )
    logger.debug("%s dispatch optimal: objective %.9g, audit worst %s", model, result.objective, audit.worst_bus)
    return replace(solution, prices=prices, audit=audit)


def dispatch(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    rocof_max: float,
    p_dis: Optional[float] = None,
) -> DispatchSolution:
    r"""
    Optimal nodal inertia dispatch with nodal prices.

    Builds and solves the LP, extracts prices and audits the awards against the
    nodal RoCoF model under every contingency.

    Example::

        >>> solution = dispatch(star_grid, "all-load-buses", rocof_max=1.0, p_dis=150.0)
        >>> solution.h_v, solution.objective, solution.prices
        (array([750., 500.]), 1250.0, array([1., 1.]))

    Args:
        grid (GridModel): Valid grid.
        contingencies (Union[Sequence[Disturbance], str]): Disturbances, or ``"all-load-buses"``.
        rocof_max (float): RoCoF limit, Hz/s.
        p_dis (Optional[float]): Disturbance size for the ``"all-load-buses"`` set, MW.
    """
    problem, lp = build_dispatch(grid, contingencies, rocof_max, p_dis)
    return _solve(problem, lp, "nodal")


def coi_dispatch(
    grid: GridModel,
    contingencies: Union[Sequence[Disturbance], str],
    rocof_max: float,
    p_dis: Optional[float] = None,
) -> DispatchSolution:
    r"""
    Centre-of-inertia dispatch with one uniform inertia price.

    The audit uses the nodal model, so ``audit.secure`` shows whether the
    aggregate constraint also keeps every bus within ``rocof_max``.
    """
    problem, lp = build_coi_dispatch(grid, contingencies, rocof_max, p_dis)
    return _solve(problem, lp, "coi")
