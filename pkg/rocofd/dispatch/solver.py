import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import linprog

from ..errors import InternalConsistencyError
from .problem import LpStandardForm

logger = logging.getLogger(__name__)

KKT_TOL = 1e-7
ACTIVE_TOL = 1e-7
ZERO_DUAL_TOL = 1e-12

_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}


@dataclass(frozen=True, eq=False)
class LpResult:
    r"""
    Primal and dual solution of an :class:`LpStandardForm`.

    Dual values are the multipliers of the Lagrangian
    ``c @ x + y @ (a_ub @ x - b_ub) + upper @ (x - ub) + lower @ (lb - x)``.
    They are passed on as reported, so :func:`kkt_residuals` sees any sign violation.

    Args:
        status: ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.
        x: Primal solution, ``None`` unless optimal.
        objective: ``c @ x``.
        row_duals: ``y`` per inequality row.
        lower_duals: Multipliers of ``x >= lb``.
        upper_duals: Multipliers of ``x <= ub``.
        infeasible_rows: Rows that no point of the variable box satisfies.
        message: Solver message.
    """

    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    row_duals: Optional[np.ndarray] = None
    lower_duals: Optional[np.ndarray] = None
    upper_duals: Optional[np.ndarray] = None
    infeasible_rows: List[int] = field(default_factory=list)
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def box_infeasible_rows(lp: LpStandardForm) -> List[int]:
    """Rows whose smallest left-hand side over ``lb <= x <= ub`` still exceeds ``b_ub``."""
    lowest = np.where(lp.a_ub > 0, lp.a_ub * lp.lb, lp.a_ub * lp.ub).sum(axis=1)
    violation = lowest - lp.b_ub
    return [int(r) for r in np.flatnonzero(violation > ACTIVE_TOL * (1 + np.abs(lp.b_ub)))]


def solve_lp(lp: LpStandardForm) -> LpResult:
    r"""
    Solve an LP with the HiGHS dual simplex.

    The dual simplex runs with fixed options and no presolve randomization, so the
    same input yields the same optimal basis and duals.

    Raises:
        InternalConsistencyError: On any solver outcome other than optimal,
            infeasible or unbounded.
    """
    res = linprog(
        lp.c,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        bounds=list(zip(lp.lb, lp.ub)),
        method="highs-ds",
    )
    status = _STATUS.get(res.status)
    logger.debug("HiGHS dual simplex: status=%s (%s)", status, res.message)
    if status is None:
        raise InternalConsistencyError(f"LP solver failed: {res.message}")
    if status != "optimal":
        return LpResult(status=status, infeasible_rows=box_infeasible_rows(lp), message=res.message)

    # HiGHS reports d(objective)/d(rhs); flip signs to Lagrange multipliers
    return LpResult(
        status=status,
        x=np.asarray(res.x, dtype=float),
        objective=float(res.fun),
        row_duals=-np.asarray(res.ineqlin.marginals, dtype=float),
        lower_duals=np.asarray(res.lower.marginals, dtype=float),
        upper_duals=-np.asarray(res.upper.marginals, dtype=float),
        message=res.message,
    )


def kkt_residuals(lp: LpStandardForm, result: LpResult) -> Dict[str, float]:
    r"""
    Scaled KKT residuals of an optimal solution.

    Returns:
        ``primal``, ``dual``, ``stationarity``, ``complementarity`` and ``gap``;
        each is zero at an exact optimum.
    """
    assert result.optimal, "KKT residuals need an optimal solution."
    x, y, lo, up = result.x, result.row_duals, result.lower_duals, result.upper_duals
    slack = lp.b_ub - lp.a_ub @ x
    row_scale = 1 + np.abs(lp.b_ub)

    primal = max(
        float(np.max(-slack / row_scale, initial=0.0)),
        float(np.max((lp.lb - x) / (1 + np.abs(lp.lb)), initial=0.0)),
        float(np.max((x - lp.ub) / (1 + np.abs(lp.ub)), initial=0.0)),
    )
    dual = float(max(0.0, -np.min(np.concatenate([y, lo, up]), initial=0.0)))
    grad = lp.c + lp.a_ub.T @ y + up - lo
    stationarity = float(np.max(np.abs(grad), initial=0.0) / (1 + np.max(np.abs(lp.c), initial=0.0)))
    complementarity = max(
        float(np.max(np.abs(y * slack) / row_scale, initial=0.0)),
        float(np.max(np.abs(lo * (x - lp.lb)) / (1 + np.abs(lp.lb)), initial=0.0)),
        float(np.max(np.abs(up * (lp.ub - x)) / (1 + np.abs(lp.ub)), initial=0.0)),
    )
    dual_objective = float(-lp.b_ub @ y - lp.ub @ up + lp.lb @ lo)
    gap = abs(result.objective - dual_objective) / (1 + abs(result.objective))
    return {
        "primal": primal,
        "dual": dual,
        "stationarity": stationarity,
        "complementarity": complementarity,
        "gap": gap,
    }


def degenerate_rows(lp: LpStandardForm, result: LpResult) -> List[int]:
    """Rows that are active at the optimum yet carry a zero dual."""
    slack = lp.b_ub - lp.a_ub @ result.x
    active = np.abs(slack) <= ACTIVE_TOL * (1 + np.abs(lp.b_ub))
    return [int(r) for r in np.flatnonzero(active & (result.row_duals <= ZERO_DUAL_TOL))]
