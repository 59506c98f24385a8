from .pricing import DispatchAudit, DispatchSolution, audit_dispatch, coi_dispatch, dispatch, extract_prices
from .problem import DispatchProblem, LpStandardForm, RowTag, build_coi_dispatch, build_dispatch, prepare_problem
from .solver import LpResult, degenerate_rows, kkt_residuals, solve_lp

__all__ = [
    "audit_dispatch",
    "build_coi_dispatch",
    "build_dispatch",
    "coi_dispatch",
    "degenerate_rows",
    "dispatch",
    "DispatchAudit",
    "DispatchProblem",
    "DispatchSolution",
    "extract_prices",
    "kkt_residuals",
    "LpResult",
    "LpStandardForm",
    "prepare_problem",
    "RowTag",
    "solve_lp",
]
