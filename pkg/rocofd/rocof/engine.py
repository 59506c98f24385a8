import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import torch

from ..data import GridModel
from ..errors import InternalConsistencyError, InvalidDisturbanceError, ModelAssumptionError, ZeroInertiaError
from ..network import SusceptanceBlocks, assemble_blocks, solve_bbb
from ..network.susceptance import DTYPE

logger = logging.getLogger(__name__)

CONSERVATION_TOL_MW = 1e-6
ROW_SUM_TOL = 1e-9
NONNEGATIVE_TOL = 1e-12
TIE_TOL_HZ_PER_S = 1e-9


@dataclass(frozen=True)
class Disturbance:
    r"""
    A sudden load increase of ``p_dis`` MW at load bus ``bus``.

    The bus injection changes by ``-p_dis``, so generators pick up a positive share
    and every initial RoCoF is non-positive.

    Args:
        bus: Load bus id.
        p_dis: Size of the load step in MW.
        label: Optional display name, e.g. ``"trip G3"``.
    """

    bus: str
    p_dis: float
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label if self.label is not None else f"{self.bus}@{self.p_dis:g}MW"


def check_disturbance(grid: GridModel, d: Disturbance, allow_zero: bool = False) -> None:
    if d.bus not in grid.load_buses:
        kind = "generator" if d.bus in grid.gen_ids else "unknown"
        raise InvalidDisturbanceError(f"disturbance bus '{d.bus}' is not a load bus ({kind} bus)")
    if not math.isfinite(d.p_dis) or d.p_dis < 0 or (d.p_dis == 0 and not allow_zero):
        raise InvalidDisturbanceError(f"disturbance size must be positive and finite, got {d.p_dis} MW")


@dataclass(frozen=True, eq=False)
class ImpactDistribution:
    r"""
    Initial distribution of a disturbance over the generators.

    Args:
        delta_pg_n: Increase of electromagnetic power output per generator, MW.
        theta_d_m: Load-bus angle deviations at ``0+``, rad.
        p_dis: Disturbance size, MW.
    """

    delta_pg_n: torch.Tensor
    theta_d_m: torch.Tensor
    p_dis: float

    @property
    def conservation_residual(self) -> float:
        return abs(float(self.delta_pg_n.sum()) - self.p_dis)


@dataclass(frozen=True, eq=False)
class PropagationMatrix:
    r"""
    Matrix ``T = -B_BB^{-1} B_BG`` mapping generator RoCoF to load-bus RoCoF.

    Each row sums to one. For positive-susceptance grids every entry is expected to
    be non-negative as well; ``nonnegative`` records whether that held.
    """

    t_mn: torch.Tensor
    nonnegative: bool = True

    @property
    def row_sum_error(self) -> float:
        return float((self.t_mn.sum(dim=1) - 1).abs().max())


@dataclass(frozen=True, eq=False)
class RoCoFReport:
    r"""
    Initial nodal RoCoF after one disturbance.

    Args:
        gen_ids: Generator bus ids, in the order of ``gen_rocof_n``.
        load_ids: Load bus ids, in the order of ``load_rocof_m``.
        gen_rocof_n: Initial RoCoF of the generator buses, Hz/s.
        load_rocof_m: Initial RoCoF of the load buses, Hz/s.
        worst_bus: Bus with the largest ``|RoCoF|``.
        worst_rocof: RoCoF at ``worst_bus``, Hz/s.
        disturbance: The disturbance analysed.
        impact: The impact distribution behind the generator RoCoF.
        coi_rocof: Centre-of-inertia RoCoF of the same disturbance, Hz/s.
        exceeds_coi: Buses whose ``|RoCoF|`` exceeds ``|coi_rocof|``.
    """

    gen_ids: Sequence[str]
    load_ids: Sequence[str]
    gen_rocof_n: torch.Tensor
    load_rocof_m: torch.Tensor
    worst_bus: str
    worst_rocof: float
    disturbance: Disturbance
    impact: ImpactDistribution
    coi_rocof: float
    exceeds_coi: List[str] = field(default_factory=list)

    @property
    def bus_ids(self) -> List[str]:
        return list(self.gen_ids) + list(self.load_ids)

    @property
    def rocof(self) -> torch.Tensor:
        """Initial RoCoF of every bus, generators first."""
        return torch.cat([self.gen_rocof_n, self.load_rocof_m])

    def records(self) -> List[Dict[str, Union[str, float]]]:
        kinds = ["generator"] * len(self.gen_ids) + ["load"] * len(self.load_ids)
        return [
            {"bus_id": bus, "bus_kind": kind, "rocof_hz_per_s": float(value)}
            for bus, kind, value in zip(self.bus_ids, kinds, self.rocof.tolist())
        ]


def distribute_impact(blocks: SusceptanceBlocks, d: Disturbance) -> ImpactDistribution:
    r"""
    Distribute a load step over the generators at ``0+``.

    Generator rotor angles do not move at ``0+``, so
    ``delta_pg = B_GB B_BB^{-1} dP_D`` with ``dP_D`` zero except ``-p_dis`` at
    the disturbed bus.

    Example::

        >>> distribute_impact(star_blocks, Disturbance("L1", 150.0)).delta_pg_n
        tensor([ 50., 100.], dtype=torch.float64)

    Raises:
        InvalidDisturbanceError: If the bus is not a load bus or ``p_dis`` is negative or not finite.
        InternalConsistencyError: If the generators do not pick up exactly ``p_dis``.
    """
    if d.bus not in blocks.load_index:
        raise InvalidDisturbanceError(f"disturbance bus '{d.bus}' is not a load bus")
    if not math.isfinite(d.p_dis) or d.p_dis < 0:
        raise InvalidDisturbanceError(f"disturbance size must be non-negative and finite, got {d.p_dis} MW")

    dp_d_m = torch.zeros(blocks.m, dtype=DTYPE)
    dp_d_m[blocks.load_index[d.bus]] = -d.p_dis / blocks.s_base
    theta_d_m = solve_bbb(blocks, dp_d_m)
    delta_pg_n = (blocks.b_gb_nm @ theta_d_m) * blocks.s_base

    impact = ImpactDistribution(delta_pg_n=delta_pg_n, theta_d_m=theta_d_m, p_dis=d.p_dis)
    if impact.conservation_residual > CONSERVATION_TOL_MW:
        raise InternalConsistencyError(
            f"generators pick up {float(delta_pg_n.sum()):.9g} MW of a {d.p_dis:.9g} MW disturbance"
        )
    return impact


def generator_rocof(
    impact: ImpactDistribution,
    grid: GridModel,
    h_v: Optional[Sequence[float]] = None,
) -> torch.Tensor:
    r"""
    Initial RoCoF of every generator bus from the swing equation, Hz/s.

    ``rocof_i = -f0 * delta_pg_i / (2 * H_i)`` where ``H_i`` is the synchronous
    inertia plus the optional virtual inertia award ``h_v[i]``.

    Raises:
        ZeroInertiaError: If any generator has no inertia.
    """
    h_n = torch.tensor(grid.inertia(h_v), dtype=DTYPE)
    assert h_n.shape == impact.delta_pg_n.shape, (
        f"Expected {tuple(impact.delta_pg_n.shape)} inertia values but found {tuple(h_n.shape)}."
    )
    if bool((h_n <= 0).any()):
        zero = [bus for bus, h in zip(grid.gen_ids, h_n.tolist()) if h <= 0]
        raise ZeroInertiaError(f"generators without inertia: {', '.join(zero)}")
    return -grid.f0 * impact.delta_pg_n / (2 * h_n)


def propagation_matrix(blocks: SusceptanceBlocks) -> PropagationMatrix:
    r"""
    Compute ``T = -B_BB^{-1} B_BG``.

    Rows of ``T`` sum to one on every connected grid; a violation raises. Negative
    entries are logged and flagged but not hidden.
    """
    t_mn = -solve_bbb(blocks, blocks.b_bg_mn)
    row_error = float((t_mn.sum(dim=1) - 1).abs().max())
    if row_error > ROW_SUM_TOL:
        raise InternalConsistencyError(f"propagation matrix rows deviate from one by {row_error:.3e}")
    min_entry = float(t_mn.min())
    nonnegative = min_entry >= -NONNEGATIVE_TOL
    if not nonnegative:
        logger.warning(
            "propagation matrix has a negative entry %.3e; load RoCoF may leave the generator range", min_entry
        )
    return PropagationMatrix(t_mn=t_mn, nonnegative=nonnegative)


def load_rocof(t: PropagationMatrix, gen_rocof_n: torch.Tensor) -> torch.Tensor:
    """Initial RoCoF of every load bus, ``T @ gen_rocof``, Hz/s."""
    gen_rocof_n = torch.as_tensor(gen_rocof_n, dtype=DTYPE)
    if gen_rocof_n.shape != (t.t_mn.shape[1],):
        raise ValueError(
            f"Expected generator RoCoF of shape ({t.t_mn.shape[1]},) but found {tuple(gen_rocof_n.shape)}."
        )
    return t.t_mn @ gen_rocof_n


def coi_rocof(grid: GridModel, p_dis: float, h_v: Optional[Sequence[float]] = None) -> float:
    """RoCoF of the centre-of-inertia frequency, Hz/s."""
    return -grid.f0 * p_dis / (2 * grid.total_inertia(h_v))


def nodal_rocof_report(
    grid: GridModel,
    d: Disturbance,
    h_v: Optional[Sequence[float]] = None,
    blocks: Optional[SusceptanceBlocks] = None,
    t: Optional[PropagationMatrix] = None,
) -> RoCoFReport:
    r"""
    Initial RoCoF at every bus and the bus where its magnitude is largest.

    Buses within ``TIE_TOL_HZ_PER_S`` of the largest magnitude are tied. A load bus
    tied with a generator does not count as a maximum away from the generators, so
    tied generator buses win over tied load buses and the lexicographically smallest
    id decides among the rest. Only a load bus above every generator by more than
    the tolerance is reported as the worst bus, and that raises.

    Example::

        >>> report = nodal_rocof_report(star_grid, Disturbance("L1", 150.0))
        >>> report.worst_bus, report.worst_rocof
        ('G1', -2.5)

    Args:
        grid (GridModel): Valid grid.
        d (Disturbance): Disturbance at a load bus.
        h_v (Optional[Sequence[float]]): Optional virtual inertia awards added to ``h0``.
        blocks (Optional[SusceptanceBlocks]): Precomputed blocks of ``grid``, assembled if ``None``.
        t (Optional[PropagationMatrix]): Precomputed propagation matrix of ``blocks``.

    Raises:
        ModelAssumptionError: If the largest magnitude is at a load bus only.
    """
    if blocks is None:
        blocks = assemble_blocks(grid)
    check_disturbance(grid, d)
    if t is None:
        t = propagation_matrix(blocks)

    impact = distribute_impact(blocks, d)
    gen_rocof_n = generator_rocof(impact, grid, h_v)
    load_rocof_m = load_rocof(t, gen_rocof_n)

    rocof = torch.cat([gen_rocof_n, load_rocof_m])
    magnitude = rocof.abs()
    peak = float(magnitude.max())
    bus_ids = grid.bus_ids
    tied = [i for i in range(len(bus_ids)) if float(magnitude[i]) >= peak - TIE_TOL_HZ_PER_S]
    tied_gens = [i for i in tied if i < grid.n]

    coi = coi_rocof(grid, d.p_dis, h_v)
    exceeds = [bus for bus, mag in zip(bus_ids, magnitude.tolist()) if mag > abs(coi) + TIE_TOL_HZ_PER_S]
    worst = min(tied_gens or tied, key=lambda i: bus_ids[i])
    report = RoCoFReport(
        gen_ids=grid.gen_ids,
        load_ids=grid.load_buses,
        gen_rocof_n=gen_rocof_n,
        load_rocof_m=load_rocof_m,
        worst_bus=bus_ids[worst],
        worst_rocof=float(rocof[worst]),
        disturbance=d,
        impact=impact,
        coi_rocof=coi,
        exceeds_coi=exceeds,
    )
    if not tied_gens:
        raise ModelAssumptionError(
            f"largest initial RoCoF {report.worst_rocof:.9g} Hz/s is at load bus '{report.worst_bus}' "
            f"for disturbance {d.name}; largest generator RoCoF magnitude is "
            f"{float(gen_rocof_n.abs().max()):.9g} Hz/s (T nonnegative: {t.nonnegative})",
            report=report,
        )
    logger.debug("disturbance %s: worst bus %s at %.6g Hz/s", d.name, report.worst_bus, report.worst_rocof)
    return report
