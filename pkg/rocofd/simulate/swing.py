import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import torch

from ..data import GridModel
from ..errors import InternalConsistencyError, StepSizeError
from ..network import SusceptanceBlocks, assemble_blocks, solve_bbb
from ..network.susceptance import DTYPE
from ..rocof import Disturbance, check_disturbance

logger = logging.getLogger(__name__)

MIN_STEPS = 100
MIN_SAMPLES = 5
STEP_RTOL = 1e-6
STEP_ATOL = 1e-15
ABSORBED_TOL_MW = 1e-6


@dataclass(frozen=True, eq=False)
class SimulationState:
    r"""
    State of the multi-machine swing system at time ``t``.

    Args:
        delta_g: Rotor angle deviations, rad.
        omega_g: Speed deviations, rad/s.
        theta_d: Load-bus angle deviations, rad, solved from the network equations.
        theta_swing: Part of ``theta_d`` driven by the rotor angles, ``theta_d - theta_d(0+)``.
        t: Time after the disturbance, s.
    """

    delta_g: torch.Tensor
    omega_g: torch.Tensor
    theta_d: torch.Tensor
    theta_swing: torch.Tensor
    t: float


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    r"""
    Uniformly sampled response to a disturbance.

    Args:
        times: Sample times ``k * dt``, s.
        bus_ids: Generator buses followed by load buses, in column order.
        freq_hz: Frequency deviation per sample and bus, Hz.
        rocof_hz_per_s: Central-difference RoCoF per sample and bus, Hz/s.
        absorbed_mw: Total electrical power picked up by the generators per sample, MW.
        dt: Step size, s.
    """

    times: torch.Tensor
    bus_ids: List[str]
    freq_hz: torch.Tensor
    rocof_hz_per_s: torch.Tensor
    absorbed_mw: torch.Tensor
    dt: float

    def __len__(self) -> int:
        return self.times.shape[0]


class SwingSystem:
    r"""
    Lossless swing equations of the generators coupled through the algebraic DC network.

    .. math::

        \dot\delta_i = \omega_i, \qquad
        \frac{2 H_i}{f_0} \frac{\dot\omega_i}{2\pi} = -\Delta p_{e,i}

    with ``Delta p_e = (B_GG delta + B_GB theta_D) s_base`` and
    ``B_BB theta_D = dP_D - B_BG delta``. Load injections stay constant except
    for the step at the disturbed bus. There is no damping and no governor.
    """

    def __init__(self, grid: GridModel, blocks: SusceptanceBlocks, d: Disturbance) -> None:
        self.blocks = blocks
        self.f0 = grid.f0
        self.h_n = torch.tensor(grid.inertia(), dtype=DTYPE)
        self.dp_d_m = torch.zeros(blocks.m, dtype=DTYPE)
        self.dp_d_m[blocks.load_index[d.bus]] = -d.p_dis / blocks.s_base
        self.theta0_m = solve_bbb(blocks, self.dp_d_m)

    def theta_swing(self, delta_g: torch.Tensor) -> torch.Tensor:
        # solved apart from theta_d(0+) so differencing it loses no digits
        return solve_bbb(self.blocks, -(self.blocks.b_bg_mn @ delta_g))

    def theta_d(self, delta_g: torch.Tensor) -> torch.Tensor:
        return self.theta0_m + self.theta_swing(delta_g)

    def electrical_power(self, delta_g: torch.Tensor, theta_d: torch.Tensor) -> torch.Tensor:
        """Change of generator electrical output, MW."""
        return (self.blocks.b_gg_nn @ delta_g + self.blocks.b_gb_nm @ theta_d) * self.blocks.s_base

    def derivative(self, delta_g: torch.Tensor, omega_g: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        dp_e_n = self.electrical_power(delta_g, self.theta_d(delta_g))
        return omega_g, -math.pi * self.f0 * dp_e_n / self.h_n

    def state(self, delta_g: torch.Tensor, omega_g: torch.Tensor, t: float) -> SimulationState:
        theta_swing = self.theta_swing(delta_g)
        return SimulationState(
            delta_g=delta_g,
            omega_g=omega_g,
            theta_d=self.theta0_m + theta_swing,
            t=t,
            theta_swing=theta_swing,
        )

    def rk4_step(self, s: SimulationState, dt: float) -> SimulationState:
        k1_d, k1_w = self.derivative(s.delta_g, s.omega_g)
        k2_d, k2_w = self.derivative(s.delta_g + 0.5 * dt * k1_d, s.omega_g + 0.5 * dt * k1_w)
        k3_d, k3_w = self.derivative(s.delta_g + 0.5 * dt * k2_d, s.omega_g + 0.5 * dt * k2_w)
        k4_d, k4_w = self.derivative(s.delta_g + dt * k3_d, s.omega_g + dt * k3_w)
        delta_g = s.delta_g + dt / 6 * (k1_d + 2 * k2_d + 2 * k3_d + k4_d)
        omega_g = s.omega_g + dt / 6 * (k1_w + 2 * k2_w + 2 * k3_w + k4_w)
        return self.state(delta_g, omega_g, s.t + dt)


def _check_step(system: SwingSystem, s0: SimulationState, dt: float) -> None:
    # step doubling on the first step
    full = system.rk4_step(s0, dt)
    half = system.rk4_step(system.rk4_step(s0, dt / 2), dt / 2)
    y_full = torch.cat([full.delta_g, full.omega_g])
    y_half = torch.cat([half.delta_g, half.omega_g])
    error = float(((y_full - y_half).abs() / 15).max())
    scale = float(y_half.abs().max())
    if error > STEP_RTOL * scale + STEP_ATOL:
        raise StepSizeError(
            f"step size {dt:g} s rejected: local truncation error {error:.3e} exceeds "
            f"{STEP_RTOL:g} of the state magnitude {scale:.3e}"
        )


def simulate_swing(grid: GridModel, d: Disturbance, horizon: float, dt: float) -> SimulationTrace:
    r"""
    Integrate the swing equations after a load step with a fixed-step RK4 scheme.

    Generator frequency is the speed deviation over ``2 pi``. Load-bus frequency
    is ``(1 / 2 pi) d theta_D / dt``, taken by central differences of the sampled
    angles with second-order one-sided differences at both ends.

    Example::

        >>> trace = simulate_swing(single_grid, Disturbance("L1", 150.0), horizon=0.1, dt=1e-3)
        >>> initial_rocof_estimate(trace)
        tensor([-3.7500, -3.7500], dtype=torch.float64)

    Args:
        grid (GridModel): Valid grid.
        d (Disturbance): Disturbance at a load bus; a zero step is allowed and yields a flat trace.
        horizon (float): Simulated time, s.
        dt (float): Step size, at most ``horizon / 100``, s.

    Raises:
        ValueError: If ``dt`` or ``horizon`` are out of range.
        StepSizeError: If the first step's local truncation error is too large.
    """
    if not (math.isfinite(dt) and math.isfinite(horizon) and dt > 0 and horizon > 0):
        raise ValueError(f"dt and horizon must be positive and finite, got dt={dt} and horizon={horizon}")
    n_steps = int(round(horizon / dt))
    if n_steps < MIN_STEPS:
        raise ValueError(f"dt={dt:g} s must not exceed horizon/{MIN_STEPS} = {horizon / MIN_STEPS:g} s")
    check_disturbance(grid, d, allow_zero=True)

    blocks = assemble_blocks(grid)
    system = SwingSystem(grid, blocks, d)
    zero_n = torch.zeros(grid.n, dtype=DTYPE)
    s = system.state(zero_n, zero_n.clone(), 0.0)
    _check_step(system, s, dt)

    omega_tn = torch.empty((n_steps + 1, grid.n), dtype=DTYPE)
    theta_tm = torch.empty((n_steps + 1, grid.m), dtype=DTYPE)
    absorbed_t = torch.empty(n_steps + 1, dtype=DTYPE)
    for k in range(n_steps + 1):
        if k > 0:
            s = system.rk4_step(s, dt)
        omega_tn[k] = s.omega_g
        theta_tm[k] = s.theta_swing
        absorbed_t[k] = system.electrical_power(s.delta_g, s.theta_d).sum()

    bookkeeping = float((absorbed_t - d.p_dis).abs().max())
    if bookkeeping > ABSORBED_TOL_MW:
        raise InternalConsistencyError(
            f"generators absorb up to {bookkeeping:.3e} MW more or less than the {d.p_dis:g} MW step"
        )

    gen_freq_tn = omega_tn / (2 * math.pi)
    (theta_rate_tm,) = torch.gradient(theta_tm, spacing=dt, dim=0, edge_order=2)
    freq_tb = torch.cat([gen_freq_tn, theta_rate_tm / (2 * math.pi)], dim=1)
    (rocof_tb,) = torch.gradient(freq_tb, spacing=dt, dim=0, edge_order=2)

    logger.debug("simulated %s for %g s in %d steps", d.name, horizon, n_steps)
    return SimulationTrace(
        times=torch.arange(n_steps + 1, dtype=DTYPE) * dt,
        bus_ids=list(grid.bus_ids),
        freq_hz=freq_tb,
        rocof_hz_per_s=rocof_tb,
        absorbed_mw=absorbed_t,
        dt=dt,
    )


def initial_rocof_estimate(trace: SimulationTrace) -> torch.Tensor:
    r"""
    Initial RoCoF per bus, ``(f[2] - f[0]) / (2 dt)``, Hz/s.

    The slope over the first two steps is second-order accurate in ``dt`` for
    the generator buses, whose frequency starts with zero curvature.

    Raises:
        ValueError: If the trace has fewer than five samples.
    """
    if len(trace) < MIN_SAMPLES:
        raise ValueError(f"trace too short: {len(trace)} samples, at least {MIN_SAMPLES} required")
    return (trace.freq_hz[2] - trace.freq_hz[0]) / (2 * trace.dt)
