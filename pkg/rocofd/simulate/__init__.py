from .swing import SimulationState, SimulationTrace, SwingSystem, initial_rocof_estimate, simulate_swing

__all__ = [
    "initial_rocof_estimate",
    "simulate_swing",
    "SimulationState",
    "SimulationTrace",
    "SwingSystem",
]
