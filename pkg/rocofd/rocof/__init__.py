from .engine import (
    Disturbance,
    ImpactDistribution,
    PropagationMatrix,
    RoCoFReport,
    check_disturbance,
    coi_rocof,
    distribute_impact,
    generator_rocof,
    load_rocof,
    nodal_rocof_report,
    propagation_matrix,
)
from .screening import ALL_LOAD_BUSES, ScreeningResult, expand_contingencies, screen_contingencies, trip_generator

__all__ = [
    "ALL_LOAD_BUSES",
    "check_disturbance",
    "coi_rocof",
    "distribute_impact",
    "Disturbance",
    "expand_contingencies",
    "generator_rocof",
    "ImpactDistribution",
    "load_rocof",
    "nodal_rocof_report",
    "propagation_matrix",
    "PropagationMatrix",
    "RoCoFReport",
    "screen_contingencies",
    "ScreeningResult",
    "trip_generator",
]
