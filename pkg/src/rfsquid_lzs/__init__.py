"""Rate-equation simulator for Landau-Zener-Stueckelberg interference in a
strongly driven multi-level rf-SQUID qubit.

All energies and rates are plain frequencies in GHz.
"""

from .bessel import bessel_j, bessel_j_table
from .rates import (
    DriveParams,
    EscapeParams,
    LZRateParams,
    ThermalParams,
    beta_from_temperature,
    escape_rate,
    interwell_rate,
    lz_rate,
    lz_rate_resonant,
)
from .levels import CrossingSpec, LevelDiagram, detuning_at, epsilon10_at
from .kinetics import (
    KineticParams,
    ModelKind,
    OccupationVector,
    RateMatrix,
    build_generator_4,
    build_generator_6,
    evolve,
    left_population,
    steady_state,
)

__version__ = "0.1.0"

__all__ = [
    "bessel_j",
    "bessel_j_table",
    "DriveParams",
    "EscapeParams",
    "LZRateParams",
    "ThermalParams",
    "beta_from_temperature",
    "escape_rate",
    "interwell_rate",
    "lz_rate",
    "lz_rate_resonant",
    "CrossingSpec",
    "LevelDiagram",
    "detuning_at",
    "epsilon10_at",
    "KineticParams",
    "ModelKind",
    "OccupationVector",
    "RateMatrix",
    "build_generator_4",
    "build_generator_6",
    "evolve",
    "left_population",
    "steady_state",
]
