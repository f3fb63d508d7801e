from rotorkick.simulator import Simulator
from rotorkick.basis import BasisSpec, InteractionKind, RotorOperator, RotorState
from rotorkick.propagator import KickEvent, PhysicalPulse, Trajectory
from rotorkick.target import Extremum, TargetState
from rotorkick.strategy import MaximaMode, Scheme, StrategyConfig, StrategyRun
from rotorkick.scenario import Scenario, Perturbations
from rotorkick.errors import (
    RotorKickError,
    ValidationError,
    ConfigError,
    NumericalError,
    FilesystemError,
    FixedPointSignal,
    MonotonicityError,
    RankInstabilityError,
    StationaryTargetError,
)

__all__ = [
    "Simulator",
    "BasisSpec",
    "InteractionKind",
    "RotorOperator",
    "RotorState",
    "KickEvent",
    "PhysicalPulse",
    "Trajectory",
    "Extremum",
    "TargetState",
    "MaximaMode",
    "Scheme",
    "StrategyConfig",
    "StrategyRun",
    "Scenario",
    "Perturbations",
    "RotorKickError",
    "ValidationError",
    "ConfigError",
    "NumericalError",
    "FilesystemError",
    "FixedPointSignal",
    "MonotonicityError",
    "RankInstabilityError",
    "StationaryTargetError",
]
