import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional
import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import bisect
from rotorkick.basis import (
    InteractionKind,
    RotorOperator,
    RotorState,
    build_cos,
    build_observable,
)
from rotorkick.errors import (
    DegenerateSpectrumError,
    MonotonicityError,
    NumericalError,
    StationaryTargetError,
    ValidationError,
)
from rotorkick.logger import logger
from rotorkick.search import STATIONARY_TOL, ObservableSignal

DEGENERACY_GAP: float = 1e-8
EIGEN_RESIDUAL_TOL: float = 1e-10
DURATION_SAMPLES: int = 4096
# two-level subspaces hold a single beat or a stationary target
DURATION_MONOTONE_FROM: int = 3


class Extremum(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True, eq=False)
class TargetState:
    """An extremal eigenvector of a projected observable and its eigenvalue (the kinematic bound).

    Attributes:
        state: The target vector chi.
        bound: <chi|O|chi>, the best value reachable inside the subspace.
        extremum: Whether the target maximizes or minimizes the observable.
        observable_kind: Which observable the target belongs to, when known.
        observable: The operator the target was built from. Analytic targets
            carry the exact projected operator of the same size.
        approximate: True for the closed-form orientation target.
    """
    state: RotorState
    bound: float
    extremum: Extremum
    observable_kind: Optional[InteractionKind]
    observable: RotorOperator
    approximate: bool = False


class EfficiencyDurationPoint(BaseModel):
    """One row of the efficiency/duration scan.

    A stationary target (an eigenstate of J^2) has no duration.
    """
    n: int = Field(ge=2)
    kind: InteractionKind
    efficiency: float = Field(gt=0, lt=1)
    duration_fraction: Optional[float] = Field(default=None, ge=0, lt=1)
    stationary: bool = False

    model_config = {
        "frozen": True
    }

    @model_validator(mode='after')
    def _duration_unless_stationary(self) -> 'EfficiencyDurationPoint':
        if self.stationary != (self.duration_fraction is None):
            raise ValueError("duration_fraction is required exactly when the target is not stationary")
        return self


class TargetDiscrepancy(BaseModel):
    """Comparison between the exact orientation target and its closed-form approximation."""
    n: int
    exact_bound: float
    approximate_bound: float
    difference: float
    fidelity: float

    model_config = {
        "frozen": True
    }


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    # largest-magnitude coefficient real and positive
    k = int(np.argmax(np.abs(vector)))
    return vector * (abs(vector[k]) / vector[k])


def target_state(
    obs: RotorOperator,
    extremum: Extremum = Extremum.MAXIMIZE,
    kind: Optional[InteractionKind] = None,
) -> TargetState:
    """Top (or bottom) eigenvector of a Hermitian observable.

    Raises:
        DegenerateSpectrumError: If the extremal eigenvalue is degenerate (gap <= 1e-8).
        NumericalError: If the eigen-residual exceeds 1e-10.
    """
    extremum = Extremum(extremum)
    values, vectors = obs.eigensystem
    index = obs.dim - 1 if extremum == Extremum.MAXIMIZE else 0
    if obs.dim > 1:
        neighbour = index - 1 if extremum == Extremum.MAXIMIZE else index + 1
        gap = abs(values[index] - values[neighbour])
        if gap <= DEGENERACY_GAP:
            logger.error(f"Extremal eigenvalue is degenerate (gap {gap:.3e})")
            raise DegenerateSpectrumError(f"Extremal eigenvalue {values[index]:.12f} is degenerate (gap {gap:.3e})")
    vector = _fix_phase(np.array(vectors[:, index]))
    bound = float(values[index])
    residual = float(np.linalg.norm(obs.entries @ vector - bound * vector))
    if residual > EIGEN_RESIDUAL_TOL:
        raise NumericalError(f"Target eigen-residual {residual:.3e} exceeds {EIGEN_RESIDUAL_TOL}")
    return TargetState(
        state=RotorState(vector),
        bound=bound,
        extremum=extremum,
        observable_kind=InteractionKind(kind) if kind is not None else None,
        observable=obs,
    )


def analytic_orientation_target(n: int) -> TargetState:
    """Closed-form orientation target c_j = sqrt(2/(n+1)) sin(pi (j+1)/(n+1)) with bound cos(pi/(n+1)).

    It diagonalizes the cos chain with all couplings set to 1/2, which is the
    large-j limit of the exact couplings.
    """
    if n < 2:
        raise ValidationError(f"n must be at least 2, got: {n}")
    j = np.arange(n)
    coefficients = np.sqrt(2.0 / (n + 1)) * np.sin(math.pi * (j + 1) / (n + 1))
    return TargetState(
        state=RotorState(coefficients),
        bound=math.cos(math.pi / (n + 1)),
        extremum=Extremum.MAXIMIZE,
        observable_kind=InteractionKind.ORIENTATION,
        observable=build_cos(None, n),
        approximate=True,
    )


def target_discrepancy(n: int) -> TargetDiscrepancy:
    exact = target_state(build_cos(None, n), Extremum.MAXIMIZE, InteractionKind.ORIENTATION)
    approximate = analytic_orientation_target(n)
    fidelity = abs(np.vdot(exact.state.amplitudes, approximate.state.amplitudes)) ** 2
    return TargetDiscrepancy(
        n=n,
        exact_bound=exact.bound,
        approximate_bound=approximate.bound,
        difference=exact.bound - approximate.bound,
        fidelity=float(fidelity),
    )


def is_stationary(target: TargetState, epsilon: float) -> bool:
    """True if <O> stays constant while the target evolves freely for one period."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")
    signal = ObservableSignal(target.state, target.observable, epsilon)
    grid = np.linspace(0.0, math.pi / epsilon, DURATION_SAMPLES + 1)
    return float(np.ptp(signal.values(grid))) < STATIONARY_TOL


def duration_above(target: TargetState, epsilon: float, threshold: float = 0.5) -> float:
    """Fraction of the rotational period during which the freely evolving target stays beyond threshold.

    Only the contiguous window around s=0 is measured; its ends are located
    by bisection between grid samples. For a minimizing target the window is
    where the observable stays below the threshold. The result is below one.

    Raises:
        ValidationError: If the threshold is not strictly inside the target's
            bound, or the observable never crosses it.
        StationaryTargetError: If <O> does not change under free evolution.
    """
    sign = 1.0 if target.extremum == Extremum.MAXIMIZE else -1.0
    if sign * (target.bound - threshold) <= 0:
        logger.error(f"Threshold {threshold} is not inside the bound {target.bound}")
        raise ValidationError(f"Threshold {threshold} must be strictly inside the target bound {target.bound}")
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")
    if is_stationary(target, epsilon):
        raise StationaryTargetError(f"<O> stays at {target.bound:.6f} under free evolution; the target has no duration")
    signal = ObservableSignal(target.state, target.observable, epsilon)
    period = math.pi / epsilon

    def excess(s: float) -> float:
        return sign * (signal.value(s) - threshold)

    grid = np.linspace(0.0, period, DURATION_SAMPLES + 1)
    inside = sign * (signal.values(grid) - threshold) > 0
    if inside.all():
        logger.error(f"<O> never crosses threshold {threshold}")
        raise ValidationError(f"<O> stays beyond threshold {threshold} for the whole period")
    xtol = 1e-9 * period
    first_out = int(np.argmax(~inside))
    forward = bisect(excess, grid[first_out - 1], grid[first_out], xtol=xtol) if excess(grid[first_out]) < 0 else grid[first_out]
    last_out = int(inside.size - 1 - np.argmax(~inside[::-1]))
    backward = bisect(excess, grid[last_out], grid[last_out + 1], xtol=xtol) if excess(grid[last_out]) < 0 else grid[last_out]
    return float((forward + (period - backward)) / period)


def efficiency_duration_scan(
    n_range: Iterable[int],
    kind: InteractionKind = InteractionKind.ORIENTATION,
    epsilon: float = 0.03,
    threshold: float = 0.5,
) -> List[EfficiencyDurationPoint]:
    """Target efficiency and time spent above threshold as the subspace grows.

    n_range must increase. Efficiency must increase strictly with n and,
    from n = 3 on, the duration must decrease strictly; stationary targets
    carry no duration and are skipped by the duration check.

    Raises:
        ValidationError: If an n is below 2.
        MonotonicityError: If either trend is broken.
    """
    kind = InteractionKind(kind)
    points = []
    for n in n_range:
        if n < 2:
            raise ValidationError(f"n must be at least 2, got: {n}")
        target = target_state(build_observable(None, kind, n), Extremum.MAXIMIZE, kind)
        if is_stationary(target, epsilon):
            point = EfficiencyDurationPoint(n=n, kind=kind, efficiency=target.bound, stationary=True)
        else:
            point = EfficiencyDurationPoint(
                n=n,
                kind=kind,
                efficiency=target.bound,
                duration_fraction=duration_above(target, epsilon, threshold),
            )
        points.append(point)
        logger.debug(f"{kind.value} n={n}: efficiency={point.efficiency:.6f} duration={point.duration_fraction}")
    for previous, current in zip(points, points[1:]):
        if current.efficiency <= previous.efficiency:
            logger.error(f"Efficiency does not increase from n={previous.n} to n={current.n}")
            raise MonotonicityError(f"Efficiency does not increase from n={previous.n} to n={current.n}")
        timed = previous.duration_fraction is not None and current.duration_fraction is not None
        if timed and previous.n >= DURATION_MONOTONE_FROM and current.duration_fraction >= previous.duration_fraction:
            logger.error(f"Duration does not decrease from n={previous.n} to n={current.n}")
            raise MonotonicityError(f"Duration does not decrease from n={previous.n} to n={current.n}")
    return points
