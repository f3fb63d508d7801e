import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence, Tuple
import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from rotorkick.basis import (
    InteractionKind,
    RotorOperator,
    RotorState,
    build_cos2,
    build_j2,
    build_observable,
    build_sin2_2theta,
    expectation,
    quadratic_form,
    require_normalized,
    require_same_dim,
)
from rotorkick.errors import FixedPointSignal, NotAtExtremumError, ValidationError, DimensionMismatchError
from rotorkick.logger import logger
from rotorkick.propagator import (
    KickEvent,
    apply_unitary,
    free_evolve,
    kick_unitary,
    observable_derivative,
    period,
)
from rotorkick.search import (
    MaximaMode,
    ObservableSignal,
    ProjectionSignal,
    find_maximum,
    projection_fixed_point,
)
from rotorkick.target import Extremum, TargetState, target_state

DEFAULT_AREAS = {
    InteractionKind.ORIENTATION: 1.0,
    InteractionKind.ALIGNMENT: 1.5,
}
DEFAULT_STOP_GAINS = {
    InteractionKind.ORIENTATION: 3e-3,
    InteractionKind.ALIGNMENT: 1e-2,
}
DEFAULT_MAX_KICKS: int = 40
EXTREMUM_TOL: float = 1e-8
FIXED_POINT_TOL: float = 1e-8
EIGENVECTOR_OVERLAP_TOL: float = 1e-6


class Scheme(str, Enum):
    S1 = "S1"
    S2 = "S2"


class SlopeSpace(str, Enum):
    INFINITE = "infinite"
    FINITE = "finite"


class FixedPointKind(str, Enum):
    EIGENVECTOR = "eigenvector-fixed-point"
    NON_EIGENVECTOR_MEMBER = "non-eigenvector-member"
    NOT_FIXED = "not-fixed"


class StrategyConfig(BaseModel):
    """Closed-loop kick-timing settings.

    When `area` is omitted it defaults to 1.0 for orientation kicks and 1.5
    for alignment kicks. An omitted `stop_gain` defaults to 3e-3 for
    orientation and 1e-2 for alignment.
    """
    scheme: Scheme = Scheme.S1
    maxima_mode: MaximaMode = MaximaMode.GLOBAL_IN_PERIOD
    kick_kind: InteractionKind = InteractionKind.ORIENTATION
    area: float
    epsilon: float = Field(default=0.03, gt=0)
    n_control: int = Field(default=5, ge=2)
    max_kicks: int = Field(default=DEFAULT_MAX_KICKS, ge=1)
    stop_gain: float = Field(ge=0)

    model_config = {
        "frozen": True
    }

    @model_validator(mode='before')
    @classmethod
    def _defaults_by_kind(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        kind = InteractionKind(data.get('kick_kind', InteractionKind.ORIENTATION))
        if data.get('area') is None:
            data['area'] = DEFAULT_AREAS[kind]
        if data.get('stop_gain') is None:
            data['stop_gain'] = DEFAULT_STOP_GAINS[kind]
        return data

    @field_validator('area')
    @classmethod
    def _nonzero_area(cls, value: float) -> float:
        if not math.isfinite(value) or value == 0:
            raise ValueError(f"area must be finite and nonzero, got {value}")
        return value


@dataclass(frozen=True, eq=False)
class StrategyRun:
    """Outcome of a closed-loop kick sequence.

    `delays` holds the free-evolution time before every kick after the first,
    exactly as used, so a schedule can be replayed bit for bit. `reachable[k]`
    is the largest <O> within one period of free evolution after k kicks.
    """
    config: StrategyConfig
    target: TargetState
    kicks: Tuple[KickEvent, ...]
    delays: Tuple[float, ...]
    values: Tuple[float, ...]
    projections: Tuple[float, ...]
    reachable: Tuple[float, ...]
    final_state: RotorState
    final_efficiency: float
    converged: bool
    fixed_point_label: Optional[int]


@dataclass(frozen=True)
class FixedPointVerdict:
    kind: FixedPointKind
    eigen_index: Optional[int]
    max_residual: float


def _require_free_evolution(epsilon: float) -> None:
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")


def next_extremum(
    state: RotorState,
    obs: RotorOperator,
    epsilon: float,
    mode: MaximaMode = MaximaMode.GLOBAL_IN_PERIOD,
) -> Tuple[float, float]:
    """Time and value of the next maximum of <O> under free evolution.

    Raises:
        FixedPointSignal: If <O> does not change during free evolution.
    """
    require_normalized(state)
    _require_free_evolution(epsilon)
    return find_maximum(ObservableSignal(state, obs, epsilon), period(epsilon), mode)


def next_projection_max(
    state: RotorState,
    target: TargetState,
    epsilon: float,
    mode: MaximaMode = MaximaMode.GLOBAL_IN_PERIOD,
) -> Tuple[float, float]:
    """Time and value of the next maximum of |<chi|psi(s)>|^2 under free evolution.

    Raises:
        FixedPointSignal: If the state already is the target or the projection is constant.
    """
    require_normalized(state)
    _require_free_evolution(epsilon)
    projection_fixed_point(state, target.state)
    return find_maximum(ProjectionSignal(state, target.state, epsilon), period(epsilon), mode)


def _projection(state: RotorState, target: TargetState) -> float:
    return float(abs(np.vdot(target.state.amplitudes, state.amplitudes)) ** 2)


def eigenvector_label(state: RotorState, obs: RotorOperator, tol: float = EIGENVECTOR_OVERLAP_TOL) -> Optional[int]:
    """Index (ascending eigenvalue order) of the eigenvector of `obs` the state coincides with, if any."""
    require_same_dim(state, obs)
    _, vectors = obs.eigensystem
    overlaps = np.abs(vectors.conj().T @ state.amplitudes) ** 2
    index = int(np.argmax(overlaps))
    if overlaps[index] > 1 - tol:
        return index
    return None


def final_efficiency(state: RotorState, obs: RotorOperator, epsilon: float) -> float:
    """Largest <O> reached within one period of free evolution after the last kick."""
    try:
        return next_extremum(state, obs, epsilon, MaximaMode.GLOBAL_IN_PERIOD)[1]
    except FixedPointSignal as e:
        return float(e.value)


def run_strategy(
    config: StrategyConfig,
    initial: Optional[RotorState] = None,
    extremum: Extremum = Extremum.MAXIMIZE,
) -> StrategyRun:
    """Alternate extremum search and kicks in the control subspace.

    The first kick is applied at s=0. Each following kick is placed at the
    next maximum of <O> (S1) or of the target projection (S2). The loop ends
    after max_kicks kicks, at a fixed point, or once the last kick raised the
    reachable efficiency (the largest <O> within the next period) by less
    than stop_gain. The gain test applies to global S1 and to S2; the local
    mode runs its full kick count.

    Args:
        config: Strategy settings.
        initial: Starting state in the control basis; the rotor ground state if None.
        extremum: Which eigenvector of the observable is the target.

    Returns:
        StrategyRun: The schedule, the per-kick series and the final state.
    """
    dim = config.n_control
    obs = build_observable(None, config.kick_kind, dim)
    target = target_state(obs, extremum, config.kick_kind)
    state = initial if initial is not None else RotorState.basis_state(dim, 0)
    if state.dim != dim:
        raise DimensionMismatchError(f"Initial state dimension {state.dim} does not match n_control={dim}")
    require_normalized(state)
    reachable = [final_efficiency(state, obs, config.epsilon)]
    unitary = kick_unitary(obs, config.area)
    epsilon = config.epsilon
    kicks = [KickEvent(s_time=0.0, area=config.area, kind=config.kick_kind)]
    values = [expectation(state, obs)]
    projections = [_projection(state, target)]
    delays = []
    state = apply_unitary(state, unitary)
    logger.debug(f"Kick 0 at s=0 value={values[0]:.12f} projection={projections[0]:.12f}")
    s_now = 0.0
    converged = False
    check_gain = config.scheme == Scheme.S2 or config.maxima_mode == MaximaMode.GLOBAL_IN_PERIOD
    while len(kicks) < config.max_kicks:
        try:
            if config.scheme == Scheme.S1:
                delay, value = next_extremum(state, obs, epsilon, config.maxima_mode)
            else:
                delay, _ = next_projection_max(state, target, epsilon, config.maxima_mode)
        except FixedPointSignal as e:
            logger.info(f"Fixed point reached after {len(kicks)} kicks: {e}")
            converged = True
            break
        if config.scheme == Scheme.S1 and config.maxima_mode == MaximaMode.GLOBAL_IN_PERIOD:
            reachable.append(value)
        else:
            reachable.append(final_efficiency(state, obs, epsilon))
        gain = reachable[-1] - reachable[-2]
        if check_gain and gain < config.stop_gain:
            logger.info(f"Gain {gain:.3e} below stop_gain after {len(kicks)} kicks")
            converged = True
            break
        state = free_evolve(state, epsilon, delay)
        s_now += delay
        delays.append(delay)
        kicks.append(KickEvent(s_time=s_now, area=config.area, kind=config.kick_kind))
        values.append(expectation(state, obs))
        projections.append(_projection(state, target))
        state = apply_unitary(state, unitary)
        logger.debug(
            f"Kick {len(kicks) - 1} at s={s_now:.9f} value={values[-1]:.12f} projection={projections[-1]:.12f}"
        )
    if len(reachable) == len(kicks):
        reachable.append(final_efficiency(state, obs, epsilon))
    return StrategyRun(
        config=config,
        target=target,
        kicks=tuple(kicks),
        delays=tuple(delays),
        values=tuple(values),
        projections=tuple(projections),
        reachable=tuple(reachable),
        final_state=state,
        final_efficiency=reachable[-1],
        converged=converged,
        fixed_point_label=eigenvector_label(state, obs),
    )


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def boundary_coefficient(dim: int) -> float:
    """(j_max+1)^2 / (2 j_max + 1) for the top level j_max = dim - 1 of a truncated basis."""
    j_max = dim - 1
    return (j_max + 1) ** 2 / (2 * j_max + 1)


def post_kick_slope(
    state: RotorState,
    area: float,
    kind: InteractionKind,
    space: SlopeSpace,
    epsilon: float,
) -> float:
    """Analytic d<O>/ds right after a kick applied at a free-evolution extremum.

    In the infinite space the slope is 2 eps A (1 - <cos^2>) for orientation
    and 2 A eps <sin^2 2theta> for alignment. The finite space adds the
    truncation terms up to second order in A: for orientation the boundary
    term B = -c |a_top|^2 and -2 c eps A^2 d_top Im(a_{top-1}^* a_top), for
    alignment the first two nested commutators with J^2.

    Raises:
        NotAtExtremumError: If d<O>/ds before the kick exceeds 1e-8 in magnitude.
    """
    kind = InteractionKind(kind)
    space = SlopeSpace(space)
    require_normalized(state)
    dim = state.dim
    obs = build_observable(None, kind, dim)
    before = observable_derivative(state, obs, epsilon)
    if abs(before) >= EXTREMUM_TOL:
        logger.error(f"State is not at an extremum (d<O>/ds = {before:.3e})")
        raise NotAtExtremumError(f"State is not at a free-evolution extremum (d<O>/ds = {before:.3e})")
    if space == SlopeSpace.INFINITE:
        if kind == InteractionKind.ORIENTATION:
            return 2 * epsilon * area * (1 - expectation(state, build_cos2(None, dim)))
        return 2 * area * epsilon * expectation(state, build_sin2_2theta(None, dim))
    a = state.amplitudes
    if kind == InteractionKind.ORIENTATION:
        c = boundary_coefficient(dim)
        top_coupling = obs.entries[dim - 2, dim - 1].real
        squared = obs.entries @ obs.entries
        boundary = -c * abs(a[-1]) ** 2
        first = 2 * epsilon * area * (1 - quadratic_form(state, squared).real + boundary)
        second = -2 * c * epsilon * area ** 2 * top_coupling * (a[-2].conjugate() * a[-1]).imag
        return float(first + second)
    o = obs.entries
    k = _commutator(build_j2(None, dim).entries, o)
    first_nested = _commutator(o, k)
    second_nested = _commutator(o, first_nested)
    slope = epsilon * area * quadratic_form(state, first_nested) \
        - 0.5j * epsilon * area ** 2 * quadratic_form(state, second_nested)
    return float(slope.real)


def classify_fixed_point(
    state: RotorState,
    obs: RotorOperator,
    h0: RotorOperator,
    area_samples: Sequence[float],
    h_int: Optional[RotorOperator] = None,
) -> FixedPointVerdict:
    """Decide whether a state is a fixed point of the kick strategy.

    A fixed point satisfies <psi|[H0, O]|psi> = 0 and the same condition after
    every kick exp(i A H_I) for the sampled areas. Fixed points that are
    eigenvectors of O are labelled with their index.
    """
    require_normalized(state)
    require_same_dim(state, obs)
    require_same_dim(state, h0)
    h_int = h_int if h_int is not None else obs
    commutator = _commutator(h0.entries, obs.entries)
    residuals = [abs(quadratic_form(state, commutator))]
    for area in area_samples:
        kicked = apply_unitary(state, kick_unitary(h_int, area))
        residuals.append(abs(quadratic_form(kicked, commutator)))
    max_residual = float(max(residuals))
    if max_residual >= FIXED_POINT_TOL:
        return FixedPointVerdict(FixedPointKind.NOT_FIXED, None, max_residual)
    index = eigenvector_label(state, obs)
    if index is not None:
        return FixedPointVerdict(FixedPointKind.EIGENVECTOR, index, max_residual)
    return FixedPointVerdict(FixedPointKind.NON_EIGENVECTOR_MEMBER, None, max_residual)
