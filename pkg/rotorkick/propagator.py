import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple
import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.integrate import simpson
from rotorkick.basis import (
    InteractionKind,
    RotorOperator,
    RotorState,
    build_j2,
    build_observable,
    embed_or_truncate,
    require_normalized,
    require_same_dim,
    quadratic_form,
)
from rotorkick.errors import ValidationError, DimensionMismatchError
from rotorkick.logger import logger
from rotorkick.units import ps_to_au, v_per_cm_to_au, debye_to_au, wavenumber_to_au

SAMPLES_PER_PERIOD: int = 4096
SUDDEN_EPSILON_LIMIT: float = 0.2


def period(epsilon: float) -> float:
    """Free-evolution period pi/epsilon in rescaled time."""
    return math.pi / epsilon


def to_t_over_trot(s, epsilon: float):
    """Rescaled time s expressed as a fraction of the rotational period."""
    return epsilon * s / math.pi


class PhysicalPulse(BaseModel):
    """A sampled pulse envelope together with the molecular constants that turn it into a kick.

    All quantities are in atomic units. The envelope is sampled uniformly on
    the rescaled pulse interval s in [0, 1].
    """
    envelope: List[float]
    duration: float = Field(gt=0)
    b_rot: float = Field(gt=0)
    mu0: float = 0.0
    delta_alpha: float = 0.0
    alpha_perp: float = 0.0
    max_epsilon: float = Field(default=SUDDEN_EPSILON_LIMIT, gt=0)

    model_config = {
        "frozen": True
    }

    @field_validator('envelope')
    @classmethod
    def _finite_envelope(cls, value: List[float]) -> List[float]:
        if not all(math.isfinite(v) for v in value):
            raise ValueError("envelope samples must be finite")
        return value

    @model_validator(mode='after')
    def _sudden_regime(self) -> 'PhysicalPulse':
        if self.epsilon >= self.max_epsilon:
            raise ValueError(
                f"tau * B = {self.epsilon:.4g} is outside the sudden regime (limit {self.max_epsilon})"
            )
        return self

    @property
    def epsilon(self) -> float:
        return self.duration * self.b_rot

    @classmethod
    def from_lab_units(
        cls,
        duration_ps: float,
        field_v_per_cm: float,
        b_rot_wavenumber: float,
        dipole_debye: float = 0.0,
        delta_alpha: float = 0.0,
        alpha_perp: float = 0.0,
        samples: int = 101,
    ) -> 'PhysicalPulse':
        """Flat-top pulse from laboratory units (ps, V/cm, cm^-1, Debye; polarizabilities in a.u.)."""
        return cls(
            envelope=[v_per_cm_to_au(field_v_per_cm)] * samples,
            duration=ps_to_au(duration_ps),
            b_rot=wavenumber_to_au(b_rot_wavenumber),
            mu0=debye_to_au(dipole_debye),
            delta_alpha=delta_alpha,
            alpha_perp=alpha_perp,
        )


class KickEvent(BaseModel):
    """An instantaneous kick at rescaled time s_time with pulse area `area`."""
    s_time: float = Field(ge=0)
    area: float
    kind: InteractionKind

    model_config = {
        "frozen": True
    }

    @field_validator('area')
    @classmethod
    def _nonzero_area(cls, value: float) -> float:
        if not math.isfinite(value) or value == 0:
            raise ValueError(f"area must be finite and nonzero, got {value}")
        return value

    def t_over_trot(self, epsilon: float) -> float:
        return to_t_over_trot(self.s_time, epsilon)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Observables sampled on a uniform grid of rescaled time.

    projection_sq is present when a target was supplied and leakage when the
    propagation ran in a basis larger than the control subspace.
    """
    s: np.ndarray
    expectation: np.ndarray
    norm: np.ndarray
    epsilon: float
    kicks: Tuple[KickEvent, ...]
    final_state: RotorState
    projection_sq: Optional[np.ndarray] = None
    leakage: Optional[np.ndarray] = None

    @property
    def t_over_trot(self) -> np.ndarray:
        return to_t_over_trot(self.s, self.epsilon)

    @property
    def max_leakage(self) -> float:
        if self.leakage is None:
            return 0.0
        return float(np.max(self.leakage))


def pulse_area(pulse: PhysicalPulse, kind: InteractionKind) -> float:
    """Dimensionless kick strength: integral over s in [0, 1] of the rescaled coupling.

    Orientation integrates mu0 * tau * f(s); alignment integrates
    delta_alpha * tau * f(s)^2 / 2. Composite Simpson quadrature on the
    envelope samples.
    """
    kind = InteractionKind(kind)
    if len(pulse.envelope) < 3:
        raise ValidationError(f"Pulse envelope needs at least 3 samples, got {len(pulse.envelope)}")
    f = np.asarray(pulse.envelope, dtype=float)
    s = np.linspace(0.0, 1.0, f.size)
    if kind == InteractionKind.ORIENTATION:
        integrand = pulse.mu0 * pulse.duration * f
    else:
        integrand = pulse.delta_alpha * pulse.duration * f ** 2 / 2.0
    return float(simpson(integrand, x=s))


def _phases(dim: int, epsilon: float, delta_s) -> np.ndarray:
    j = np.arange(dim, dtype=float)
    energies = j * (j + 1)
    return np.exp(-1j * epsilon * np.multiply.outer(delta_s, energies))


def free_evolve(state: RotorState, epsilon: float, delta_s: float) -> RotorState:
    """Field-free rotation exp(-i epsilon J^2 delta_s), applied as phases on each level."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")
    if delta_s < 0:
        raise ValidationError(f"delta_s must be non-negative, got: {delta_s}")
    return RotorState(_phases(state.dim, epsilon, delta_s) * state.amplitudes)


def kick_unitary(h_int: RotorOperator, area: float) -> np.ndarray:
    """U = exp(i A H_I) from the Hermitian eigendecomposition of H_I."""
    if area == 0:
        return np.eye(h_int.dim, dtype=complex)
    values, vectors = h_int.eigensystem
    return (vectors * np.exp(1j * area * values)) @ vectors.conj().T


def apply_unitary(state: RotorState, unitary: np.ndarray) -> RotorState:
    if unitary.shape != (state.dim, state.dim):
        raise DimensionMismatchError(f"Unitary shape {unitary.shape} does not match state dimension {state.dim}")
    return RotorState(unitary @ state.amplitudes)


@lru_cache(maxsize=64)
def interaction_operator(kind: InteractionKind, dim: int) -> RotorOperator:
    """Kick coupling for a kind of pulse in a basis of the given size, shared across calls."""
    return build_observable(None, InteractionKind(kind), dim)


def observable_derivative(state: RotorState, observable: RotorOperator, epsilon: float) -> float:
    """d<O>/ds under free evolution: i epsilon <[J^2, O]>."""
    require_same_dim(state, observable)
    j2 = build_j2(None, state.dim).entries
    commutator = j2 @ observable.entries - observable.entries @ j2
    return float((1j * epsilon * quadratic_form(state, commutator)).real)


class _KickApplier:
    def __init__(self, dim: int):
        self.dim = dim
        self._unitaries = {}

    def __call__(self, state: RotorState, kick: KickEvent) -> RotorState:
        key = (kick.kind, kick.area)
        if key not in self._unitaries:
            self._unitaries[key] = kick_unitary(interaction_operator(kick.kind, self.dim), kick.area)
        return apply_unitary(state, self._unitaries[key])


def _check_sorted(kicks: Sequence[KickEvent]) -> None:
    for previous, current in zip(kicks, kicks[1:]):
        if current.s_time < previous.s_time:
            logger.error(f"Kick at s={current.s_time} follows a kick at s={previous.s_time}")
            raise ValidationError("Kicks must be sorted by s_time")


def evolve_between(
    state: RotorState,
    kicks: Sequence[KickEvent],
    epsilon: float,
    s_from: float,
    s_to: float,
) -> RotorState:
    """Propagate a state known at s_from (after any kick at s_from) up to s_to.

    Kicks with s_from < s_time <= s_to are applied at their times.
    """
    if s_to < s_from:
        raise ValidationError(f"s_to ({s_to}) precedes s_from ({s_from})")
    _check_sorted(kicks)
    apply_kick = _KickApplier(state.dim)
    current = s_from
    for kick in kicks:
        if kick.s_time <= s_from or kick.s_time > s_to:
            continue
        state = free_evolve(state, epsilon, kick.s_time - current)
        state = apply_kick(state, kick)
        current = kick.s_time
    return free_evolve(state, epsilon, s_to - current)


def state_at(initial: RotorState, kicks: Sequence[KickEvent], epsilon: float, s: float) -> RotorState:
    """State at rescaled time s when `initial` is the state just before s=0.

    Kicks at s_time <= s are applied, including one exactly at s.
    """
    _check_sorted(kicks)
    apply_kick = _KickApplier(initial.dim)
    for kick in kicks:
        if kick.s_time == 0:
            initial = apply_kick(initial, kick)
    return evolve_between(initial, kicks, epsilon, 0.0, s)


def propagate_schedule(
    initial: RotorState,
    kicks: Sequence[KickEvent],
    epsilon: float,
    observable: RotorOperator,
    sampling: Optional[float] = None,
    target: Optional[RotorState] = None,
    control_dim: Optional[int] = None,
    extend_periods: float = 1.0,
) -> Trajectory:
    """Alternate free evolution and kicks, recording observables on a uniform s-grid.

    The grid starts at s=0 and runs at least `extend_periods` free-evolution
    periods past the last kick. A sample taken at a kick time already sees
    the kicked state.

    Args:
        initial: State just before s=0.
        kicks: Kick schedule, sorted by s_time.
        epsilon: Rescaled rotational constant tau * B.
        observable: Operator whose expectation is recorded, in the basis of `initial`.
        sampling: Grid step in s. Defaults to one period over SAMPLES_PER_PERIOD.
        target: Optional target state; it is zero-padded when smaller than `initial`.
        control_dim: When given and smaller than the basis, the population above
            the first control_dim levels is recorded as leakage.
        extend_periods: How many periods to follow after the last kick.

    Returns:
        Trajectory: The sampled observables and the state at the end of the grid.
    """
    require_same_dim(initial, observable)
    require_normalized(initial)
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")
    step = sampling if sampling is not None else period(epsilon) / SAMPLES_PER_PERIOD
    if step <= 0:
        raise ValidationError(f"Sampling step must be positive, got: {step}")
    kicks = list(kicks)
    _check_sorted(kicks)
    target_amplitudes = None
    if target is not None:
        if target.dim > initial.dim:
            raise DimensionMismatchError(f"Target dimension {target.dim} exceeds state dimension {initial.dim}")
        target_amplitudes = embed_or_truncate(target, initial.dim)[0].amplitudes
    last_kick = kicks[-1].s_time if kicks else 0.0
    n_steps = int(math.ceil((last_kick + extend_periods * period(epsilon)) / step))
    s_grid = np.arange(n_steps + 1) * step
    apply_kick = _KickApplier(initial.dim)
    m = observable.entries
    expectation_values = np.empty(s_grid.size)
    norms = np.empty(s_grid.size)
    projections = np.empty(s_grid.size) if target_amplitudes is not None else None
    leakage = None
    if control_dim is not None and control_dim < initial.dim:
        leakage = np.empty(s_grid.size)
    state = initial
    segment_start = 0.0
    boundaries = [k.s_time for k in kicks] + [math.inf]
    kick_index = 0
    sample_index = 0
    while sample_index < s_grid.size:
        while kick_index < len(kicks) and kicks[kick_index].s_time <= s_grid[sample_index]:
            kick = kicks[kick_index]
            state = free_evolve(state, epsilon, kick.s_time - segment_start)
            state = apply_kick(state, kick)
            segment_start = kick.s_time
            logger.debug(f"Applied kick {kick_index} at s={kick.s_time:.6f}")
            kick_index += 1
        stop = int(np.searchsorted(s_grid, boundaries[kick_index], side='left'))
        stop = max(stop, sample_index + 1)
        segment = s_grid[sample_index:stop]
        psi = _phases(state.dim, epsilon, segment - segment_start) * state.amplitudes
        expectation_values[sample_index:stop] = np.einsum('ki,ij,kj->k', psi.conj(), m, psi).real
        populations = np.abs(psi) ** 2
        norms[sample_index:stop] = np.sqrt(populations.sum(axis=1))
        if projections is not None:
            projections[sample_index:stop] = np.abs(psi @ target_amplitudes.conj()) ** 2
        if leakage is not None:
            leakage[sample_index:stop] = populations[:, control_dim:].sum(axis=1)
        sample_index = stop
    final_state = free_evolve(state, epsilon, s_grid[-1] - segment_start)
    logger.debug(f"Propagated {len(kicks)} kicks over {s_grid.size} samples")
    return Trajectory(
        s=s_grid,
        expectation=expectation_values,
        norm=norms,
        epsilon=epsilon,
        kicks=tuple(kicks),
        final_state=final_state,
        projection_sq=projections,
        leakage=leakage,
    )
