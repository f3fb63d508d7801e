"""Unit tests for free evolution, kicks, schedule propagation and pulse areas."""
import math
import numpy as np
import pydantic
import pytest
from rotorkick.basis import (
    InteractionKind,
    RotorState,
    build_cos,
    build_cos2,
    expectation,
)
from rotorkick.errors import ValidationError
from rotorkick.propagator import (
    KickEvent,
    PhysicalPulse,
    apply_unitary,
    evolve_between,
    free_evolve,
    kick_unitary,
    observable_derivative,
    period,
    propagate_schedule,
    pulse_area,
    state_at,
    to_t_over_trot,
)
from rotorkick.units import debye_to_au, ps_to_au, v_per_cm_to_au, wavenumber_to_au

EPSILON: float = 0.03


def _fidelity(a: RotorState, b: RotorState) -> float:
    return abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2


def test_free_evolution_is_periodic() -> None:
    state = RotorState.normalized([1, 0.5j, -0.3, 0.2, 0.1])
    evolved = free_evolve(state, EPSILON, period(EPSILON))
    assert _fidelity(evolved, state) == pytest.approx(1.0, abs=1e-12)


def test_free_evolution_phase_of_first_level() -> None:
    s = 7.3
    evolved = free_evolve(RotorState.basis_state(3, 1), EPSILON, s)
    assert evolved.amplitudes[1] == pytest.approx(np.exp(-2j * EPSILON * s))


def test_two_level_orientation_oscillates() -> None:
    state = RotorState.normalized([1, 1])
    for s in [0.0, 5.0, 20.0, 51.0]:
        value = expectation(free_evolve(state, EPSILON, s), build_cos(None, 2))
        assert value == pytest.approx(math.cos(2 * EPSILON * s) / math.sqrt(3), abs=1e-12)


def test_free_evolution_rejects_negative_step() -> None:
    with pytest.raises(ValidationError):
        free_evolve(RotorState.basis_state(2), EPSILON, -1.0)


def test_zero_area_kick_is_identity() -> None:
    assert np.array_equal(kick_unitary(build_cos(None, 4), 0.0), np.eye(4))


@pytest.mark.parametrize('area', [0.3, 1.0, -2.5])
def test_kick_is_unitary_and_commutes_with_coupling(area: float) -> None:
    cos = build_cos(None, 6).entries
    u = kick_unitary(build_cos(None, 6), area)
    assert np.allclose(u @ u.conj().T, np.eye(6), atol=1e-12)
    assert np.allclose(u @ cos, cos @ u, atol=1e-12)


def test_two_level_kick_closed_form() -> None:
    area = 0.8
    cos = build_cos(None, 2).entries
    expected = math.cos(area / math.sqrt(3)) * np.eye(2) + 1j * math.sqrt(3) * math.sin(area / math.sqrt(3)) * cos
    assert np.allclose(kick_unitary(build_cos(None, 2), area), expected, atol=1e-12)


def test_kick_leaves_observable_unchanged() -> None:
    state = RotorState.normalized([0.7, 0.2 + 0.4j, 0.1, -0.3, 0.2])
    cos2 = build_cos2(None, 5)
    kicked = apply_unitary(state, kick_unitary(cos2, 1.5))
    assert expectation(kicked, cos2) == pytest.approx(expectation(state, cos2), abs=1e-12)


def test_empty_schedule_keeps_ground_state_flat() -> None:
    trajectory = propagate_schedule(RotorState.basis_state(5), [], EPSILON, build_cos(None, 5))
    assert np.allclose(trajectory.expectation, 0.0, atol=1e-15)
    assert trajectory.s[-1] >= period(EPSILON)


def test_single_orientation_kick_first_maximum() -> None:
    kick = KickEvent(s_time=0.0, area=1.0, kind=InteractionKind.ORIENTATION)
    trajectory = propagate_schedule(RotorState.basis_state(5), [kick], EPSILON, build_cos(None, 5))
    assert float(np.max(trajectory.expectation)) == pytest.approx(0.5, abs=0.05)
    assert np.allclose(trajectory.norm, 1.0, atol=1e-10)


@pytest.mark.parametrize('dim', [5, 40])
def test_single_alignment_kick_first_maximum(dim: int) -> None:
    kick = KickEvent(s_time=0.0, area=1.5, kind=InteractionKind.ALIGNMENT)
    trajectory = propagate_schedule(RotorState.basis_state(dim), [kick], EPSILON, build_cos2(None, dim))
    assert float(np.max(trajectory.expectation)) == pytest.approx(0.612, abs=2e-3)


def test_samples_do_not_jump_at_kick_instants() -> None:
    cos = build_cos(None, 6)
    step = period(EPSILON) / 400
    kicks = [KickEvent(s_time=k * step, area=1.0, kind=InteractionKind.ORIENTATION) for k in (40, 100)]
    full = propagate_schedule(RotorState.basis_state(6), kicks, EPSILON, cos, sampling=step)
    first_only = propagate_schedule(RotorState.basis_state(6), kicks[:1], EPSILON, cos, sampling=step)
    # a kick commutes with <cos> at its own instant
    assert np.allclose(full.expectation[:101], first_only.expectation[:101], atol=1e-10)
    assert abs(full.expectation[110] - first_only.expectation[110]) > 1e-3
    assert np.allclose(full.norm, 1.0, atol=1e-10)


def test_sample_at_kick_time_sees_kicked_state() -> None:
    state = RotorState.basis_state(5)
    kick = KickEvent(s_time=0.0, area=1.0, kind=InteractionKind.ORIENTATION)
    trajectory = propagate_schedule(state, [kick], EPSILON, build_cos(None, 5))
    kicked = apply_unitary(state, kick_unitary(build_cos(None, 5), 1.0))
    assert trajectory.expectation[0] == pytest.approx(expectation(kicked, build_cos(None, 5)), abs=1e-12)


def test_trajectory_matches_state_at() -> None:
    kicks = [
        KickEvent(s_time=0.0, area=1.0, kind='orientation'),
        KickEvent(s_time=12.5, area=1.0, kind='orientation'),
    ]
    cos = build_cos(None, 6)
    trajectory = propagate_schedule(RotorState.basis_state(6), kicks, EPSILON, cos)
    index = 3000
    at = state_at(RotorState.basis_state(6), kicks, EPSILON, float(trajectory.s[index]))
    assert trajectory.expectation[index] == pytest.approx(expectation(at, cos), abs=1e-10)


def test_evolve_between_composes() -> None:
    kicks = [KickEvent(s_time=4.0, area=0.7, kind='orientation'), KickEvent(s_time=9.0, area=0.7, kind='orientation')]
    start = RotorState.normalized([1, 0.2, 0.1])
    direct = evolve_between(start, kicks, EPSILON, 0.0, 15.0)
    middle = evolve_between(start, kicks, EPSILON, 0.0, 6.0)
    stepped = evolve_between(middle, kicks, EPSILON, 6.0, 15.0)
    assert np.allclose(direct.amplitudes, stepped.amplitudes, atol=1e-12)


def test_unsorted_schedule_is_rejected() -> None:
    kicks = [KickEvent(s_time=5.0, area=1.0, kind='orientation'), KickEvent(s_time=1.0, area=1.0, kind='orientation')]
    with pytest.raises(ValidationError):
        propagate_schedule(RotorState.basis_state(3), kicks, EPSILON, build_cos(None, 3))


def test_kick_event_validation() -> None:
    with pytest.raises(pydantic.ValidationError):
        KickEvent(s_time=-1.0, area=1.0, kind='orientation')
    with pytest.raises(pydantic.ValidationError):
        KickEvent(s_time=0.0, area=0.0, kind='orientation')
    kick = KickEvent(s_time=period(EPSILON), area=1.0, kind='alignment')
    assert kick.t_over_trot(EPSILON) == pytest.approx(1.0)


def test_projection_and_leakage_are_recorded() -> None:
    kick = KickEvent(s_time=0.0, area=1.0, kind='orientation')
    target = RotorState.normalized([1, 1, 1, 1, 1])
    trajectory = propagate_schedule(
        RotorState.basis_state(40), [kick], EPSILON, build_cos(None, 40), target=target, control_dim=5,
    )
    assert trajectory.projection_sq is not None
    assert np.all(trajectory.projection_sq <= 1.0 + 1e-12)
    assert trajectory.leakage is not None
    assert 0.0 < trajectory.max_leakage < 0.1


def test_observable_derivative_matches_finite_difference() -> None:
    state = RotorState.normalized([0.6, 0.3 + 0.5j, 0.2, -0.1j])
    cos = build_cos(None, 4)
    h = 1e-4
    forward = expectation(free_evolve(state, EPSILON, h), cos)
    # backward step: evolve a full period minus h
    backward = expectation(free_evolve(state, EPSILON, period(EPSILON) - h), cos)
    numeric = (forward - backward) / (2 * h)
    assert observable_derivative(state, cos, EPSILON) == pytest.approx(numeric, rel=1e-6)


def test_time_conversion() -> None:
    assert to_t_over_trot(period(0.01), 0.01) == pytest.approx(1.0)


def test_unit_conversions() -> None:
    assert ps_to_au(1.0) == pytest.approx(41341.37, rel=1e-6)
    assert debye_to_au(1.0) == pytest.approx(0.393430, rel=1e-5)
    assert v_per_cm_to_au(5.14220674763e9) == pytest.approx(1.0, rel=1e-8)
    assert wavenumber_to_au(219474.6313632) == pytest.approx(1.0, rel=1e-9)


def test_flat_pulse_areas() -> None:
    pulse = PhysicalPulse(envelope=[0.5] * 11, duration=4.0, b_rot=0.01, mu0=0.5, delta_alpha=3.0)
    assert pulse_area(pulse, InteractionKind.ORIENTATION) == pytest.approx(1.0)
    assert pulse_area(pulse, InteractionKind.ALIGNMENT) == pytest.approx(1.5)


def test_pulse_needs_three_samples() -> None:
    pulse = PhysicalPulse(envelope=[1.0, 1.0], duration=1.0, b_rot=0.01, mu0=1.0)
    with pytest.raises(ValidationError):
        pulse_area(pulse, 'orientation')


def test_pulse_outside_sudden_regime_is_rejected() -> None:
    with pytest.raises(pydantic.ValidationError):
        PhysicalPulse(envelope=[1.0] * 5, duration=100.0, b_rot=0.01, mu0=1.0)


def test_licl_orientation_pulse() -> None:
    pulse = PhysicalPulse.from_lab_units(
        duration_ps=0.3, field_v_per_cm=1.5e5, b_rot_wavenumber=0.706, dipole_debye=7.1,
    )
    assert pulse.epsilon == pytest.approx(0.04, rel=0.1)
    assert pulse_area(pulse, 'orientation') == pytest.approx(1.0, rel=0.15)
