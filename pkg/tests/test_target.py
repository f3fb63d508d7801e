"""Unit tests for optimal targets, their time above threshold and the efficiency/duration scan."""
import math
import numpy as np
import pydantic
import pytest
from rotorkick.basis import InteractionKind, RotorOperator, build_cos, build_cos2
from rotorkick.errors import DegenerateSpectrumError, MonotonicityError, StationaryTargetError, ValidationError
from rotorkick.propagator import apply_unitary, kick_unitary
from rotorkick.target import (
    EfficiencyDurationPoint,
    Extremum,
    TargetState,
    analytic_orientation_target,
    duration_above,
    efficiency_duration_scan,
    is_stationary,
    target_discrepancy,
    target_state,
)

EPSILON: float = 0.03


def _sampled_duration(target: TargetState, samples: int = 200_000) -> float:
    # count grid points above 1/2 on both sides of s = 0
    n = target.state.dim
    j = np.arange(n)
    s = np.linspace(0.0, math.pi / EPSILON, samples + 1)
    evolved = target.state.amplitudes[None, :] * np.exp(-1j * EPSILON * np.outer(s, j * (j + 1)))
    values = np.einsum('si,ij,sj->s', evolved.conj(), target.observable.entries, evolved).real
    above = values > 0.5
    forward = int(np.argmin(above))
    backward = int(np.argmin(above[::-1]))
    return (forward + backward - 1) / samples


def test_orientation_bound_for_five_levels() -> None:
    target = target_state(build_cos(None, 5), Extremum.MAXIMIZE, InteractionKind.ORIENTATION)
    assert 0.88 <= target.bound <= 0.92


def test_alignment_bound_for_five_levels() -> None:
    target = target_state(build_cos2(None, 5), Extremum.MAXIMIZE, InteractionKind.ALIGNMENT)
    assert 0.83 <= target.bound <= 0.87


def test_two_level_orientation_target() -> None:
    target = target_state(build_cos(None, 2))
    assert target.bound == pytest.approx(1 / math.sqrt(3))
    assert np.allclose(target.state.amplitudes, [1 / math.sqrt(2)] * 2)


def test_target_phase_convention() -> None:
    target = target_state(build_cos2(None, 6))
    amplitudes = target.state.amplitudes
    k = int(np.argmax(np.abs(amplitudes)))
    assert amplitudes[k].imag == 0
    assert amplitudes[k].real > 0


def test_minimizing_target_mirrors_maximizing() -> None:
    top = target_state(build_cos(None, 5), Extremum.MAXIMIZE)
    bottom = target_state(build_cos(None, 5), Extremum.MINIMIZE)
    assert bottom.bound == pytest.approx(-top.bound, abs=1e-12)


@pytest.mark.parametrize('dim', [3, 5, 8])
def test_target_is_kick_eigenvector(dim: int) -> None:
    cos = build_cos(None, dim)
    target = target_state(cos)
    residual = np.linalg.norm(cos.entries @ target.state.amplitudes - target.bound * target.state.amplitudes)
    assert residual < 1e-10
    kicked = apply_unitary(target.state, kick_unitary(cos, 1.0))
    expected = np.exp(1j * target.bound) * target.state.amplitudes
    assert np.linalg.norm(kicked.amplitudes - expected) < 1e-10


def test_degenerate_top_eigenvalue_is_rejected() -> None:
    with pytest.raises(DegenerateSpectrumError):
        target_state(RotorOperator(np.diag([1.0, 1.0, 0.0])))


def test_analytic_target_small_cases() -> None:
    two = analytic_orientation_target(2)
    assert np.allclose(two.state.amplitudes, [1 / math.sqrt(2)] * 2)
    five = analytic_orientation_target(5)
    assert five.bound == pytest.approx(math.cos(math.pi / 6))
    assert five.approximate
    assert five.state.norm == pytest.approx(1.0)


def test_analytic_target_is_close_to_exact() -> None:
    discrepancy = target_discrepancy(5)
    assert discrepancy.fidelity > 0.99
    assert discrepancy.difference == pytest.approx(discrepancy.exact_bound - discrepancy.approximate_bound)
    assert 0 < discrepancy.difference < 0.05


def test_discrepancy_shrinks_with_dimension() -> None:
    differences = [target_discrepancy(n).difference for n in range(2, 11)]
    assert all(later < earlier for earlier, later in zip(differences, differences[1:]))
    assert all(d < 0.05 for d in differences[3:])


def test_two_level_duration_is_a_sixth() -> None:
    target = target_state(build_cos(None, 2))
    # (1/sqrt 3) cos(2 eps s) > 1/2 for |2 eps s| < pi/6
    assert duration_above(target, EPSILON, 0.5) == pytest.approx(1 / 6, abs=1e-6)


def test_five_level_durations() -> None:
    orientation = target_state(build_cos(None, 5))
    alignment = target_state(build_cos2(None, 5))
    assert duration_above(orientation, EPSILON, 0.5) == pytest.approx(0.1288, abs=1e-3)
    assert duration_above(orientation, EPSILON, 0.5) == pytest.approx(_sampled_duration(orientation), abs=1e-4)
    assert duration_above(alignment, EPSILON, 0.5) == pytest.approx(0.1, abs=0.01)
    assert duration_above(alignment, EPSILON, 0.5) == pytest.approx(_sampled_duration(alignment), abs=1e-4)


@pytest.mark.parametrize('epsilon', [0.01, 0.03, 0.1])
def test_duration_is_a_fraction_of_the_period(epsilon: float) -> None:
    target = target_state(build_cos(None, 5))
    assert duration_above(target, epsilon, 0.5) == pytest.approx(duration_above(target, EPSILON, 0.5), abs=1e-9)


def test_duration_rejects_unreachable_threshold() -> None:
    target = target_state(build_cos(None, 2))
    with pytest.raises(ValidationError):
        duration_above(target, EPSILON, 0.6)


def test_stationary_target_has_no_duration() -> None:
    target = target_state(build_cos2(None, 2))
    assert is_stationary(target, EPSILON)
    assert not is_stationary(target_state(build_cos(None, 2)), EPSILON)
    with pytest.raises(StationaryTargetError):
        duration_above(target, EPSILON, 0.5)


def test_scan_orientation_efficiency_increases() -> None:
    points = efficiency_duration_scan(range(2, 13), InteractionKind.ORIENTATION, EPSILON)
    efficiencies = [p.efficiency for p in points]
    durations = [p.duration_fraction for p in points]
    assert all(later > earlier for earlier, later in zip(efficiencies, efficiencies[1:]))
    assert [p.n for p in points] == list(range(2, 13))
    # three levels stay above threshold longer than two
    assert durations[1] > durations[0]
    assert all(later < earlier for earlier, later in zip(durations[1:], durations[2:]))
    assert all(0 < d < 1 for d in durations)


def test_scan_two_level_alignment_is_stationary() -> None:
    points = efficiency_duration_scan(range(2, 7), InteractionKind.ALIGNMENT, EPSILON)
    assert points[0].efficiency == pytest.approx(0.6)
    assert points[0].stationary
    assert points[0].duration_fraction is None
    assert all(not p.stationary and 0 < p.duration_fraction < 1 for p in points[1:])


def test_scan_rejects_decreasing_efficiency() -> None:
    with pytest.raises(MonotonicityError):
        efficiency_duration_scan([5, 4], InteractionKind.ORIENTATION, EPSILON)


def test_point_duration_stays_below_one() -> None:
    with pytest.raises(pydantic.ValidationError):
        EfficiencyDurationPoint(n=2, kind=InteractionKind.ALIGNMENT, efficiency=0.6, duration_fraction=1.0)
    with pytest.raises(pydantic.ValidationError):
        EfficiencyDurationPoint(n=2, kind=InteractionKind.ALIGNMENT, efficiency=0.6, stationary=True, duration_fraction=0.1)


def test_scan_rejects_small_dimension() -> None:
    with pytest.raises(ValidationError):
        efficiency_duration_scan([1], InteractionKind.ORIENTATION)
