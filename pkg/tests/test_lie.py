"""Unit tests for the ad sequence, real spans, Lie closures and the spectrum check."""
import math
import numpy as np
import pytest
from scipy.stats import unitary_group
from rotorkick.basis import InteractionKind, RotorOperator, build_cos, build_cos2, build_j2, build_observable
from rotorkick.errors import DimensionMismatchError, RankInstabilityError, ValidationError
from rotorkick.lie import (
    ad_sequence,
    dim_v,
    equally_spaced,
    lie_closure_basis,
    lie_closure_dim,
    lie_report,
    real_span_rank,
    v_generators,
)
from rotorkick.strategy import boundary_coefficient


def _rotated(op: RotorOperator, w: np.ndarray) -> RotorOperator:
    m = w @ op.entries @ w.conj().T
    return RotorOperator(0.5 * (m + m.conj().T))


def test_first_commutator_two_levels() -> None:
    (first,) = ad_sequence(build_j2(None, 2), build_cos(None, 2), 1)
    assert np.allclose(first, -first.T)
    assert abs(first[0, 1]) == pytest.approx(2 / math.sqrt(3))


def test_commuting_pair_gives_zero_sequence() -> None:
    h0 = build_j2(None, 3)
    obs = RotorOperator(np.diag([1.0, 2.0, 3.0]))
    assert all(np.allclose(m, 0) for m in ad_sequence(h0, obs, 4))
    assert dim_v(h0, obs) == 0


@pytest.mark.parametrize('n', [3, 4, 5])
def test_second_commutator_matches_truncated_identity(n: int) -> None:
    cos = build_cos(None, n).entries
    boundary = np.zeros((n, n))
    boundary[-1, -1] = boundary_coefficient(n)
    _, second = ad_sequence(build_j2(None, n), build_cos(None, n), 2)
    assert np.allclose(second, 2 * (cos @ cos - np.eye(n) + boundary), atol=1e-12)


def test_v_generators_are_skew_hermitian() -> None:
    for m in v_generators(build_j2(None, 4), build_cos(None, 4), 5):
        assert np.allclose(m, -m.conj().T, atol=1e-12)


def test_real_span_rank_examples() -> None:
    m = np.array([[0.0, 1.0], [-1.0, 0.0]])
    other = np.array([[0.0, 1j], [1j, 0.0]])
    assert real_span_rank([m, 2 * m]) == 1
    assert real_span_rank([m, 1j * m]) == 2
    assert real_span_rank([m, other, m + other]) == 2
    with pytest.raises(ValidationError):
        real_span_rank([])
    with pytest.raises(DimensionMismatchError):
        real_span_rank([m, np.zeros((3, 3))])


def test_rank_near_the_tolerance_is_rejected() -> None:
    m = np.array([[0.0, 1.0], [-1.0, 0.0]])
    other = np.array([[0.0, 1j], [1j, 0.0]])
    with pytest.raises(RankInstabilityError):
        real_span_rank([m, m + 1e-10 * other])
    assert real_span_rank([m, m + 1e-6 * other]) == 2


def test_closure_rejects_nearly_parallel_generators() -> None:
    h0 = build_j2(None, 3)
    cos = build_cos(None, 3).entries
    tilt = 1e-10 * np.linalg.norm(h0.entries) / np.linalg.norm(cos)
    with pytest.raises(RankInstabilityError):
        lie_closure_dim(h0, RotorOperator(h0.entries + tilt * cos))


@pytest.mark.parametrize('n,closure,v', [(3, 9, 4), (4, 16, 8), (5, 25, 12)])
def test_orientation_dimensions(n: int, closure: int, v: int) -> None:
    h0 = build_j2(None, n)
    cos = build_cos(None, n)
    assert lie_closure_dim(h0, cos) == closure
    assert dim_v(h0, cos) == v


def test_identical_generators_close_on_themselves() -> None:
    h0 = build_j2(None, 3)
    assert lie_closure_dim(h0, h0) == 1


def test_decoupled_blocks_are_not_controllable() -> None:
    block = np.array([[0.0, 1.0], [1.0, 0.0]])
    h_int = RotorOperator(np.kron(np.eye(2), block))
    assert lie_closure_dim(build_j2(None, 4), h_int) < 16


@pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
@pytest.mark.parametrize('kind', list(InteractionKind))
def test_dim_v_never_exceeds_bound(n: int, kind: InteractionKind) -> None:
    assert dim_v(build_j2(None, n), build_observable(None, kind, n)) <= n * (n - 1)


@pytest.mark.parametrize('kind,n', [('alignment', 3), ('orientation', 4)])
def test_v_space_lies_in_closure(kind: str, n: int) -> None:
    h0 = build_j2(None, n)
    obs = build_observable(None, kind, n)
    closure = [np.concatenate([q.real.ravel(), q.imag.ravel()]) for q in lie_closure_basis(h0, obs)]
    for m in v_generators(h0, obs, 6):
        vector = np.concatenate([m.real.ravel(), m.imag.ravel()])
        norm = np.linalg.norm(vector)
        if norm < 1e-12:
            continue
        vector = vector / norm
        rest = vector - sum(np.dot(q, vector) * q for q in closure)
        assert np.linalg.norm(rest) < 1e-9


def test_alignment_three_levels_is_parity_split() -> None:
    report = lie_report('alignment', 3)
    assert report.dim_v == 2
    assert report.dim_closure < 9
    assert not report.controllable


def test_dimensions_survive_unitary_change_of_basis() -> None:
    w = unitary_group.rvs(4, random_state=7)
    h0 = build_j2(None, 4)
    cos = build_cos(None, 4)
    assert dim_v(_rotated(h0, w), _rotated(cos, w)) == dim_v(h0, cos)
    assert lie_closure_dim(_rotated(h0, w), _rotated(cos, w)) == lie_closure_dim(h0, cos)


def test_equally_spaced() -> None:
    assert equally_spaced([0.0, 1.0, 2.0])
    assert not equally_spaced([0.0, 1.0, 3.0, 7.0])
    assert equally_spaced(build_cos(None, 5).eigensystem[0])
    with pytest.raises(ValidationError):
        equally_spaced([1.0])


def test_report_for_four_level_orientation() -> None:
    report = lie_report(InteractionKind.ORIENTATION, 4)
    assert report.dim_closure == 16
    assert report.dim_v == 8
    assert report.max_dim_v == 12
    assert report.controllable
    assert not report.unique_eigen_fixed_points
    assert report.equally_spaced_spectrum
    assert report.within_proven_hypotheses


def test_report_flags_foreign_coupling() -> None:
    report = lie_report('orientation', 3, h_int=build_cos2(None, 3))
    assert not report.within_proven_hypotheses


def test_mismatched_dimensions_are_rejected() -> None:
    with pytest.raises(DimensionMismatchError):
        dim_v(build_j2(None, 3), build_cos(None, 4))
