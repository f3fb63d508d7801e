"""Controllability algebra for the kicked rotor.

Matrices are compared as real vectors: the real parts of all entries
followed by the imaginary parts. Ranks and closures are computed over the
reals, since the Lie algebra u(N) of skew-Hermitian matrices is a real space.
"""
from typing import List, Optional, Sequence
import numpy as np
from pydantic import BaseModel
from rotorkick.basis import InteractionKind, RotorOperator, build_j2, build_observable
from rotorkick.errors import DimensionMismatchError, RankInstabilityError, ValidationError
from rotorkick.logger import logger

RANK_RTOL: float = 1e-10
STABLE_DEPTHS: int = 3
SPACING_TOL: float = 1e-9
# commutators below this Frobenius norm are treated as exact zeros
ZERO_NORM: float = 1e-12


class LieReport(BaseModel):
    """Dimensions of the Lie closure and of the fixed-point space for one observable.

    `within_proven_hypotheses` is False when the kick coupling differs from the
    observable; the N(N-1) criterion is then reported but not backed by theory.
    """
    n: int
    kind: InteractionKind
    dim_closure: int
    dim_v: int
    max_dim_v: int
    controllable: bool
    unique_eigen_fixed_points: bool
    equally_spaced_spectrum: bool
    within_proven_hypotheses: bool

    model_config = {
        "frozen": True
    }


def _flatten(matrix: np.ndarray) -> np.ndarray:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def _unflatten(vector: np.ndarray, n: int) -> np.ndarray:
    half = n * n
    return (vector[:half] + 1j * vector[half:]).reshape(n, n)


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _check_pair(h0: RotorOperator, obs: RotorOperator, n: Optional[int]) -> int:
    if h0.dim != obs.dim:
        raise DimensionMismatchError(f"Operator dimensions differ: {h0.dim} and {obs.dim}")
    if n is not None and n != h0.dim:
        raise DimensionMismatchError(f"n={n} does not match operator dimension {h0.dim}")
    if h0.dim < 2:
        raise ValidationError(f"Dimension must be at least 2, got: {h0.dim}")
    return h0.dim


def ad_sequence(h0: RotorOperator, obs: RotorOperator, depth: int) -> List[np.ndarray]:
    """ad^1 .. ad^depth with ad^0 = H0 and ad^n = [ad^(n-1), O]."""
    if h0.dim != obs.dim:
        raise DimensionMismatchError(f"Operator dimensions differ: {h0.dim} and {obs.dim}")
    if depth < 1:
        raise ValidationError(f"depth must be at least 1, got: {depth}")
    current = np.array(h0.entries)
    sequence = []
    for _ in range(depth):
        current = _commutator(current, obs.entries)
        sequence.append(current)
    return sequence


def _stable_rank(singular: np.ndarray, rtol: float) -> int:
    def rank_at(tol: float) -> int:
        return int(np.sum(singular > tol * singular[0]))

    rank = rank_at(rtol)
    if rank_at(rtol * 10) != rank or rank_at(rtol / 10) != rank:
        logger.error(f"Rank {rank} changes under a tenfold change of rtol={rtol}")
        raise RankInstabilityError(f"Rank {rank} is not stable under a tenfold change of rtol={rtol}")
    return rank


def real_span_rank(matrices: Sequence[np.ndarray], rtol: float = RANK_RTOL) -> int:
    """Dimension of the real span of a list of equally shaped matrices.

    Columns are normalized before the SVD and singular values below
    rtol * sigma_max are discarded.

    Raises:
        RankInstabilityError: If the rank changes when rtol is scaled by ten
            in either direction.
    """
    if not matrices:
        raise ValidationError("real_span_rank needs at least one matrix")
    shape = np.shape(matrices[0])
    if any(np.shape(m) != shape for m in matrices):
        raise DimensionMismatchError("All matrices must share one shape")
    columns = [_flatten(np.asarray(m, dtype=complex)) for m in matrices]
    columns = [c / np.linalg.norm(c) for c in columns if np.linalg.norm(c) > 0]
    if not columns:
        return 0
    singular = np.linalg.svd(np.column_stack(columns), compute_uv=False)
    return _stable_rank(singular, rtol)


class _RealBasis:
    """Orthonormal real basis of a growing span.

    A candidate joins when the singular values of the basis stacked with the
    normalized candidate give a larger rank under the same rule as
    real_span_rank; the stored direction is its re-orthogonalized residual.
    """
    def __init__(self, rtol: float = RANK_RTOL):
        self.rtol = rtol
        self.vectors: List[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.vectors)

    def residual(self, vector: np.ndarray) -> np.ndarray:
        for _ in range(2):
            for q in self.vectors:
                vector = vector - np.dot(q, vector) * q
        return vector

    def add(self, matrix: np.ndarray) -> bool:
        vector = _flatten(matrix)
        norm = np.linalg.norm(vector)
        if norm <= ZERO_NORM:
            return False
        unit = vector / norm
        singular = np.linalg.svd(np.column_stack(self.vectors + [unit]), compute_uv=False)
        if _stable_rank(singular, self.rtol) <= len(self.vectors):
            return False
        rest = self.residual(unit)
        self.vectors.append(rest / np.linalg.norm(rest))
        return True


def v_generators(h0: RotorOperator, obs: RotorOperator, depth: int) -> List[np.ndarray]:
    """Skew-Hermitian representatives i^(n-1) ad^n of the ad sequence, n = 1..depth."""
    return [(1j ** n) * m for n, m in enumerate(ad_sequence(h0, obs, depth))]


def dim_v(h0: RotorOperator, obs: RotorOperator, n: Optional[int] = None) -> int:
    """Real dimension of the space spanned by the ad sequence of H0 against O.

    Successive elements are generated Arnoldi-style, commuting the latest
    orthonormalized direction with O, which spans the same space as the raw
    sequence without its loss of conditioning. The depth grows until the rank
    has not changed for three consecutive depths, capped at n^2.
    """
    n = _check_pair(h0, obs, n)
    basis = _RealBasis()
    candidate = _commutator(h0.entries, obs.entries)
    unchanged = 0
    for depth in range(1, n * n + 1):
        if basis.add(candidate):
            unchanged = 0
            candidate = 1j * _commutator(_unflatten(basis.vectors[-1], n), obs.entries)
        else:
            unchanged += 1
            if unchanged >= STABLE_DEPTHS:
                break
            scale = np.linalg.norm(candidate)
            candidate = 1j * _commutator(candidate / scale if scale > 0 else candidate, obs.entries)
    logger.debug(f"dim V = {len(basis)} for n={n}")
    return len(basis)


def lie_closure_basis(h0: RotorOperator, h_int: RotorOperator, n: Optional[int] = None) -> List[np.ndarray]:
    """Orthonormal real basis (as matrices) of the Lie algebra generated by i H0 and i H_I.

    All pairwise commutators involving at least one element added in the
    previous round are tested, until a round adds nothing.
    """
    n = _check_pair(h0, h_int, n)
    basis = _RealBasis()
    basis.add(1j * h0.entries)
    basis.add(1j * h_int.entries)
    fresh_from = 0
    rounds = 0
    while fresh_from < len(basis) and len(basis) < n * n:
        elements = [_unflatten(v, n) for v in basis.vectors]
        previous_size = len(basis)
        for i in range(fresh_from, previous_size):
            for j in range(previous_size):
                if j >= fresh_from and j >= i:
                    continue
                basis.add(_commutator(elements[i], elements[j]))
                if len(basis) == n * n:
                    break
            if len(basis) == n * n:
                break
        fresh_from = previous_size
        rounds += 1
        logger.debug(f"Closure round {rounds}: dimension {len(basis)}")
    return [_unflatten(v, n) for v in basis.vectors]


def lie_closure_dim(h0: RotorOperator, h_int: RotorOperator, n: Optional[int] = None) -> int:
    """Real dimension of the Lie closure; the system is controllable when it equals n^2."""
    return len(lie_closure_basis(h0, h_int, n))


def equally_spaced(spectrum: Sequence[float], tol: float = SPACING_TOL) -> bool:
    """True if two distinct pairs of levels share the same gap (within tol)."""
    if len(spectrum) < 2:
        raise ValidationError("equally_spaced needs at least two levels")
    values = np.sort(np.asarray(spectrum, dtype=float))
    gaps = np.sort(np.concatenate([values[k + 1:] - values[k] for k in range(values.size - 1)]))
    return bool(np.any(np.diff(gaps) <= tol))


def lie_report(kind: InteractionKind, n: int, h_int: Optional[RotorOperator] = None) -> LieReport:
    """Closure, fixed-point space and spectrum checks for the rotor with H0 = J^2.

    The kick coupling defaults to the observable itself.
    """
    kind = InteractionKind(kind)
    h0 = build_j2(None, n)
    obs = build_observable(None, kind, n)
    same_coupling = h_int is None or (h_int.dim == n and bool(np.allclose(h_int.entries, obs.entries, atol=1e-12)))
    if not same_coupling:
        logger.warning("Kick coupling differs from the observable; the N(N-1) criterion is outside its proven hypotheses")
    closure = lie_closure_dim(h0, h_int if h_int is not None else obs, n)
    v = dim_v(h0, obs, n)
    return LieReport(
        n=n,
        kind=kind,
        dim_closure=closure,
        dim_v=v,
        max_dim_v=n * (n - 1),
        controllable=closure == n * n,
        unique_eigen_fixed_points=v == n * (n - 1),
        equally_spaced_spectrum=equally_spaced(obs.eigensystem[0]),
        within_proven_hypotheses=same_coupling,
    )
