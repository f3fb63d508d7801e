"""Truncated rigid-rotor basis |j, m=0>, j = 0..dim-1, and the operators acting on it."""
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple
import numpy as np
from pydantic import BaseModel, Field, model_validator
from rotorkick.logger import logger
from rotorkick.errors import (
    ValidationError,
    DimensionMismatchError,
    NotNormalizedError,
    NumericalError,
)

HERMITIAN_TOL: float = 1e-12
NORM_TOL: float = 1e-9
IMAG_RESIDUE_TOL: float = 1e-10


class InteractionKind(str, Enum):
    ORIENTATION = "orientation"
    ALIGNMENT = "alignment"


class BasisSpec(BaseModel):
    """Dimensions of the control subspace and of the reference basis used for exact propagation."""
    n_control: int = Field(default=5, ge=2)
    n_exact: int = 40

    model_config = {
        "frozen": True
    }

    @model_validator(mode='after')
    def _check_dimensions(self) -> 'BasisSpec':
        if self.n_exact <= self.n_control:
            raise ValueError(f"n_exact ({self.n_exact}) must exceed n_control ({self.n_control})")
        return self


@dataclass(frozen=True, eq=False)
class RotorOperator:
    """Dense Hermitian matrix on the truncated basis.

    The eigendecomposition is computed once on first use and shared by the
    kick unitaries, the target construction and the fixed-point labelling.
    """
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError(f"Operator must be a square matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("Operator entries must be finite")
        deviation = float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0
        if deviation > HERMITIAN_TOL:
            logger.error(f"Operator is not Hermitian (max deviation {deviation:.3e})")
            raise ValidationError(f"Operator is not Hermitian (max deviation {deviation:.3e})")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and the matching orthonormal eigenvectors (columns)."""
        try:
            values, vectors = np.linalg.eigh(self.entries)
        except np.linalg.LinAlgError as e:
            logger.error(f"Eigendecomposition failed: {e}")
            raise NumericalError(f"Eigendecomposition failed: {e}")
        values.setflags(write=False)
        vectors.setflags(write=False)
        return values, vectors


@dataclass(frozen=True, eq=False)
class RotorState:
    """Complex amplitude vector over |j, m=0>.

    Construction only checks shape and finiteness; operations that need a
    normalized state check the norm themselves.
    """
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1 or amplitudes.size == 0:
            raise ValidationError(f"State amplitudes must be a non-empty vector, got shape {amplitudes.shape}")
        if not np.all(np.isfinite(amplitudes)):
            raise ValidationError("State amplitudes must be finite")
        amplitudes.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amplitudes)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def basis_state(cls, dim: int, j: int = 0) -> 'RotorState':
        """|j, m=0> in a basis of the given dimension (the rotor ground state by default)."""
        if not 0 <= j < dim:
            raise ValidationError(f"Level j={j} is outside a basis of dimension {dim}")
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[j] = 1.0
        return cls(amplitudes)

    @classmethod
    def normalized(cls, values) -> 'RotorState':
        amplitudes = np.asarray(values, dtype=complex)
        norm = np.linalg.norm(amplitudes)
        if norm == 0:
            raise ValidationError("Cannot normalize a zero vector")
        return cls(amplitudes / norm)


def require_normalized(state: RotorState) -> None:
    deviation = abs(state.norm - 1.0)
    if deviation > NORM_TOL:
        logger.error(f"State norm deviates from one by {deviation:.3e}")
        raise NotNormalizedError(f"State norm deviates from one by {deviation:.3e}")


def require_same_dim(state: RotorState, op: RotorOperator) -> None:
    if state.dim != op.dim:
        raise DimensionMismatchError(f"State dimension {state.dim} does not match operator dimension {op.dim}")


def _check_dim(spec: Optional[BasisSpec], dim: int) -> None:
    if dim < 1:
        raise ValidationError(f"Basis dimension must be at least 1, got: {dim}")
    if spec is not None and dim > spec.n_exact:
        raise ValidationError(f"Basis dimension {dim} exceeds the reference basis n_exact={spec.n_exact}")


def _energies(dim: int) -> np.ndarray:
    j = np.arange(dim, dtype=float)
    return j * (j + 1)


def _cos_matrix(dim: int) -> np.ndarray:
    j = np.arange(dim - 1, dtype=float)
    couplings = (j + 1) / np.sqrt((2 * j + 1) * (2 * j + 3))
    return np.diag(couplings, 1) + np.diag(couplings, -1)


def build_j2(spec: Optional[BasisSpec], dim: int) -> RotorOperator:
    """Free rotor Hamiltonian J^2 = diag(j(j+1))."""
    _check_dim(spec, dim)
    return RotorOperator(np.diag(_energies(dim)))


def build_cos(spec: Optional[BasisSpec], dim: int) -> RotorOperator:
    """Projected cos(theta): real symmetric tridiagonal with zero diagonal.

    The (j, j+1) entry is (j+1)/sqrt((2j+1)(2j+3)).
    """
    _check_dim(spec, dim)
    return RotorOperator(_cos_matrix(dim))


def build_cos_power(spec: Optional[BasisSpec], dim: int, power: int) -> RotorOperator:
    """Exact projection of cos^k(theta) onto the first dim levels.

    cos(theta) only couples j to j +/- 1, so the top-left dim x dim block of the
    k-th power of the cos matrix built with dim + k//2 levels contains every
    path that starts and ends inside the block.
    """
    _check_dim(spec, dim)
    if power < 0:
        raise ValidationError(f"Power must be non-negative, got: {power}")
    if power == 0:
        return RotorOperator(np.eye(dim))
    larger = _cos_matrix(dim + power // 2)
    block = np.linalg.matrix_power(larger, power)[:dim, :dim]
    return RotorOperator(0.5 * (block + block.T))


def build_cos2(spec: Optional[BasisSpec], dim: int) -> RotorOperator:
    """Projected cos^2(theta), taken from the square of the cos matrix one level larger."""
    return build_cos_power(spec, dim, 2)


def build_sin2_2theta(spec: Optional[BasisSpec], dim: int) -> RotorOperator:
    # sin^2(2 theta) = 4 (cos^2 - cos^4)
    cos2 = build_cos_power(spec, dim, 2).entries
    cos4 = build_cos_power(spec, dim, 4).entries
    return RotorOperator(4.0 * (cos2 - cos4))


def build_sigma_theta(spec: Optional[BasisSpec], dim: int) -> np.ndarray:
    """sin(theta) d/dtheta, from [J^2, cos(theta)] = 2 (sigma_theta + cos(theta)).

    The operator is not Hermitian, so a plain matrix is returned.
    """
    _check_dim(spec, dim)
    j2 = np.diag(_energies(dim))
    cos = _cos_matrix(dim)
    return 0.5 * (j2 @ cos - cos @ j2) - cos


def build_observable(spec: Optional[BasisSpec], kind: InteractionKind, dim: int) -> RotorOperator:
    """cos(theta) for orientation, cos^2(theta) for alignment."""
    kind = InteractionKind(kind)
    if kind == InteractionKind.ORIENTATION:
        return build_cos(spec, dim)
    return build_cos2(spec, dim)


def quadratic_form(state: RotorState, matrix: np.ndarray) -> complex:
    """<psi|M|psi> for any square matrix, Hermitian or not."""
    if matrix.shape != (state.dim, state.dim):
        raise DimensionMismatchError(f"State dimension {state.dim} does not match matrix shape {matrix.shape}")
    return complex(np.vdot(state.amplitudes, matrix @ state.amplitudes))


def expectation(state: RotorState, op: RotorOperator) -> float:
    """<psi|O|psi> for a normalized state and a Hermitian operator.

    Raises:
        DimensionMismatchError: If the state and operator dimensions differ.
        NotNormalizedError: If the state norm deviates from one by more than 1e-9.
    """
    require_same_dim(state, op)
    require_normalized(state)
    value = quadratic_form(state, op.entries)
    if abs(value.imag) > IMAG_RESIDUE_TOL:
        raise NumericalError(f"Expectation of a Hermitian operator has imaginary part {value.imag:.3e}")
    return value.real


def embed_or_truncate(state: RotorState, new_dim: int) -> Tuple[RotorState, float]:
    """Move a state into a basis of another dimension.

    Returns:
        The state in the new basis and the probability discarded on the way
        (zero when the basis grows; the truncated state is renormalized).
    """
    if new_dim < 1:
        raise ValidationError(f"Basis dimension must be at least 1, got: {new_dim}")
    if new_dim >= state.dim:
        amplitudes = np.zeros(new_dim, dtype=complex)
        amplitudes[:state.dim] = state.amplitudes
        return RotorState(amplitudes), 0.0
    kept = state.amplitudes[:new_dim]
    total = float(np.sum(np.abs(state.amplitudes) ** 2))
    kept_population = float(np.sum(np.abs(kept) ** 2))
    if kept_population == 0:
        raise NumericalError(f"No population left in the first {new_dim} levels")
    leak = (total - kept_population) / total
    return RotorState(kept / np.sqrt(kept_population)), leak
