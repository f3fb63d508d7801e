"""Maximum search over one free-evolution period of a sampled scalar signal.

A coarse uniform grid locates the candidate peaks, a golden-section search
refines each bracket, and a Brent root of the analytic derivative polishes
the result when the derivative changes sign inside the bracket.
"""
import math
from enum import Enum
from typing import Callable, List, Tuple
import numpy as np
from scipy.optimize import brentq
from rotorkick.basis import RotorOperator, RotorState, require_normalized, require_same_dim
from rotorkick.errors import FixedPointSignal, DimensionMismatchError
from rotorkick.logger import logger

GRID_POINTS: int = 2048
STATIONARY_TOL: float = 1e-10
PROJECTION_FIXED_TOL: float = 1e-12
REFINE_RTOL: float = 1e-9
ROOT_VALUE_TOL: float = 1e-12
# grid peaks within this fraction of the signal range of the best one are refined too
CANDIDATE_MARGIN: float = 0.01
GOLDEN_RATIO: float = (math.sqrt(5) - 1) / 2


class MaximaMode(str, Enum):
    GLOBAL_IN_PERIOD = "global_in_period"
    FIRST_LOCAL_AFTER_KICK = "first_local_after_kick"


def _energies(dim: int) -> np.ndarray:
    j = np.arange(dim, dtype=float)
    return j * (j + 1)


class ObservableSignal:
    """f(s) = <psi(s)|O|psi(s)> under free evolution of `state`."""
    def __init__(self, state: RotorState, observable: RotorOperator, epsilon: float):
        require_same_dim(state, observable)
        self.amplitudes = state.amplitudes
        self.matrix = observable.entries
        self.epsilon = epsilon
        self.energies = _energies(state.dim)
        # d/ds <O> = i epsilon <[J^2, O]>
        self._rate = 1j * epsilon * (self.energies[:, None] - self.energies[None, :]) * self.matrix

    def _psi(self, s):
        return np.exp(-1j * self.epsilon * np.multiply.outer(s, self.energies)) * self.amplitudes

    def values(self, s: np.ndarray) -> np.ndarray:
        psi = self._psi(np.asarray(s, dtype=float))
        return np.einsum('ki,ij,kj->k', psi.conj(), self.matrix, psi).real

    def value(self, s: float) -> float:
        psi = self._psi(float(s))
        return float(np.vdot(psi, self.matrix @ psi).real)

    def derivative(self, s: float) -> float:
        psi = self._psi(float(s))
        return float(np.vdot(psi, self._rate @ psi).real)


class ProjectionSignal:
    """g(s) = |<chi|psi(s)>|^2 under free evolution of `state`."""
    def __init__(self, state: RotorState, target: RotorState, epsilon: float):
        if state.dim != target.dim:
            raise DimensionMismatchError(f"State dimension {state.dim} does not match target dimension {target.dim}")
        self.weights = target.amplitudes.conj() * state.amplitudes
        self.epsilon = epsilon
        self.energies = _energies(state.dim)

    def _overlap(self, s):
        return np.exp(-1j * self.epsilon * np.multiply.outer(s, self.energies)) @ self.weights

    def values(self, s: np.ndarray) -> np.ndarray:
        return np.abs(self._overlap(np.asarray(s, dtype=float))) ** 2

    def value(self, s: float) -> float:
        return float(abs(self._overlap(float(s))) ** 2)

    def derivative(self, s: float) -> float:
        phases = np.exp(-1j * self.epsilon * self.energies * float(s))
        overlap = phases @ self.weights
        rate = (-1j * self.epsilon * self.energies * phases) @ self.weights
        return float(2.0 * (overlap.conjugate() * rate).real)


def golden_section_max(f: Callable[[float], float], a: float, b: float, xtol: float) -> Tuple[float, float]:
    """Maximize a unimodal function on [a, b] by golden-section search.

    Returns:
        The best abscissa seen (bracket ends included) and its function value.
    """
    lo, hi = a, b
    f_lo, f_hi = f(lo), f(hi)
    x2 = lo + (1 - GOLDEN_RATIO) * (hi - lo)
    x3 = lo + GOLDEN_RATIO * (hi - lo)
    f2, f3 = f(x2), f(x3)
    while hi - lo > xtol:
        if f2 > f3:
            hi, f_hi = x3, f3
            x3, f3 = x2, f2
            x2 = lo + (1 - GOLDEN_RATIO) * (hi - lo)
            f2 = f(x2)
        else:
            lo, f_lo = x2, f2
            x2, f2 = x3, f3
            x3 = lo + GOLDEN_RATIO * (hi - lo)
            f3 = f(x3)
    triplet = [(lo, f_lo), (x2, f2), (x3, f3), (hi, f_hi)]
    return max(triplet, key=lambda point: point[1])


def _refine(signal, lo: float, hi: float, xtol: float) -> Tuple[float, float]:
    best = golden_section_max(signal.value, lo, hi, xtol)
    d_lo, d_hi = signal.derivative(lo), signal.derivative(hi)
    if d_lo > 0 > d_hi:
        root = brentq(signal.derivative, lo, hi, xtol=min(xtol, 2e-12))
        polished = (root, signal.value(root))
        # within rounding of the golden-section value the stationary point wins
        if polished[1] >= best[1] - ROOT_VALUE_TOL:
            best = polished
    return best


def _global_candidates(values: np.ndarray) -> List[int]:
    """Indices (into the (0, P] part of the grid) of grid peaks close to the best one."""
    interior = values[1:]
    best = int(np.argmax(interior))
    margin = CANDIDATE_MARGIN * float(np.ptp(values))
    candidates = []
    for k in range(interior.size):
        left = values[k]
        right = interior[k + 1] if k + 1 < interior.size else -math.inf
        if interior[k] >= left and interior[k] >= right and interior[k] >= interior[best] - margin:
            candidates.append(k + 1)
    if best + 1 not in candidates:
        candidates.append(best + 1)
    return sorted(candidates)


def _first_local_peak(values: np.ndarray, h: float) -> int:
    """First grid index k >= 1 where the centered difference turns from rising to not rising, or -1."""
    slopes = (values[2:] - values[:-2]) / (2 * h)
    for k in range(1, slopes.size):
        if slopes[k - 1] > 0 and slopes[k] <= 0:
            return k
    return -1


def find_maximum(
    signal,
    period: float,
    mode: MaximaMode = MaximaMode.GLOBAL_IN_PERIOD,
    grid_points: int = GRID_POINTS,
) -> Tuple[float, float]:
    """Locate the maximum of a free-evolution signal on (0, period].

    In global mode the largest value in the window wins, earliest first on
    ties, and the window end is an accepted answer. In local mode the first
    interior peak after s=0 is used; without one the global answer is
    returned.

    Raises:
        FixedPointSignal: If the signal is constant over the period.
    """
    mode = MaximaMode(mode)
    h = period / grid_points
    grid = np.arange(grid_points + 1) * h
    values = signal.values(grid)
    if float(np.ptp(values)) < STATIONARY_TOL:
        raise FixedPointSignal("Signal is constant over the free-evolution period", value=float(values[0]))
    xtol = REFINE_RTOL * period
    if mode == MaximaMode.FIRST_LOCAL_AFTER_KICK:
        k = _first_local_peak(values, h)
        if k > 0:
            s, value = _refine(signal, grid[k - 1], grid[k + 2], xtol)
            logger.debug(f"First local maximum at s={s:.9f} value={value:.12f}")
            return s, value
        logger.debug("No interior local maximum after the kick, using the global maximum")
    best_s, best_value = math.nan, -math.inf
    for k in _global_candidates(values):
        lo = grid[k - 1]
        hi = grid[k + 1] if k < grid_points else period
        s, value = _refine(signal, lo, hi, xtol)
        if s <= 0:
            s, value = grid[k], float(values[k])
        if value > best_value + 1e-12:
            best_s, best_value = s, value
    logger.debug(f"Global maximum at s={best_s:.9f} value={best_value:.12f}")
    return best_s, best_value


def projection_fixed_point(state: RotorState, target: RotorState) -> None:
    """Raise FixedPointSignal when the state already coincides with the target."""
    require_normalized(state)
    overlap = abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2
    if overlap > 1 - PROJECTION_FIXED_TOL:
        raise FixedPointSignal("State coincides with the target", value=float(overlap))
