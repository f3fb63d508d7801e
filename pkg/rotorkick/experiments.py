import pathlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple
import numpy as np
from pydantic import BaseModel
from rotorkick.basis import (
    InteractionKind,
    RotorState,
    build_cos,
    build_cos2,
    build_cos_power,
    build_j2,
    build_sigma_theta,
    embed_or_truncate,
    expectation,
    quadratic_form,
    require_normalized,
)
from rotorkick.errors import EstimateUndefinedError, ValidationError
from rotorkick.logger import logger
from rotorkick.output import (
    ensure_output_dir,
    write_delays_csv,
    write_kicks_csv,
    write_summary_json,
    write_table_csv,
    write_trajectory_csv,
)
from rotorkick.propagator import (
    SAMPLES_PER_PERIOD,
    KickEvent,
    Trajectory,
    apply_unitary,
    free_evolve,
    interaction_operator,
    kick_unitary,
    period,
    propagate_schedule,
    to_t_over_trot,
)
from rotorkick.scenario import Scenario
from rotorkick.settings import Settings
from rotorkick.strategy import StrategyConfig, StrategyRun, final_efficiency, run_strategy
from rotorkick.target import target_state

ESTIMATE_DENOMINATOR_TOL: float = 1e-12
TRAIN_NAME: str = "fig9_train"
AGREEMENT_TOL: float = 0.03
TAIL_LEVELS: int = 4


class Regime(str, Enum):
    GENERAL = "general"
    LARGE_A = "large_A"
    SMALL_A = "small_A"


class RunSummary(BaseModel):
    preset: str
    kick_count: int
    final_efficiency: float
    converged: bool
    max_leakage: float


class InterpulseEstimate(BaseModel):
    """Predicted free-evolution time between two successive maxima, and the gain of the next kick.

    delta_gain is only available in the small-area regime.
    """
    regime: Regime
    delta_s: float
    delta_t_over_trot: float
    delta_gain: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ReplayResult:
    """An open-loop replay of a kick schedule in a basis of size `dim`."""
    dim: int
    kicks: Tuple[KickEvent, ...]
    values: Tuple[float, ...]
    pre_kick_states: Tuple[RotorState, ...]
    final_state: RotorState
    final_efficiency: float

    @property
    def last_pre_kick_state(self) -> RotorState:
        return self.pre_kick_states[-1]


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """A scenario run with both trajectories.

    train_deviation is the largest |<O>| difference between the reference and
    control trajectories from the first kick to the last.
    """
    scenario: Scenario
    run: StrategyRun
    replay: ReplayResult
    exact_trajectory: Trajectory
    control_trajectory: Trajectory
    train_deviation: float
    summary: RunSummary
    files: Dict[str, pathlib.Path]


@dataclass(frozen=True, eq=False)
class SweepResult:
    """One row per axis value, in the order the values were given."""
    axis: str
    values: Tuple[float, ...]
    final_efficiencies: Tuple[float, ...]
    schedules: Tuple[Tuple[KickEvent, ...], ...]
    trajectory_files: Tuple[pathlib.Path, ...]
    baseline_efficiency: float
    summary_file: pathlib.Path


@dataclass(frozen=True, eq=False)
class TrainResult:
    """The long orientation train.

    Attributes:
        run: The closed-loop run, computed in the reference basis.
        delays_t_over_trot: Every delay in units of T_rot.
        predicted_delays: General-regime estimate made at kick k + 1 for
            delays_t_over_trot[k + 1].
        mean_last_ten: Mean of the last ten delays.
        estimate: Small-area estimate at the control-subspace orientation target.
        max_leakage: Largest population above the control subspace.
        tail_population: Largest population in the top TAIL_LEVELS levels of
            the reference basis.
        files: Written outputs by series name.
    """
    run: StrategyRun
    delays_t_over_trot: Tuple[float, ...]
    predicted_delays: Tuple[float, ...]
    mean_last_ten: float
    estimate: InterpulseEstimate
    max_leakage: float
    tail_population: float
    files: Dict[str, pathlib.Path]


def _resolve_dir(output_dir: Optional[str], settings: Optional[Settings], scenario_value: Optional[str] = None) -> pathlib.Path:
    settings = settings if settings is not None else Settings(output_dir=output_dir)
    if output_dir is not None:
        return ensure_output_dir(output_dir)
    return ensure_output_dir(settings.resolve_output_dir(scenario_value))


def replay_schedule(
    run: StrategyRun,
    dim: Optional[int] = None,
    timing_shift_fraction: float = 0.0,
    area_scale: float = 1.0,
    initial: Optional[RotorState] = None,
) -> ReplayResult:
    """Apply a computed schedule open loop, optionally with systematic errors.

    Every delay is lengthened by timing_shift_fraction of the rotational
    period and every area multiplied by area_scale. With no perturbation and
    dim equal to the control dimension the run is reproduced bit for bit.
    """
    config = run.config
    dim = dim if dim is not None else config.n_control
    epsilon = config.epsilon
    shift = timing_shift_fraction * period(epsilon)
    area = config.area * area_scale
    obs = interaction_operator(config.kick_kind, dim)
    unitary = kick_unitary(obs, area)
    state = initial if initial is not None else RotorState.basis_state(dim, 0)
    s_now = 0.0
    kicks = []
    values = []
    pre_kick_states = []
    for index in range(len(run.kicks)):
        if index > 0:
            delay = run.delays[index - 1] + shift
            if delay < 0:
                raise ValidationError(f"Timing shift makes delay {index} negative ({delay:.6g})")
            state = free_evolve(state, epsilon, delay)
            s_now += delay
        kicks.append(KickEvent(s_time=s_now, area=area, kind=config.kick_kind))
        values.append(expectation(state, obs))
        pre_kick_states.append(state)
        state = apply_unitary(state, unitary)
    return ReplayResult(
        dim=dim,
        kicks=tuple(kicks),
        values=tuple(values),
        pre_kick_states=tuple(pre_kick_states),
        final_state=state,
        final_efficiency=final_efficiency(state, obs, epsilon),
    )


def trajectory_for(
    run: StrategyRun,
    kicks: Sequence[KickEvent],
    dim: int,
    sampling_per_period: int,
) -> Trajectory:
    """Sampled trajectory of a schedule from the ground state in a basis of size dim.

    Leakage out of the control subspace is recorded whenever dim exceeds it.
    """
    config = run.config
    return propagate_schedule(
        RotorState.basis_state(dim, 0),
        kicks,
        config.epsilon,
        interaction_operator(config.kick_kind, dim),
        sampling=period(config.epsilon) / sampling_per_period,
        target=run.target.state,
        control_dim=config.n_control,
    )


def train_window_deviation(reference: Trajectory, control: Trajectory) -> float:
    """Largest |<O>| difference between two samplings of one schedule, up to its last kick."""
    if reference.s.size != control.s.size:
        raise ValidationError(f"Trajectories have {reference.s.size} and {control.s.size} samples")
    last_kick = reference.kicks[-1].s_time if reference.kicks else 0.0
    window = reference.s <= last_kick
    return float(np.max(np.abs(reference.expectation[window] - control.expectation[window])))


def run_scenario(
    scenario: Scenario,
    output_dir: Optional[str] = None,
    settings: Optional[Settings] = None,
) -> ScenarioResult:
    """Run a scenario closed loop and write its trajectories, kick schedule and summary.

    The schedule is computed in the control basis. Perturbations, if any, are
    applied by replaying it. Trajectories are written for the reference
    basis (`<name>_trajectory.csv`) and for the control basis
    (`<name>_trajectory_control.csv`).

    Raises:
        FilesystemError: If the output directory cannot be written.
    """
    directory = _resolve_dir(output_dir, settings, scenario.output_dir)
    logger.info(f"Running scenario {scenario.name}")
    run = run_strategy(scenario.config)
    perturbations = scenario.perturbations
    replay = replay_schedule(run, None, perturbations.timing_shift_fraction, perturbations.area_scale)
    exact = trajectory_for(run, replay.kicks, scenario.basis.n_exact, scenario.sampling_per_period)
    control = trajectory_for(run, replay.kicks, scenario.config.n_control, scenario.sampling_per_period)
    deviation = train_window_deviation(exact, control)
    if deviation > AGREEMENT_TOL:
        logger.warning(f"Reference and control trajectories differ by {deviation:.3f} during the train of {scenario.name}")
    summary = RunSummary(
        preset=scenario.name,
        kick_count=len(replay.kicks),
        final_efficiency=replay.final_efficiency,
        converged=run.converged,
        max_leakage=exact.max_leakage,
    )
    files = {}
    if "trajectory" in scenario.outputs:
        files["trajectory"] = write_trajectory_csv(directory / f"{scenario.name}_trajectory.csv", exact)
    if "trajectory_control" in scenario.outputs:
        files["trajectory_control"] = write_trajectory_csv(directory / f"{scenario.name}_trajectory_control.csv", control)
    if "kicks" in scenario.outputs:
        files["kicks"] = write_kicks_csv(directory / f"{scenario.name}_kicks.csv", replay.kicks, replay.values, scenario.config.epsilon)
    if "summary" in scenario.outputs:
        files["summary"] = write_summary_json(directory / f"{scenario.name}_summary.json", summary)
    logger.info(f"Scenario {scenario.name}: {summary.kick_count} kicks, final efficiency {summary.final_efficiency:.6f}")
    return ScenarioResult(
        scenario=scenario,
        run=run,
        replay=replay,
        exact_trajectory=exact,
        control_trajectory=control,
        train_deviation=deviation,
        summary=summary,
        files=files,
    )


def _sweep(
    scenario: Scenario,
    axis: str,
    axis_values: Sequence[float],
    output_dir: Optional[str],
    settings: Optional[Settings],
    workers: Optional[int],
) -> SweepResult:
    settings = settings if settings is not None else Settings(output_dir=output_dir)
    directory = _resolve_dir(output_dir, settings, scenario.output_dir)
    workers = workers if workers is not None else settings.workers
    run = run_strategy(scenario.config)
    label = "timing" if axis == "timing_shift_fraction" else "area"

    def job(index: int, value: float):
        if axis == "timing_shift_fraction":
            replay = replay_schedule(run, None, timing_shift_fraction=value)
        else:
            replay = replay_schedule(run, None, area_scale=value)
        trajectory = trajectory_for(run, replay.kicks, scenario.basis.n_exact, scenario.sampling_per_period)
        path = write_trajectory_csv(directory / f"{scenario.name}_{label}_{index:02d}.csv", trajectory)
        logger.debug(f"{axis}={value}: final efficiency {replay.final_efficiency:.6f}")
        return replay, path

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(job, range(len(axis_values)), axis_values))
    efficiencies = tuple(replay.final_efficiency for replay, _ in outcomes)
    paths = tuple(path for _, path in outcomes)
    rows = [
        (value, efficiency, len(replay.kicks), path.name)
        for value, efficiency, (replay, path) in zip(axis_values, efficiencies, outcomes)
    ]
    summary_file = write_table_csv(
        directory / f"{scenario.name}_sweep_{label}.csv",
        (axis, "final_efficiency", "kick_count", "trajectory_file"),
        rows,
    )
    return SweepResult(
        axis=axis,
        values=tuple(axis_values),
        final_efficiencies=efficiencies,
        schedules=tuple(replay.kicks for replay, _ in outcomes),
        trajectory_files=paths,
        baseline_efficiency=run.final_efficiency,
        summary_file=summary_file,
    )


def robustness_timing(
    scenario: Scenario,
    shift_fractions: Sequence[float],
    output_dir: Optional[str] = None,
    settings: Optional[Settings] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """Replay the scenario's schedule with every delay shifted by a fraction of T_rot."""
    return _sweep(scenario, "timing_shift_fraction", shift_fractions, output_dir, settings, workers)


def robustness_area(
    scenario: Scenario,
    scales: Sequence[float],
    output_dir: Optional[str] = None,
    settings: Optional[Settings] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """Replay the scenario's schedule with every pulse area multiplied by a scale factor."""
    for scale in scales:
        if not 0.5 <= scale <= 2.0:
            raise ValidationError(f"Area scale must lie in [0.5, 2.0], got: {scale}")
    return _sweep(scenario, "area_scale", scales, output_dir, settings, workers)


def interpulse_estimate(
    state: RotorState,
    area: float,
    epsilon: float,
    regime: Regime = Regime.SMALL_A,
    n_exact: int = 40,
) -> InterpulseEstimate:
    """Estimate the delay to the next orientation maximum for a state sitting at a maximum.

    With c2 = <cos^2>, cj = Re<cos J^2>, c3 = <cos - cos^3> and
    sc = Im<sigma_theta cos>, the general estimate is
    delta_s = 2 A (1 - c2) / (eps (4 cj - 8 A sc + 4 A^2 c3)); small areas keep
    only cj and large areas only c3. Expectations are taken in the reference
    basis of size n_exact.

    Raises:
        EstimateUndefinedError: If the denominator is below 1e-12 in magnitude.
    """
    regime = Regime(regime)
    require_normalized(state)
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got: {epsilon}")
    if state.dim < n_exact:
        state = embed_or_truncate(state, n_exact)[0]
    dim = state.dim
    cos = build_cos(None, dim)
    cos2 = expectation(state, build_cos2(None, dim))
    cos_j2 = quadratic_form(state, cos.entries @ build_j2(None, dim).entries).real
    cos_minus_cos3 = expectation(state, cos) - expectation(state, build_cos_power(None, dim, 3))
    sigma_cos = quadratic_form(state, build_sigma_theta(None, dim) @ cos.entries).imag
    if regime == Regime.GENERAL:
        numerator = 2 * area * (1 - cos2)
        denominator = epsilon * (4 * cos_j2 - 8 * area * sigma_cos + 4 * area ** 2 * cos_minus_cos3)
    elif regime == Regime.SMALL_A:
        numerator = area * (1 - cos2)
        denominator = 2 * epsilon * cos_j2
    else:
        numerator = 1 - cos2
        denominator = 2 * epsilon * area * cos_minus_cos3
    if abs(denominator) < ESTIMATE_DENOMINATOR_TOL:
        logger.error(f"Inter-pulse estimate undefined (denominator {denominator:.3e})")
        raise EstimateUndefinedError(f"Inter-pulse estimate undefined for regime {regime.value} (denominator {denominator:.3e})")
    delta_s = numerator / denominator
    delta_gain = None
    if regime == Regime.SMALL_A:
        delta_gain = (1 - cos2) ** 2 * area ** 2 / (2 * cos_j2)
    return InterpulseEstimate(
        regime=regime,
        delta_s=delta_s,
        delta_t_over_trot=to_t_over_trot(delta_s, epsilon),
        delta_gain=delta_gain,
    )


def fig9_train(
    n_kicks: int = 30,
    area: float = 1.0,
    epsilon: float = 0.01,
    n_control: int = 5,
    n_exact: int = 40,
    output_dir: Optional[str] = None,
    settings: Optional[Settings] = None,
) -> TrainResult:
    """Long S1 orientation train with no gain cut-off, driven in the reference basis.

    Every kick is placed at the next global maximum of <cos theta> computed
    with n_exact levels. The general estimate made at each kick is kept next
    to the delay that follows it, and the mean of the last ten delays is
    compared with the small-area estimate at the n_control-level target.
    Writes the trajectory, the kick schedule and the delay sequence.
    """
    directory = _resolve_dir(output_dir, settings)
    config = StrategyConfig(
        kick_kind=InteractionKind.ORIENTATION,
        area=area,
        epsilon=epsilon,
        n_control=n_exact,
        max_kicks=n_kicks,
        stop_gain=0.0,
    )
    run = run_strategy(config)
    delays = tuple(float(to_t_over_trot(d, epsilon)) for d in run.delays)
    if len(delays) < 10:
        raise ValidationError(f"The train stopped after {len(run.kicks)} kicks; at least 11 are needed")
    mean_last_ten = float(np.mean(delays[-10:]))
    if mean_last_ten >= float(np.mean(delays[:10])):
        logger.warning("Inter-kick delays do not shrink along the train")
    replay = replay_schedule(run)
    predicted = tuple(
        interpulse_estimate(state, area, epsilon, Regime.GENERAL, n_exact).delta_t_over_trot
        for state in replay.pre_kick_states[1:-1]
    )
    target = target_state(build_cos(None, n_control))
    estimate = interpulse_estimate(target.state, area, epsilon, Regime.SMALL_A, n_exact)
    trajectory = propagate_schedule(
        RotorState.basis_state(n_exact, 0),
        run.kicks,
        epsilon,
        interaction_operator(InteractionKind.ORIENTATION, n_exact),
        sampling=period(epsilon) / SAMPLES_PER_PERIOD,
        target=target.state,
        control_dim=n_control,
    )
    unitary = kick_unitary(interaction_operator(InteractionKind.ORIENTATION, n_exact), area)
    # free evolution keeps populations, so the post-kick states cover the whole train
    tail = max(
        float(np.sum(np.abs(apply_unitary(state, unitary).amplitudes[-TAIL_LEVELS:]) ** 2))
        for state in replay.pre_kick_states
    )
    files = {
        "trajectory": write_trajectory_csv(directory / f"{TRAIN_NAME}_trajectory.csv", trajectory),
        "kicks": write_kicks_csv(directory / f"{TRAIN_NAME}_kicks.csv", run.kicks, run.values, epsilon),
        "delays": write_delays_csv(directory / f"{TRAIN_NAME}_delays.csv", run.delays, epsilon),
    }
    logger.info(
        f"Train of {len(run.kicks)} kicks: last-ten mean delay {mean_last_ten:.4e} T_rot, "
        f"estimate {estimate.delta_t_over_trot:.4e} T_rot, leakage {trajectory.max_leakage:.3e}, tail {tail:.3e}"
    )
    return TrainResult(
        run=run,
        delays_t_over_trot=delays,
        predicted_delays=predicted,
        mean_last_ten=mean_last_ten,
        estimate=estimate,
        max_leakage=trajectory.max_leakage,
        tail_population=tail,
        files=files,
    )
