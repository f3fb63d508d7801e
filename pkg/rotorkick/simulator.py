from typing import List, Optional, Sequence, Union
from rotorkick.basis import InteractionKind, RotorState, build_observable
from rotorkick.experiments import (
    InterpulseEstimate,
    Regime,
    ScenarioResult,
    SweepResult,
    TrainResult,
    fig9_train,
    interpulse_estimate,
    robustness_area,
    robustness_timing,
    run_scenario,
)
from rotorkick.errors import ValidationError
from rotorkick.lie import LieReport, lie_report
from rotorkick.logger import logger, configure_logging
from rotorkick.scenario import Scenario, get_preset, list_presets, parse_config
from rotorkick.settings import Settings
from rotorkick.strategy import StrategyConfig, StrategyRun, run_strategy
from rotorkick.target import (
    EfficiencyDurationPoint,
    Extremum,
    TargetState,
    efficiency_duration_scan,
    target_state,
)


class Simulator:
    """Entry point to the kicked-rotor simulations.

    Holds the resolved runtime settings and exposes the targets, strategies,
    experiments and controllability checks with those settings applied.

    Attributes:
        settings: A Settings instance with the output directory and worker count.
    """
    def __init__(
        self,
        output_dir: Optional[str] = None,
        workers: Optional[int] = None,
    ):
        """Initialize a new simulator.

        Args:
            output_dir: Optional output directory. If None, will use the
                ROTORKICK_OUTPUT_DIR environment variable, then the scenario's
                own output_dir, then "output".
            workers: Optional number of sweep worker threads. If None, will use
                the ROTORKICK_WORKERS environment variable or default to 1.
        """
        logger.debug("Initializing Simulator")
        self.settings = Settings(output_dir=output_dir, workers=workers)
        configure_logging()
        logger.debug(f"Simulator initialized with output_dir={self.settings.output_dir} workers={self.settings.workers}")

    def scenario(self, preset: Optional[str] = None, config_path: Optional[str] = None) -> Scenario:
        """Load a built-in preset or a scenario file; exactly one must be given."""
        if (preset is None) == (config_path is None):
            raise ValidationError("Give exactly one of preset or config_path")
        if preset is not None:
            return get_preset(preset)
        return parse_config(config_path)

    def presets(self) -> List[str]:
        return list_presets()

    def target(self, kind: InteractionKind, n: int, extremum: Extremum = Extremum.MAXIMIZE) -> TargetState:
        kind = InteractionKind(kind)
        return target_state(build_observable(None, kind, n), extremum, kind)

    def scan(
        self,
        kind: InteractionKind,
        n_range: Sequence[int],
        epsilon: float = 0.03,
        threshold: float = 0.5,
    ) -> List[EfficiencyDurationPoint]:
        return efficiency_duration_scan(n_range, kind, epsilon, threshold)

    def strategy(self, config: StrategyConfig, initial: Optional[RotorState] = None) -> StrategyRun:
        return run_strategy(config, initial)

    def run(self, scenario: Union[Scenario, str]) -> ScenarioResult:
        """Run a scenario (or a preset, by name) and write its output files."""
        if isinstance(scenario, str):
            scenario = get_preset(scenario)
        return run_scenario(scenario, settings=self.settings)

    def sweep_timing(self, scenario: Union[Scenario, str], shift_fractions: Sequence[float]) -> SweepResult:
        if isinstance(scenario, str):
            scenario = get_preset(scenario)
        return robustness_timing(scenario, shift_fractions, settings=self.settings)

    def sweep_area(self, scenario: Union[Scenario, str], scales: Sequence[float]) -> SweepResult:
        if isinstance(scenario, str):
            scenario = get_preset(scenario)
        return robustness_area(scenario, scales, settings=self.settings)

    def lie(self, kind: InteractionKind, n: int) -> LieReport:
        return lie_report(kind, n)

    def estimate(
        self,
        state: RotorState,
        area: float,
        epsilon: float,
        regime: Regime = Regime.SMALL_A,
        n_exact: int = 40,
    ) -> InterpulseEstimate:
        return interpulse_estimate(state, area, epsilon, regime, n_exact)

    def train(self, n_kicks: int = 30, area: float = 1.0, epsilon: float = 0.01) -> TrainResult:
        return fig9_train(n_kicks, area, epsilon, settings=self.settings)
