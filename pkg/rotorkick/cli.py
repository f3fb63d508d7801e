"""Command-line front end: `rotorkick <subcommand>`.

Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
numerical or filesystem failures.
"""
import argparse
import json
import sys
import pydantic
from typing import List, Optional
from rotorkick.basis import InteractionKind
from rotorkick.errors import FilesystemError, NumericalError, ValidationError
from rotorkick.experiments import Regime
from rotorkick.logger import configure_logging, logger
from rotorkick.scenario import CONFIG_KEYS, Scenario
from rotorkick.settings import ROTORKICK_VERSION
from rotorkick.simulator import Simulator
from rotorkick.target import Extremum, duration_above, is_stationary

EXIT_OK: int = 0
EXIT_CONFIG: int = 2
EXIT_NUMERICAL: int = 3


def _config_help() -> str:
    lines = ["scenario file keys (INI style, one [section] header optional):"]
    lines += [f"  {key:<22} {text}" for key, text in CONFIG_KEYS.items()]
    lines.append("  name                   scenario name; default the file stem")
    return "\n".join(lines)


def _add_scenario_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--preset', help="built-in scenario name (see `rotorkick presets`)")
    source.add_argument('--config', help="path to a scenario file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='rotorkick',
        description="Kicked rigid-rotor pulse-train simulations.",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {ROTORKICK_VERSION}")
    parser.add_argument('--output-dir', help="output directory (overrides ROTORKICK_OUTPUT_DIR and the scenario file)")
    parser.add_argument('--workers', type=int, help="sweep worker threads (default: ROTORKICK_WORKERS or 1)")
    parser.add_argument('--log-level', help="logging level (default: ROTORKICK_LOG_LEVEL or WARNING)")
    commands = parser.add_subparsers(dest='command', required=True)

    target = commands.add_parser('target', help="kinematic bound and time above threshold of the optimal target")
    target.add_argument('--kind', choices=[k.value for k in InteractionKind], default='orientation')
    target.add_argument('--n', type=int, default=5, help="control subspace dimension (default 5)")
    target.add_argument('--extremum', choices=[e.value for e in Extremum], default='maximize')
    target.add_argument('--epsilon', type=float, default=0.03)
    target.add_argument('--threshold', type=float, default=0.5)
    target.add_argument('--scan-max', type=int, help="tabulate n = 2..SCAN_MAX instead of a single n")

    run = commands.add_parser('run', help="run a scenario and write trajectory, kicks and summary files")
    _add_scenario_source(run)

    sweep_timing = commands.add_parser('sweep-timing', help="replay a scenario with shifted inter-kick delays")
    _add_scenario_source(sweep_timing)
    sweep_timing.add_argument('--shifts', type=float, nargs='+', default=[-0.001, 0.0, 0.001],
                              help="delay shifts as fractions of T_rot (default -0.001 0 0.001)")

    sweep_area = commands.add_parser('sweep-area', help="replay a scenario with scaled pulse areas")
    _add_scenario_source(sweep_area)
    sweep_area.add_argument('--scales', type=float, nargs='+', default=[0.9, 1.0, 1.1],
                            help="area scale factors (default 0.9 1.0 1.1)")

    lie = commands.add_parser('lie', help="Lie closure and fixed-point space dimensions")
    lie.add_argument('--kind', choices=[k.value for k in InteractionKind], default='orientation')
    lie.add_argument('--n', type=int, default=5)

    estimate = commands.add_parser('estimate', help="inter-pulse delay estimate at the orientation target")
    estimate.add_argument('--n', type=int, default=5, help="dimension of the target used as the state (default 5)")
    estimate.add_argument('--area', type=float, default=1.0)
    estimate.add_argument('--epsilon', type=float, default=0.01)
    estimate.add_argument('--regime', choices=[r.value for r in Regime], default='small_A')
    estimate.add_argument('--n-exact', type=int, default=40)

    commands.add_parser('presets', help="list built-in scenarios")

    train = commands.add_parser('train', help="long S1 orientation train and its delay sequence")
    train.add_argument('--kicks', type=int, default=30)
    train.add_argument('--area', type=float, default=1.0)
    train.add_argument('--epsilon', type=float, default=0.01)
    return parser


def _scenario(simulator: Simulator, args) -> Scenario:
    return simulator.scenario(preset=args.preset, config_path=args.config)


def _dispatch(simulator: Simulator, args) -> object:
    if args.command == 'target':
        if args.scan_max is not None:
            points = simulator.scan(args.kind, range(2, args.scan_max + 1), args.epsilon, args.threshold)
            return [p.model_dump(mode='json') for p in points]
        target = simulator.target(args.kind, args.n, args.extremum)
        return {
            "kind": args.kind,
            "n": args.n,
            "extremum": args.extremum,
            "bound": target.bound,
            "duration_fraction": None if is_stationary(target, args.epsilon) else duration_above(target, args.epsilon, args.threshold),
            "amplitudes": target.state.amplitudes.real.tolist(),
        }
    if args.command == 'run':
        result = simulator.run(_scenario(simulator, args))
        payload = result.summary.model_dump(mode='json')
        payload["files"] = {key: str(path) for key, path in result.files.items()}
        return payload
    if args.command in ('sweep-timing', 'sweep-area'):
        scenario = _scenario(simulator, args)
        if args.command == 'sweep-timing':
            sweep = simulator.sweep_timing(scenario, args.shifts)
        else:
            sweep = simulator.sweep_area(scenario, args.scales)
        return {
            "axis": sweep.axis,
            "values": list(sweep.values),
            "final_efficiencies": list(sweep.final_efficiencies),
            "baseline_efficiency": sweep.baseline_efficiency,
            "summary_file": str(sweep.summary_file),
        }
    if args.command == 'lie':
        return simulator.lie(args.kind, args.n).model_dump(mode='json')
    if args.command == 'estimate':
        target = simulator.target(InteractionKind.ORIENTATION, args.n)
        return simulator.estimate(target.state, args.area, args.epsilon, args.regime, args.n_exact).model_dump(mode='json')
    if args.command == 'presets':
        return simulator.presets()
    result = simulator.train(args.kicks, args.area, args.epsilon)
    return {
        "kick_count": len(result.run.kicks),
        "final_efficiency": result.run.final_efficiency,
        "mean_last_ten_delay": result.mean_last_ten,
        "estimate": result.estimate.model_dump(mode='json'),
        "max_leakage": result.max_leakage,
        "tail_population": result.tail_population,
        "files": {key: str(path) for key, path in result.files.items()},
    }


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        simulator = Simulator(output_dir=args.output_dir, workers=args.workers)
        if args.log_level:
            configure_logging(args.log_level)
        payload = _dispatch(simulator, args)
    except (ValidationError, pydantic.ValidationError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FilesystemError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
