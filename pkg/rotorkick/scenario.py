import configparser
import pathlib
from typing import Dict, List, Optional, Tuple
import pydantic
from pydantic import BaseModel, Field, field_validator, model_validator
from rotorkick.basis import BasisSpec
from rotorkick.errors import ConfigError
from rotorkick.logger import logger
from rotorkick.propagator import SAMPLES_PER_PERIOD
from rotorkick.strategy import StrategyConfig

DEFAULT_SECTION: str = "scenario"
# [DEFAULT] is read as an ordinary section
_INHERITED_SECTION: str = "rotorkick:inherited"
OUTPUT_SERIES: Tuple[str, ...] = ("trajectory", "trajectory_control", "kicks", "summary")

CONFIG_KEYS: Dict[str, str] = {
    "scheme": "S1 (observable maxima) or S2 (target projection maxima); default S1",
    "maxima_mode": "global_in_period or first_local_after_kick; default global_in_period",
    "kick_kind": "orientation or alignment; default orientation",
    "area": "pulse area per kick; default 1.0 (orientation) or 1.5 (alignment)",
    "epsilon": "tau * B, rescaled rotational constant; default 0.03",
    "n_control": "dimension of the control subspace; default 5",
    "n_exact": "dimension of the reference basis, > n_control; default 40",
    "max_kicks": "maximum number of kicks; default 40",
    "stop_gain": "stop once a kick raises the reachable efficiency by less than this; default 3e-3 (orientation) or 1e-2 (alignment)",
    "timing_shift_fraction": "delay shift per kick as a fraction of T_rot, |x| < 0.05; default 0",
    "area_scale": "multiplier on every pulse area, in [0.5, 2.0]; default 1",
    "sampling_per_period": f"trajectory samples per rotational period; default {SAMPLES_PER_PERIOD}",
    "output_dir": "directory for CSV and JSON outputs; default output",
}
_CONFIG_FIELDS = ("scheme", "maxima_mode", "kick_kind", "area", "epsilon", "n_control", "max_kicks", "stop_gain")
_BASIS_FIELDS = ("n_control", "n_exact")
_PERTURBATION_FIELDS = ("timing_shift_fraction", "area_scale")


class Perturbations(BaseModel):
    """Systematic errors applied when a computed schedule is replayed."""
    timing_shift_fraction: float = 0.0
    area_scale: float = Field(default=1.0, ge=0.5, le=2.0)

    model_config = {
        "frozen": True
    }

    @field_validator('timing_shift_fraction')
    @classmethod
    def _small_shift(cls, value: float) -> float:
        if abs(value) >= 0.05:
            raise ValueError(f"timing_shift_fraction must satisfy |x| < 0.05, got {value}")
        return value

    @property
    def is_identity(self) -> bool:
        return self.timing_shift_fraction == 0.0 and self.area_scale == 1.0


class Scenario(BaseModel):
    name: str = Field(min_length=1)
    config: StrategyConfig
    basis: BasisSpec
    perturbations: Perturbations = Perturbations()
    outputs: Tuple[str, ...] = OUTPUT_SERIES
    sampling_per_period: int = Field(default=SAMPLES_PER_PERIOD, ge=16)
    output_dir: Optional[str] = None

    model_config = {
        "frozen": True
    }

    @field_validator('outputs')
    @classmethod
    def _known_outputs(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = [v for v in value if v not in OUTPUT_SERIES]
        if unknown:
            raise ValueError(f"unknown output series: {unknown}")
        return value

    @model_validator(mode='after')
    def _same_control_basis(self) -> 'Scenario':
        if self.config.n_control != self.basis.n_control:
            raise ValueError("config.n_control and basis.n_control differ")
        return self


def _preset(name: str, n_control: int = 5, **config) -> Scenario:
    return Scenario(
        name=name,
        config=StrategyConfig(n_control=n_control, **config),
        basis=BasisSpec(n_control=n_control),
    )


PRESETS: Dict[str, Scenario] = {
    scenario.name: scenario for scenario in (
        _preset("fig3-alignment-S1", kick_kind="alignment", area=1.5),
        _preset("fig4-orientation-S1", kick_kind="orientation", area=1.0),
        _preset("fig4a-alignment-local", kick_kind="alignment", area=1.5,
                maxima_mode="first_local_after_kick", max_kicks=4),
        _preset("fig5-orientation-S2", kick_kind="orientation", area=1.0, scheme="S2"),
        _preset("fig9-orientation-train", kick_kind="orientation", area=1.0, epsilon=0.01,
                max_kicks=30, stop_gain=0.0),
    )
}


def list_presets() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset: {name}. Available presets: {', '.join(list_presets())}", key="preset")
    return PRESETS[name]


def _first_error_key(error: pydantic.ValidationError, fallback: str) -> str:
    for detail in error.errors():
        if detail.get('loc'):
            return str(detail['loc'][0])
    return fallback


def _build(model, values: Dict[str, str], fallback_key: str):
    try:
        return model(**values)
    except pydantic.ValidationError as e:
        key = _first_error_key(e, fallback_key)
        message = e.errors()[0].get('msg', str(e))
        logger.error(f"Invalid value for {key}: {message}")
        raise ConfigError(f"Invalid value for {key}: {message}", key=key)


def _read_sections(path: pathlib.Path) -> Dict[str, str]:
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read scenario file {path}: {e}")
    if not text.lstrip().startswith('['):
        text = f"[{DEFAULT_SECTION}]\n{text}"
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section=_INHERITED_SECTION)
    try:
        parser.read_string(text, source=str(path))
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"Duplicate key {e.option} in {path}", key=e.option)
    except configparser.Error as e:
        raise ConfigError(f"Malformed scenario file {path}: {e}")
    merged: Dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in merged:
                raise ConfigError(f"Duplicate key {key} in section [{section}]", key=key)
            merged[key] = value
    return merged


def parse_config(path) -> Scenario:
    """Read a scenario file.

    The file is INI-style. A file without a section header is read as one
    section, and keys from several sections are merged. Besides the keys in
    CONFIG_KEYS, `name` sets the scenario name (default: the file stem).

    Raises:
        ConfigError: If the file is unreadable or malformed, a key is unknown or
            repeated, or a value is out of range. The error names the key.
    """
    path = pathlib.Path(path)
    values = _read_sections(path)
    for key in values:
        if key not in CONFIG_KEYS and key != "name":
            raise ConfigError(f"Unknown key: {key}", key=key)
    name = values.get("name", path.stem)
    config = _build(StrategyConfig, {k: values[k] for k in _CONFIG_FIELDS if k in values}, "area")
    basis = _build(BasisSpec, {k: values[k] for k in _BASIS_FIELDS if k in values}, "n_exact")
    perturbations = _build(Perturbations, {k: values[k] for k in _PERTURBATION_FIELDS if k in values}, "timing_shift_fraction")
    scenario_fields = {"name": name, "config": config, "basis": basis, "perturbations": perturbations}
    for key in ("sampling_per_period", "output_dir"):
        if key in values:
            scenario_fields[key] = values[key]
    scenario = _build(Scenario, scenario_fields, "name")
    logger.debug(f"Parsed scenario {scenario.name} from {path}")
    return scenario


def scenario_to_config_text(scenario: Scenario) -> str:
    """Scenario file text that parse_config reads back into an equal Scenario."""
    config = scenario.config
    lines = [
        f"[{DEFAULT_SECTION}]",
        f"name = {scenario.name}",
        f"scheme = {config.scheme.value}",
        f"maxima_mode = {config.maxima_mode.value}",
        f"kick_kind = {config.kick_kind.value}",
        f"area = {config.area!r}",
        f"epsilon = {config.epsilon!r}",
        f"n_control = {config.n_control}",
        f"n_exact = {scenario.basis.n_exact}",
        f"max_kicks = {config.max_kicks}",
        f"stop_gain = {config.stop_gain!r}",
        f"timing_shift_fraction = {scenario.perturbations.timing_shift_fraction!r}",
        f"area_scale = {scenario.perturbations.area_scale!r}",
        f"sampling_per_period = {scenario.sampling_per_period}",
    ]
    if scenario.output_dir is not None:
        lines.append(f"output_dir = {scenario.output_dir}")
    return "\n".join(lines) + "\n"
