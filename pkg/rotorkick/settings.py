import os
import pathlib
from importlib.metadata import version, PackageNotFoundError
from typing import Dict, Optional
from dotenv import dotenv_values, find_dotenv
from rotorkick.logger import logger
from rotorkick.errors import ConfigError, ValidationError

try:
    ROTORKICK_VERSION: str = version("rotorkick")
except PackageNotFoundError:
    ROTORKICK_VERSION = "unknown"

DEFAULT_OUTPUT_DIR: str = "output"
CONFIG_ENV: str = "ROTORKICK_CONFIG"
USER_CONFIG: pathlib.Path = pathlib.Path.home() / ".rotorkick" / "config"


class Settings:
    """Runtime configuration shared by the simulator, the experiments and the CLI.

    Each value comes from an explicit argument, then the environment, then
    the dotenv config file, then a default. The config file is read, never
    exported into os.environ.

    Attributes:
        output_dir: Directory that receives CSV and JSON outputs, or None when
            no layer sets ROTORKICK_OUTPUT_DIR (the scenario file, then
            DEFAULT_OUTPUT_DIR, decide in that case).
        workers: Number of worker threads used by the robustness sweeps.
        config_values: Variables read from the config file.
    """
    def __init__(
        self,
        output_dir: Optional[str] = None,
        workers: Optional[int] = None,
    ):
        """Initialize runtime configuration.

        Args:
            output_dir: Optional output directory. If None, ROTORKICK_OUTPUT_DIR
                is looked up.
            workers: Optional sweep worker count. If None, ROTORKICK_WORKERS is
                looked up, defaulting to 1.

        Raises:
            ConfigError: If ROTORKICK_CONFIG names a missing file.
            ValidationError: If the worker count is not a positive integer.
        """
        self.config_values: Dict[str, str] = self.load_config()
        self.output_dir: Optional[str] = output_dir or self._lookup('ROTORKICK_OUTPUT_DIR')
        raw_workers = workers if workers is not None else (self._lookup('ROTORKICK_WORKERS') or '1')
        self.workers: int = self._validate_workers(raw_workers)

    def load_config(self) -> Dict[str, str]:
        """Variables from the first config file found, or an empty dict.

        The file named by ROTORKICK_CONFIG is used when set; otherwise the
        nearest .env above the working directory, then ~/.rotorkick/config.
        """
        explicit = os.getenv(CONFIG_ENV)
        if explicit:
            path = pathlib.Path(explicit)
            if not path.is_file():
                logger.error(f"{CONFIG_ENV} points to a missing file: {path}")
                raise ConfigError(f"Config file not found: {path}", key=CONFIG_ENV)
        else:
            found = find_dotenv(usecwd=True)
            path = pathlib.Path(found) if found else USER_CONFIG
            if not path.is_file():
                logger.debug("No config file found")
                return {}
        logger.debug(f"Reading config from {path}")
        return {key: value for key, value in dotenv_values(path).items() if value is not None}

    def _lookup(self, name: str) -> Optional[str]:
        return os.getenv(name) or self.config_values.get(name) or None

    def resolve_output_dir(self, scenario_value: Optional[str] = None) -> str:
        """Return the output directory for a run.

        Precedence is: the value this object was built with (CLI flag or
        ROTORKICK_OUTPUT_DIR), then the scenario file's output_dir, then
        DEFAULT_OUTPUT_DIR.
        """
        return self.output_dir or scenario_value or DEFAULT_OUTPUT_DIR

    def _validate_workers(self, raw) -> int:
        """Validate and normalize the sweep worker count."""
        try:
            workers = int(raw)
        except (TypeError, ValueError):
            logger.error(f"Invalid worker count: {raw}")
            raise ValidationError(f"Worker count must be an integer, got: {raw}")
        if workers < 1:
            raise ValidationError(f"Worker count must be positive, got: {workers}")
        return workers
