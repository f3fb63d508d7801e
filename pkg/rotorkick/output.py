"""CSV and JSON writers for trajectories, kick schedules and run summaries.

Numbers are written with 17 significant digits so that reruns of the same
configuration produce byte-identical files.
"""
import csv
import json
import pathlib
from typing import Iterable, Sequence
import numpy as np
from pydantic import BaseModel
from rotorkick.errors import FilesystemError
from rotorkick.logger import logger
from rotorkick.propagator import KickEvent, Trajectory, to_t_over_trot

TRAJECTORY_COLUMNS = ("s", "t_over_Trot", "expectation", "projection_sq", "norm", "leakage")
KICK_COLUMNS = ("kick_index", "s_time", "t_over_Trot", "area", "value_at_kick")
DELAY_COLUMNS = ("kick_index", "delay_s", "delay_t_over_Trot")


def format_number(value: float) -> str:
    return "%.17g" % value


def ensure_output_dir(path) -> pathlib.Path:
    directory = pathlib.Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error(f"Cannot create output directory {directory}: {e}")
        raise FilesystemError(f"Cannot create output directory {directory}: {e}")
    return directory


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> pathlib.Path:
    path = pathlib.Path(path)
    try:
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([v if isinstance(v, (str, int)) else format_number(v) for v in row])
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise FilesystemError(f"Cannot write {path}: {e}")
    logger.debug(f"Wrote {path}")
    return path


def write_trajectory_csv(path, trajectory: Trajectory) -> pathlib.Path:
    size = trajectory.s.size
    projection = trajectory.projection_sq if trajectory.projection_sq is not None else np.full(size, np.nan)
    leakage = trajectory.leakage if trajectory.leakage is not None else np.zeros(size)
    columns = (trajectory.s, trajectory.t_over_trot, trajectory.expectation, projection, trajectory.norm, leakage)
    return _write_rows(path, TRAJECTORY_COLUMNS, zip(*(c.tolist() for c in columns)))


def write_kicks_csv(path, kicks: Sequence[KickEvent], values: Sequence[float], epsilon: float) -> pathlib.Path:
    rows = (
        (index, kick.s_time, kick.t_over_trot(epsilon), kick.area, value)
        for index, (kick, value) in enumerate(zip(kicks, values))
    )
    return _write_rows(path, KICK_COLUMNS, rows)


def write_delays_csv(path, delays: Sequence[float], epsilon: float) -> pathlib.Path:
    # delay k precedes kick k + 1
    rows = ((index + 1, delay, to_t_over_trot(delay, epsilon)) for index, delay in enumerate(delays))
    return _write_rows(path, DELAY_COLUMNS, rows)


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> pathlib.Path:
    return _write_rows(path, header, rows)


def write_summary_json(path, summary: BaseModel) -> pathlib.Path:
    path = pathlib.Path(path)
    try:
        with open(path, 'w') as f:
            json.dump(summary.model_dump(mode='json'), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise FilesystemError(f"Cannot write {path}: {e}")
    logger.debug(f"Wrote {path}")
    return path
