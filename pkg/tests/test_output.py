"""Unit tests for the CSV and JSON writers."""
import json
import math
import pathlib
import pytest
from rotorkick.basis import InteractionKind, RotorState, build_cos
from rotorkick.errors import FilesystemError
from rotorkick.experiments import RunSummary
from rotorkick.output import (
    KICK_COLUMNS,
    ensure_output_dir,
    format_number,
    write_delays_csv,
    write_kicks_csv,
    write_summary_json,
    write_trajectory_csv,
)
from rotorkick.propagator import KickEvent, propagate_schedule

EPSILON: float = 0.03


def test_number_format_round_trips() -> None:
    value = math.pi / 7
    assert float(format_number(value)) == value


def test_trajectory_without_target_writes_nan_projection(tmp_path: pathlib.Path) -> None:
    trajectory = propagate_schedule(RotorState.basis_state(3), [], EPSILON, build_cos(None, 3), sampling=math.pi / EPSILON / 8)
    path = write_trajectory_csv(tmp_path / 'flat.csv', trajectory)
    lines = path.read_text().splitlines()
    assert lines[0] == 's,t_over_Trot,expectation,projection_sq,norm,leakage'
    assert lines[1].split(',')[3] == 'nan'
    assert lines[1].split(',')[5] == '0'
    assert len(lines) == trajectory.s.size + 1


def test_delays_are_numbered_by_following_kick(tmp_path: pathlib.Path) -> None:
    path = write_delays_csv(tmp_path / 'delays.csv', [1.0, 2.0], EPSILON)
    rows = path.read_text().splitlines()
    assert rows[1].startswith('1,1,')
    assert rows[2].startswith('2,2,')


def test_kick_rows_carry_time_in_both_units(tmp_path: pathlib.Path) -> None:
    kicks = [
        KickEvent(s_time=0.0, area=1.0, kind=InteractionKind.ORIENTATION),
        KickEvent(s_time=math.pi / EPSILON / 2, area=1.0, kind=InteractionKind.ORIENTATION),
    ]
    path = write_kicks_csv(tmp_path / 'kicks.csv', kicks, [0.0, 0.5], EPSILON)
    rows = [line.split(',') for line in path.read_text().splitlines()]
    assert tuple(rows[0]) == KICK_COLUMNS
    assert float(rows[2][2]) == pytest.approx(0.5)
    assert float(rows[2][4]) == 0.5


def test_summary_json_is_sorted_and_complete(tmp_path: pathlib.Path) -> None:
    summary = RunSummary(preset='demo', kick_count=3, final_efficiency=0.75, converged=True, max_leakage=1e-3)
    path = write_summary_json(tmp_path / 'summary.json', summary)
    text = path.read_text()
    assert text.endswith('\n')
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data['kick_count'] == 3
    assert data['converged'] is True


def test_output_dir_below_a_file_is_rejected(tmp_path: pathlib.Path) -> None:
    blocker = tmp_path / 'taken'
    blocker.write_text('')
    with pytest.raises(FilesystemError):
        ensure_output_dir(blocker / 'nested')
    assert ensure_output_dir(tmp_path / 'fresh' / 'dir').is_dir()
