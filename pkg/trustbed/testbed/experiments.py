"""Experiment registry and the batch runner that turns a config into CSV files."""
from __future__ import annotations

import json
import logging
import math
import multiprocessing
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import pandas as pd

from . import __version__
from .analysis import (
    MEANS_COLUMNS,
    SeriesPoint,
    aggregate_means,
    default_windows,
    points_frame,
    rank_series,
    run_means,
    smoothed_frame,
    steady_state_mean,
    summarize,
    wide_from_points,
)
from .config import ExperimentConfig, config_to_dict, with_overrides
from .engine import run_simulation
from .population import GROUP_ORDER

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'
# Interactions compared once learning has settled; shorter series use their second half.
STEADY_WINDOW = (100, 400)
ROUND_COLUMNS = ['run_id', 'round', 'group', 'active', 'served', 'isolated', 'unserved']

# id -> (description, rounds, nisr, non-default dynamics)
REGISTRY: Dict[int, Tuple[str, int, int, Dict[str, float]]] = {
    1: ('static setting', 500, 30, {}),
    2: ('provider population change 2%', 500, 30, {'p_ppc': 0.02}),
    3: ('provider population change 5%', 500, 10, {'p_ppc': 0.05}),
    4: ('provider population change 10%', 500, 10, {'p_ppc': 0.10}),
    5: ('consumer population change 2%', 500, 10, {'p_cpc': 0.02}),
    6: ('consumer population change 5%', 500, 30, {'p_cpc': 0.05}),
    7: ('consumer population change 10%', 1000, 10, {'p_cpc': 0.10}),
    8: ('provider 2% and consumer 5% population change', 1000, 30, {'p_ppc': 0.02, 'p_cpc': 0.05}),
    9: ('provider and consumer population change 10%', 1000, 12, {'p_ppc': 0.10, 'p_cpc': 0.10}),
    10: ('provider performance drift', 500, 30, {'p_mu_c': 0.10, 'm': 1.0}),
    11: ('provider profile switching', 500, 30, {'p_profile_switch': 0.02}),
}


class UnknownExperimentError(KeyError):
    def __init__(self, experiment_id: Any) -> None:
        valid = ', '.join(str(i) for i in sorted(REGISTRY))
        self.message = f'unknown experiment {experiment_id!r}; valid ids: {valid}'
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class OutputDirectoryError(OSError):
    """Raised when results cannot be written; checked before any run starts."""


def experiment_config(experiment_id: int, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    try:
        _, rounds, nisr, dynamics = REGISTRY[int(experiment_id)]
    except (KeyError, TypeError, ValueError):
        raise UnknownExperimentError(experiment_id) from None
    values: Dict[str, Any] = {'experiment_id': int(experiment_id), 'rounds': rounds, 'nisr': nisr}
    values.update({f'dynamics.{name}': value for name, value in dynamics.items()})
    values.update(overrides or {})
    return with_overrides(ExperimentConfig(), values)


def describe_registry() -> List[str]:
    lines = []
    for experiment_id, (label, rounds, nisr, dynamics) in sorted(REGISTRY.items()):
        changes = ', '.join(f'{k}={v}' for k, v in dynamics.items()) or 'none'
        lines.append(f'{experiment_id:>2}  N={rounds:<5} NISR={nisr:<3} dynamics: {changes}  ({label})')
    return lines


def prepare_output_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path, prefix='.write-check-'):
            pass
    except OSError as exc:
        raise OutputDirectoryError(f'cannot write to {path}: {exc}') from exc
    return path


@dataclass
class ExperimentOutput:
    config: ExperimentConfig
    seeds: List[int]
    directory: Path
    points: List[SeriesPoint]
    table: pd.DataFrame
    summary: pd.DataFrame
    round_stats: pd.DataFrame
    steady_window: Tuple[int, int] = STEADY_WINDOW
    steady_state: Dict[str, Optional[float]] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)
    code_version: str = __version__

    @property
    def series(self) -> pd.DataFrame:
        return wide_from_points(self.table)

    @property
    def config_dict(self) -> Dict[str, Any]:
        # Seeds may exceed the signed 64-bit range of BSON and some SQL backends.
        return {**config_to_dict(self.config), 'base_seed': str(self.config.base_seed)}

    @property
    def summary_records(self) -> List[Dict[str, Any]]:
        records = self.summary.to_dict(orient='records')
        return [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()} for row in records]


def _simulate(job: Tuple[ExperimentConfig, int, int]) -> Tuple[int, pd.DataFrame, pd.DataFrame]:
    config, seed, run_id = job
    result = run_simulation(config, seed, run_id)
    stats = pd.DataFrame(
        [
            (s.run_id, s.round, s.group.value, s.active, s.served, s.isolated, s.active - s.served - s.isolated)
            for s in result.round_stats
        ],
        columns=ROUND_COLUMNS,
    )
    return run_id, run_means(result.records), stats


def steady_window(n_max: int) -> Tuple[int, int]:
    start, end = STEADY_WINDOW
    if n_max < start:
        return max(1, n_max // 2), n_max
    return start, min(end, n_max)


def steady_state(table: pd.DataFrame, window: Tuple[int, int]) -> Dict[str, Optional[float]]:
    start, end = window
    means = {}
    for group in GROUP_ORDER:
        value = steady_state_mean(table, group, start, end)
        means[group.value] = None if math.isnan(value) else value
    return means


def simulate_runs(config: ExperimentConfig, jobs: int = 1) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Execute every run of ``config`` (in a worker pool when ``jobs > 1``) in run order."""
    work = [(config, seed, run_id) for run_id, seed in enumerate(config.seeds())]
    finished: List[Tuple[int, pd.DataFrame, pd.DataFrame]] = []
    if jobs <= 1 or len(work) <= 1:
        for job in work:
            finished.append(_simulate(job))
            logger.info('experiment %s: run %s/%s done', config.experiment_id, len(finished), len(work))
    else:
        with multiprocessing.Pool(min(jobs, len(work))) as pool:
            for item in pool.imap_unordered(_simulate, work):
                finished.append(item)
                logger.info('experiment %s: run %s/%s done', config.experiment_id, len(finished), len(work))
    finished.sort(key=lambda item: item[0])
    means = [m for _, m, _ in finished if not m.empty]
    stats = [s for _, _, s in finished if not s.empty]
    return (
        pd.concat(means, ignore_index=True) if means else pd.DataFrame(columns=MEANS_COLUMNS),
        pd.concat(stats, ignore_index=True) if stats else pd.DataFrame(columns=ROUND_COLUMNS),
    )


def run_experiment(
    config: ExperimentConfig,
    out_dir: Path | str,
    jobs: int = 1,
    smooth: bool = False,
) -> ExperimentOutput:
    directory = prepare_output_dir(Path(out_dir) / f'exp{config.experiment_id}')
    logger.info(
        'experiment %s: %s runs x %s rounds, base seed %s',
        config.experiment_id,
        config.nisr,
        config.rounds,
        config.base_seed,
    )
    means, round_stats = simulate_runs(config, jobs)
    points = aggregate_means(means, config.nisr)
    table = points_frame(rank_series(points))
    n_max = int(table['interaction'].max()) if not table.empty else 0
    summary = summarize(table, default_windows(n_max))
    window = steady_window(n_max)
    steady = steady_state(table, window)
    logger.info('experiment %s: steady-state mean UG over interactions %s-%s: %s', config.experiment_id, *window, steady)

    output = ExperimentOutput(
        config=config,
        seeds=config.seeds(),
        directory=directory,
        points=points,
        table=table,
        summary=summary,
        round_stats=round_stats,
        steady_window=window,
        steady_state=steady,
    )
    output.files['series'] = _write_csv(output.series, directory / 'series.csv')
    output.files['points'] = _write_csv(table, directory / 'points.csv')
    output.files['summary'] = _write_csv(summary, directory / 'summary.csv')
    output.files['rounds'] = _write_csv(round_stats, directory / 'rounds.csv')
    if smooth:
        output.files['smoothed'] = _write_csv(smoothed_frame(output.series), directory / 'series_smoothed.csv')
    output.files['manifest'] = write_manifest(output)
    return output


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def manifest_payload(output: ExperimentOutput) -> Dict[str, Any]:
    return {
        'experiment_id': output.config.experiment_id,
        'config': config_to_dict(output.config),
        'seeds': output.seeds,
        'code_version': output.code_version,
        'steady_state': {'window': list(output.steady_window), 'mean_ug': output.steady_state},
        'created_at': datetime.now(timezone.utc).isoformat(),
        'files': {name: path.name for name, path in output.files.items()},
    }


def write_manifest(output: ExperimentOutput) -> Path:
    path = output.directory / 'manifest.json'
    payload = manifest_payload(output)
    payload['files']['manifest'] = path.name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path
