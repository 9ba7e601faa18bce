from __future__ import annotations

import logging
from typing import Any, Dict, List, Literal, NamedTuple, Optional

import pandas as pd
from django.conf import settings
from django.db import transaction
from django.http import Http404
from django.shortcuts import get_object_or_404

from .analysis import POINT_COLUMNS
from .models import ExperimentRun, SeriesPointRecord
from .mongo_repository import MongoUnavailableError, mongo_repository

logger = logging.getLogger(__name__)

STORE_SQL: Literal['sql'] = 'sql'
STORE_MONGO: Literal['mongo'] = 'mongo'
STORE_NONE: Literal['none'] = 'none'
STORE_CHOICES = (STORE_SQL, STORE_MONGO, STORE_NONE)
READ_SOURCES = {STORE_SQL, STORE_MONGO}


class SavedExperiment(NamedTuple):
    store: str
    run_id: Optional[str]


def default_store() -> str:
    store = getattr(settings, 'TESTBED_RESULT_STORE', STORE_SQL)
    return store if store in STORE_CHOICES else STORE_SQL


def get_requested_store(request) -> str:
    source = request.GET.get('source', STORE_SQL)
    if source not in READ_SOURCES:
        source = STORE_SQL
    return source


def fallback_to_sql(exc: Exception) -> str:
    logger.warning('MongoDB result store unavailable (%s); using the SQL store instead.', exc)
    return STORE_SQL


# ----- writes -----
@transaction.atomic
def save_to_sql(output) -> str:
    config = output.config
    run = ExperimentRun.objects.create(
        experiment_id=config.experiment_id,
        base_seed=str(config.base_seed),
        rounds=config.rounds,
        nisr=config.nisr,
        code_version=output.code_version,
        output_dir=str(output.directory),
        config=output.config_dict,
        summary=output.summary_records,
    )
    SeriesPointRecord.objects.bulk_create(
        [
            SeriesPointRecord(
                run=run,
                interaction=int(row.interaction),
                group=row.group,
                mean_ug=float(row.mean_ug),
                rank=None if pd.isna(row.rank) else int(row.rank),
                n_runs=int(row.n_runs),
            )
            for row in output.table.itertuples(index=False)
        ],
        batch_size=1000,
    )
    return str(run.pk)


def save_experiment(output, store: Optional[str] = None) -> SavedExperiment:
    """Persist a finished experiment; a failing MongoDB store falls back to SQL."""
    store = store or default_store()
    if store not in STORE_CHOICES:
        raise ValueError(f'unknown result store {store!r}; choose one of {", ".join(STORE_CHOICES)}')
    if store == STORE_NONE:
        return SavedExperiment(STORE_NONE, None)
    if store == STORE_MONGO:
        try:
            return SavedExperiment(STORE_MONGO, mongo_repository.save_experiment(output))
        except MongoUnavailableError as exc:
            store = fallback_to_sql(exc)
    return SavedExperiment(STORE_SQL, save_to_sql(output))


# ----- reads (SQL side; the mongo side lives on MongoResultStore) -----
def _parse_sql_id(raw_id) -> int:
    if isinstance(raw_id, int):
        return raw_id
    if isinstance(raw_id, str) and raw_id.isdigit():
        return int(raw_id)
    raise Http404('Invalid run id')


def _run_summary(run: ExperimentRun) -> Dict[str, Any]:
    return {
        'id': str(run.pk),
        'experiment_id': run.experiment_id,
        'base_seed': run.base_seed,
        'rounds': run.rounds,
        'nisr': run.nisr,
        'code_version': run.code_version,
        'output_dir': run.output_dir,
        'created_at': run.created_at.isoformat(),
    }


def sql_list_runs() -> List[Dict[str, Any]]:
    return [_run_summary(run) for run in ExperimentRun.objects.all()]


def sql_get_run(raw_run_id) -> Dict[str, Any]:
    run = get_object_or_404(ExperimentRun, pk=_parse_sql_id(raw_run_id))
    detail = _run_summary(run)
    detail['config'] = run.config
    detail['summary'] = run.summary
    detail['seeds'] = [str(seed) for seed in run.seeds]
    return detail


def sql_points_frame(raw_run_id) -> pd.DataFrame:
    run = get_object_or_404(ExperimentRun, pk=_parse_sql_id(raw_run_id))
    rows = list(run.points.values_list(*POINT_COLUMNS))
    frame = pd.DataFrame(rows, columns=POINT_COLUMNS)
    return frame.astype({'interaction': 'int64', 'mean_ug': 'float64', 'rank': 'Int64', 'n_runs': 'Int64'})
