from __future__ import annotations

import math
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import pandas as pd
from django.conf import settings
from django.http import Http404

from .analysis import POINT_COLUMNS

try:
    from bson import ObjectId
    from bson.errors import InvalidId
    from pymongo import ASCENDING, DESCENDING, MongoClient
    from pymongo.errors import PyMongoError
except ImportError:  # pragma: no cover - handled at runtime
    ObjectId = None  # type: ignore
    InvalidId = Exception  # type: ignore
    MongoClient = None  # type: ignore
    ASCENDING, DESCENDING = 1, -1
    PyMongoError = Exception  # type: ignore


class MongoUnavailableError(RuntimeError):
    """Raised when the MongoDB result store cannot be used."""


def _clean(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _run_document(doc: dict) -> Dict[str, Any]:
    created = doc.get('created_at')
    return {
        'id': str(doc['_id']),
        'experiment_id': doc.get('experiment_id'),
        'base_seed': str(doc.get('base_seed', '')),
        'rounds': doc.get('rounds'),
        'nisr': doc.get('nisr'),
        'code_version': doc.get('code_version', ''),
        'output_dir': doc.get('output_dir', ''),
        'created_at': created.isoformat() if hasattr(created, 'isoformat') else created,
    }


class MongoResultStore:
    runs_collection = 'experiment_runs'
    points_collection = 'series_points'

    def __init__(self) -> None:
        self._client: Optional[MongoClient] = None

    def _require_client(self) -> MongoClient:
        if not self.is_available():  # pragma: no cover - import guard path
            raise MongoUnavailableError('pymongo is not installed; run `pip install pymongo` to use the mongo store.')
        if self._client is None:
            try:
                self._client = MongoClient(settings.MONGO_URI, serverSelectionTimeoutMS=3000)
                # Fail fast if the server is unreachable.
                self._client.admin.command('ping')
            except PyMongoError as exc:
                self._client = None
                raise MongoUnavailableError(f'could not connect to MongoDB ({exc}).') from exc
        return self._client

    @property
    def db(self):
        return self._require_client()[settings.MONGO_DB_NAME]

    def is_available(self) -> bool:
        return MongoClient is not None

    def _object_id(self, raw_id: str) -> ObjectId:
        if ObjectId is None:  # pragma: no cover
            raise MongoUnavailableError('pymongo is not available')
        try:
            return ObjectId(str(raw_id))
        except (InvalidId, TypeError):
            raise Http404('Invalid run id')

    # ----- writes -----
    def save_experiment(self, output) -> str:
        config = output.config
        try:
            result = self.db[self.runs_collection].insert_one(
                {
                    'experiment_id': config.experiment_id,
                    'base_seed': str(config.base_seed),
                    'rounds': config.rounds,
                    'nisr': config.nisr,
                    'seeds': [str(seed) for seed in output.seeds],
                    'code_version': output.code_version,
                    'output_dir': str(output.directory),
                    'config': output.config_dict,
                    'summary': output.summary_records,
                    'created_at': datetime.now(timezone.utc),
                }
            )
            points = [
                {
                    'run_id': result.inserted_id,
                    'interaction': int(row.interaction),
                    'group': row.group,
                    'mean_ug': float(row.mean_ug),
                    'rank': None if pd.isna(row.rank) else int(row.rank),
                    'n_runs': int(row.n_runs),
                }
                for row in output.table.itertuples(index=False)
            ]
            if points:
                self.db[self.points_collection].insert_many(points, ordered=True)
        except PyMongoError as exc:
            raise MongoUnavailableError(f'MongoDB write failed ({exc}).') from exc
        return str(result.inserted_id)

    # ----- reads -----
    def list_runs(self) -> List[Dict[str, Any]]:
        cursor = self.db[self.runs_collection].find({}, {'config': 0, 'summary': 0}).sort('created_at', DESCENDING)
        return [_run_document(doc) for doc in cursor]

    def get_run(self, raw_run_id: str) -> Dict[str, Any]:
        doc = self.db[self.runs_collection].find_one({'_id': self._object_id(raw_run_id)})
        if not doc:
            raise Http404('Run not found')
        run = _run_document(doc)
        run['config'] = doc.get('config', {})
        run['seeds'] = [str(seed) for seed in doc.get('seeds', [])]
        run['summary'] = [{k: _clean(v) for k, v in row.items()} for row in doc.get('summary', [])]
        return run

    def points_frame(self, raw_run_id: str) -> pd.DataFrame:
        run_oid = self._object_id(raw_run_id)
        if not self.db[self.runs_collection].find_one({'_id': run_oid}, {'_id': 1}):
            raise Http404('Run not found')
        cursor = self.db[self.points_collection].find({'run_id': run_oid}, {'_id': 0, 'run_id': 0})
        rows = [[doc.get(column) for column in POINT_COLUMNS] for doc in cursor.sort('interaction', ASCENDING)]
        frame = pd.DataFrame(rows, columns=POINT_COLUMNS)
        return frame.astype({'interaction': 'int64', 'mean_ug': 'float64', 'rank': 'Int64', 'n_runs': 'Int64'})


mongo_repository = MongoResultStore()
