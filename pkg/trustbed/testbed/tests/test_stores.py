import tempfile
from unittest import mock

from django.http import Http404
from django.test import SimpleTestCase, TestCase, override_settings

from testbed.experiments import run_experiment
from testbed.models import ExperimentRun
from testbed.mongo_repository import MongoResultStore, MongoUnavailableError, PyMongoError
from testbed.stores import (
    STORE_MONGO,
    STORE_NONE,
    STORE_SQL,
    SavedExperiment,
    default_store,
    save_experiment,
    sql_get_run,
    sql_points_frame,
)

from .factories import small_config


def finished_experiment(test_case, **overrides):
    tmp = tempfile.TemporaryDirectory()
    test_case.addCleanup(tmp.cleanup)
    return run_experiment(small_config(rounds=4, **overrides), tmp.name)


class SaveExperimentTests(TestCase):
    def setUp(self):
        self.output = finished_experiment(self, base_seed=2**63 + 5)

    def test_none_store(self):
        self.assertEqual(save_experiment(self.output, STORE_NONE), SavedExperiment(STORE_NONE, None))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_sql_store(self):
        saved = save_experiment(self.output, STORE_SQL)
        run = ExperimentRun.objects.get(pk=saved.run_id)
        self.assertEqual(run.base_seed, str(2**63 + 5))
        self.assertEqual(run.seeds, [2**63 + 5, 2**63 + 6])
        self.assertEqual(sql_get_run(saved.run_id)['seeds'], [str(2**63 + 5), str(2**63 + 6)])
        self.assertEqual(run.points.count(), len(self.output.table))
        self.assertEqual(len(run.summary), 12)
        frame = sql_points_frame(saved.run_id)
        self.assertEqual(list(frame['mean_ug'].round(9)), list(self.output.table['mean_ug'].round(9)))

    def test_mongo_store(self):
        with mock.patch('testbed.stores.mongo_repository.save_experiment', return_value='65f0c0ffee') as save:
            saved = save_experiment(self.output, STORE_MONGO)
        save.assert_called_once_with(self.output)
        self.assertEqual(saved, SavedExperiment(STORE_MONGO, '65f0c0ffee'))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_mongo_fallback(self):
        with mock.patch(
            'testbed.stores.mongo_repository.save_experiment', side_effect=MongoUnavailableError('no server')
        ):
            with self.assertLogs('testbed.stores', level='WARNING'):
                saved = save_experiment(self.output, STORE_MONGO)
        self.assertEqual(saved.store, STORE_SQL)
        self.assertTrue(ExperimentRun.objects.filter(pk=saved.run_id).exists())

    def test_unknown_store(self):
        with self.assertRaises(ValueError):
            save_experiment(self.output, 'csv')

    @override_settings(TESTBED_RESULT_STORE='none')
    def test_default_store_from_settings(self):
        self.assertEqual(default_store(), STORE_NONE)
        self.assertEqual(save_experiment(self.output).store, STORE_NONE)

    @override_settings(TESTBED_RESULT_STORE='cloud')
    def test_unsupported_setting_means_sql(self):
        self.assertEqual(default_store(), STORE_SQL)


class MongoResultStoreTests(SimpleTestCase):
    def setUp(self):
        self.store = MongoResultStore()

    def test_save_writes_run_and_points(self):
        output = finished_experiment(self)
        database = mock.MagicMock()
        collection = database.__getitem__.return_value
        collection.insert_one.return_value.inserted_id = 'run-oid'
        with mock.patch.object(MongoResultStore, 'db', new_callable=mock.PropertyMock, return_value=database):
            run_id = self.store.save_experiment(output)
        self.assertEqual(run_id, 'run-oid')
        document = collection.insert_one.call_args.args[0]
        self.assertEqual(document['base_seed'], str(output.config.base_seed))
        self.assertEqual(document['config']['rounds'], 4)
        self.assertEqual(document['seeds'], [str(seed) for seed in output.seeds])
        points = collection.insert_many.call_args.args[0]
        self.assertEqual(len(points), len(output.table))
        self.assertTrue(all(p['run_id'] == 'run-oid' for p in points))

    def test_write_errors_become_unavailable(self):
        output = finished_experiment(self)
        database = mock.MagicMock()
        database.__getitem__.return_value.insert_one.side_effect = PyMongoError('write failed')
        with mock.patch.object(MongoResultStore, 'db', new_callable=mock.PropertyMock, return_value=database):
            with self.assertRaises(MongoUnavailableError):
                self.store.save_experiment(output)

    def test_failed_ping_is_reported(self):
        client = mock.MagicMock()
        client.admin.command.side_effect = PyMongoError('timeout')
        with mock.patch('testbed.mongo_repository.MongoClient', return_value=client):
            with self.assertRaises(MongoUnavailableError):
                self.store.db
        self.assertIsNone(self.store._client)

    def test_invalid_id(self):
        with self.assertRaises(Http404):
            self.store._object_id('not-an-object-id')
