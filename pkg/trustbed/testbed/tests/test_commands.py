import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import CommandError, call_command
from django.test import TestCase

from testbed.models import ExperimentRun, SeriesPointRecord
from testbed.mongo_repository import MongoUnavailableError

SMALL_POPULATION = """\
# desk-sized population
population.good=2
population.ordinary=2
population.intermittent=1
population.bad=2
population.consumers=30
world.radius_of_operation=0.8
"""


class RunExperimentCommandTests(TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.out = Path(tmp.name)
        self.config_file = self.out / 'small.cfg'
        self.config_file.write_text(SMALL_POPULATION)

    def call(self, *args):
        stdout = StringIO()
        call_command('run_experiment', *args, stdout=stdout, stderr=StringIO())
        return stdout.getvalue()

    def small_run(self, *extra):
        return self.call(
            '--experiment', '2', '--runs', '2', '--rounds', '5', '--seed', '0',
            '--config', str(self.config_file), '--out', str(self.out), *extra,
        )

    def test_list(self):
        output = self.call('--list')
        self.assertEqual(len(output.strip().splitlines()), 11)
        self.assertIn('NISR=12', output)

    def test_run_writes_files_and_stores_in_sql(self):
        output = self.small_run('--store', 'sql')
        self.assertIn('Experiment 2 finished: 2 runs x 5 rounds.', output)
        self.assertIn('Steady-state mean UG over interactions', output)
        self.assertTrue((self.out / 'exp2' / 'series.csv').exists())
        run = ExperimentRun.objects.get()
        self.assertEqual((run.experiment_id, run.base_seed, run.nisr, run.rounds), (2, '0', 2, 5))
        self.assertEqual(run.config['dynamics.p_ppc'], 0.02)
        self.assertEqual(run.config['population.consumers'], 30)
        lines = (self.out / 'exp2' / 'points.csv').read_text().strip().splitlines()
        self.assertEqual(SeriesPointRecord.objects.filter(run=run).count(), len(lines) - 1)

    def test_store_none_skips_database(self):
        self.small_run('--store', 'none', '--smooth')
        self.assertFalse(ExperimentRun.objects.exists())
        self.assertTrue((self.out / 'exp2' / 'series_smoothed.csv').exists())

    def test_mongo_failure_falls_back_to_sql(self):
        with mock.patch(
            'testbed.stores.mongo_repository.save_experiment',
            side_effect=MongoUnavailableError('server down'),
        ):
            with self.assertLogs('testbed.stores', level='WARNING') as logs:
                output = self.small_run('--store', 'mongo')
        self.assertIn('(sql)', output)
        self.assertEqual(ExperimentRun.objects.count(), 1)
        self.assertIn('server down', logs.output[0])

    def test_seed_beyond_signed_range(self):
        seed = str(2**64 - 1)
        self.call(
            '--experiment', '1', '--runs', '1', '--rounds', '0', '--seed', seed,
            '--config', str(self.config_file), '--out', str(self.out), '--store', 'sql',
        )
        self.assertEqual(ExperimentRun.objects.get().base_seed, seed)

    def test_output_directory_from_settings(self):
        with self.settings(TESTBED_OUTPUT_DIR=self.out / 'from-settings'):
            self.call('--experiment', '1', '--runs', '1', '--rounds', '2', '--config', str(self.config_file), '--store', 'none')
        self.assertTrue((self.out / 'from-settings' / 'exp1' / 'manifest.json').exists())

    def test_unknown_experiment(self):
        with self.assertRaisesMessage(CommandError, 'unknown experiment 12; valid ids: 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11'):
            self.call('--experiment', '12', '--out', str(self.out))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_missing_experiment(self):
        with self.assertRaisesMessage(CommandError, 'experiment id is required'):
            self.call('--out', str(self.out))

    def test_experiment_id_from_config_file(self):
        self.config_file.write_text(SMALL_POPULATION + 'experiment_id=11\nrounds=2\nnisr=1\n')
        self.call('--config', str(self.config_file), '--out', str(self.out), '--store', 'none')
        self.assertTrue((self.out / 'exp11' / 'series.csv').exists())

    def test_bad_config_key(self):
        self.config_file.write_text('dynamics.p_bogus=1\n')
        with self.assertRaisesMessage(CommandError, 'p_bogus'):
            self.call('--experiment', '1', '--config', str(self.config_file), '--out', str(self.out))

    def test_missing_config_file(self):
        with self.assertRaisesMessage(CommandError, 'cannot read config file'):
            self.call('--experiment', '1', '--config', str(self.out / 'absent.cfg'))

    def test_unwritable_output(self):
        blocker = self.out / 'blocker'
        blocker.write_text('')
        with self.assertRaisesMessage(CommandError, 'cannot write'):
            self.small_run('--out', str(blocker))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_zero_runs_rejected(self):
        with self.assertRaises(CommandError):
            self.call('--experiment', '1', '--runs', '0', '--out', str(self.out))
