from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from testbed.experiments import OutputDirectoryError, describe_registry, run_experiment
from testbed.forms import ExperimentOptionsForm
from testbed.stores import STORE_CHOICES, STORE_NONE, save_experiment

OPTION_NAMES = ('experiment', 'config', 'seed', 'runs', 'rounds', 'out', 'jobs', 'store', 'smooth')


class Command(BaseCommand):
    help = 'Run one registered trust-model experiment and write its per-interaction CSV, summary and manifest.'

    def add_arguments(self, parser):
        parser.add_argument('--experiment', type=int, help='Experiment id (1-11).')
        parser.add_argument('--seed', type=int, help='Base seed; run i uses seed + i.')
        parser.add_argument('--runs', type=int, help='Number of independent runs (overrides NISR).')
        parser.add_argument('--rounds', type=int, help='Rounds per run.')
        parser.add_argument('--out', help='Output directory (default: TESTBED_OUTPUT_DIR).')
        parser.add_argument('--config', help='Flat key=value config file applied over the registry entry.')
        parser.add_argument('--jobs', type=int, help='Worker processes (default: TESTBED_JOBS).')
        parser.add_argument('--store', choices=STORE_CHOICES, help='Where to persist results (default: TESTBED_RESULT_STORE).')
        parser.add_argument('--smooth', action='store_true', help='Also write a smoothed series for plotting.')
        parser.add_argument('--list', action='store_true', help='List registered experiments and exit.')

    def handle(self, *args, **options):
        if options['list']:
            for line in describe_registry():
                self.stdout.write(line)
            return

        data = {name: options[name] for name in OPTION_NAMES if options.get(name) is not None}
        form = ExperimentOptionsForm(data=data)
        if not form.is_valid():
            raise CommandError(form.errors.as_text())

        config = form.cleaned_data['experiment_config']
        out_dir = form.cleaned_data['out'] or settings.TESTBED_OUTPUT_DIR
        jobs = form.cleaned_data['jobs'] or settings.TESTBED_JOBS
        store = form.cleaned_data['store'] or None
        try:
            output = run_experiment(config, out_dir, jobs=jobs, smooth=form.cleaned_data['smooth'])
        except OutputDirectoryError as exc:
            raise CommandError(str(exc)) from exc

        try:
            saved = save_experiment(output, store)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(f'Wrote {", ".join(p.name for p in output.files.values())} to {output.directory}')
        start, end = output.steady_window
        means = ', '.join(
            f'{group}={value:.2f}' if value is not None else f'{group}=n/a'
            for group, value in output.steady_state.items()
        )
        self.stdout.write(f'Steady-state mean UG over interactions {start}-{end}: {means}')
        if saved.store != STORE_NONE:
            self.stdout.write(f'Stored as run {saved.run_id} ({saved.store}).')
        self.stdout.write(
            self.style.SUCCESS(
                f'Experiment {config.experiment_id} finished: {config.nisr} runs x {config.rounds} rounds.'
            )
        )
