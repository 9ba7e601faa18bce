from pathlib import Path

from django import forms

from .config import ConfigError, parse_config_text
from .experiments import UnknownExperimentError, experiment_config
from .stores import STORE_CHOICES

MAX_SEED = 2**64 - 1


class ExperimentOptionsForm(forms.Form):
    """Validates ``run_experiment`` options and resolves them into an ``ExperimentConfig``.

    Precedence, lowest first: registry entry, ``--config`` file, individual flags.
    """

    # Checked against the registry in clean().
    experiment = forms.IntegerField(required=False)
    config = forms.CharField(required=False)
    seed = forms.IntegerField(required=False, min_value=0, max_value=MAX_SEED)
    runs = forms.IntegerField(required=False, min_value=1)
    rounds = forms.IntegerField(required=False, min_value=0)
    out = forms.CharField(required=False)
    jobs = forms.IntegerField(required=False, min_value=1)
    store = forms.ChoiceField(required=False, choices=[(s, s) for s in STORE_CHOICES])
    smooth = forms.BooleanField(required=False)

    def clean_config(self):
        path = self.cleaned_data.get('config')
        if not path:
            return {}
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as exc:
            raise forms.ValidationError(f'cannot read config file {path}: {exc.strerror or exc}') from exc
        try:
            return parse_config_text(text)
        except ConfigError as exc:
            raise forms.ValidationError(f'{path}: {exc}') from exc

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        file_values = dict(cleaned_data.get('config') or {})
        experiment = cleaned_data.get('experiment')
        raw_file_id = file_values.pop('experiment_id', None)
        if experiment is None and raw_file_id is not None:
            experiment = raw_file_id
        if experiment is None:
            raise forms.ValidationError('an experiment id is required (--experiment or experiment_id in --config).')

        overrides = dict(file_values)
        for field, key in (('seed', 'base_seed'), ('runs', 'nisr'), ('rounds', 'rounds')):
            if cleaned_data.get(field) is not None:
                overrides[key] = cleaned_data[field]
        try:
            cleaned_data['experiment_config'] = experiment_config(experiment, overrides)
        except (UnknownExperimentError, ConfigError) as exc:
            raise forms.ValidationError(str(exc)) from exc
        return cleaned_data
