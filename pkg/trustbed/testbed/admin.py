from django.contrib import admin

from .models import ExperimentRun, SeriesPointRecord


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'experiment_id', 'base_seed', 'rounds', 'nisr', 'code_version', 'created_at')
    list_filter = ('experiment_id', 'code_version')
    search_fields = ('base_seed', 'output_dir')
    readonly_fields = ('created_at',)


@admin.register(SeriesPointRecord)
class SeriesPointRecordAdmin(admin.ModelAdmin):
    list_display = ('run', 'interaction', 'group', 'mean_ug', 'rank', 'n_runs')
    list_filter = ('group', 'rank')
    list_select_related = ('run',)
