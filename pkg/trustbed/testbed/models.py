from django.db import models


class ExperimentRun(models.Model):
    experiment_id = models.PositiveSmallIntegerField()
    # Text so the full unsigned 64-bit seed range survives every database backend.
    base_seed = models.CharField(max_length=20)
    rounds = models.PositiveIntegerField()
    nisr = models.PositiveIntegerField()
    code_version = models.CharField(max_length=20)
    output_dir = models.CharField(max_length=500, blank=True)
    config = models.JSONField(default=dict)
    summary = models.JSONField(default=list, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self) -> str:
        return f'Experiment {self.experiment_id} (seed {self.base_seed}, {self.nisr} runs)'

    @property
    def seeds(self) -> list[int]:
        base = int(self.base_seed)
        return [base + index for index in range(self.nisr)]


class SeriesPointRecord(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='points')
    interaction = models.PositiveIntegerField()
    group = models.CharField(max_length=10)
    mean_ug = models.FloatField()
    rank = models.PositiveSmallIntegerField(null=True, blank=True)
    n_runs = models.PositiveIntegerField()

    class Meta:
        ordering = ['interaction', 'id']
        constraints = [
            models.UniqueConstraint(fields=['run', 'interaction', 'group'], name='unique_point_per_group'),
        ]

    def __str__(self) -> str:
        return f'{self.group} #{self.interaction}: {self.mean_ug:.2f}'
