# Generated by Django 5.2.7 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('experiment_id', models.PositiveSmallIntegerField()),
                ('base_seed', models.CharField(max_length=20)),
                ('rounds', models.PositiveIntegerField()),
                ('nisr', models.PositiveIntegerField()),
                ('code_version', models.CharField(max_length=20)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('config', models.JSONField(default=dict)),
                ('summary', models.JSONField(blank=True, default=list)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='SeriesPointRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('interaction', models.PositiveIntegerField()),
                ('group', models.CharField(max_length=10)),
                ('mean_ug', models.FloatField()),
                ('rank', models.PositiveSmallIntegerField(blank=True, null=True)),
                ('n_runs', models.PositiveIntegerField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='points', to='testbed.experimentrun')),
            ],
            options={
                'ordering': ['interaction', 'id'],
                'constraints': [models.UniqueConstraint(fields=('run', 'interaction', 'group'), name='unique_point_per_group')],
            },
        ),
    ]
