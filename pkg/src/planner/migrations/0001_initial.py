# Generated by Django 5.1 on 2026-10-18 10:02

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('experiment', models.CharField(choices=[('baselines', 'Baselines'), ('algorithms', 'Algorithms'), ('adaptability', 'Adaptability')], max_length=32, verbose_name='Experiment')),
                ('seed', models.IntegerField(default=0, verbose_name='Seed')),
                ('config', models.JSONField(blank=True, default=dict, verbose_name='Experiment config')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Created at')),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ('-created_at',),
            },
        ),
        migrations.CreateModel(
            name='AdaptabilityRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('task', models.CharField(max_length=32, verbose_name='Task type')),
                ('config', models.CharField(max_length=64, verbose_name='Search config')),
                ('correct', models.PositiveIntegerField(verbose_name='Correct tool choices')),
                ('random_correct', models.PositiveIntegerField(verbose_name='Random baseline correct')),
                ('cases', models.PositiveIntegerField(verbose_name='Cases')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='adaptability', to='planner.experimentrun', verbose_name='Run')),
            ],
            options={
                'verbose_name': 'Adaptability result',
                'verbose_name_plural': 'Adaptability results',
            },
        ),
        migrations.CreateModel(
            name='BudgetRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('config', models.CharField(max_length=64, verbose_name='Search config')),
                ('budget', models.PositiveIntegerField(verbose_name='Failed attempt budget')),
                ('successes', models.PositiveIntegerField(verbose_name='Successes')),
                ('cases', models.PositiveIntegerField(verbose_name='Cases')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='budgets', to='planner.experimentrun', verbose_name='Run')),
            ],
            options={
                'verbose_name': 'Budget point',
                'verbose_name_plural': 'Budget points',
            },
        ),
        migrations.CreateModel(
            name='MetricRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('task', models.CharField(max_length=32, verbose_name='Task type')),
                ('tool', models.CharField(max_length=32, verbose_name='Tool')),
                ('config', models.CharField(max_length=64, verbose_name='Search config')),
                ('nodes_mean', models.FloatField(verbose_name='Mean nodes expanded per search')),
                ('failed_attempts_mean', models.FloatField(blank=True, null=True, verbose_name='Mean failed attempts')),
                ('success', models.PositiveIntegerField(verbose_name='Successes')),
                ('cases', models.PositiveIntegerField(verbose_name='Cases')),
                ('plan_length_mean', models.FloatField(blank=True, null=True, verbose_name='Mean plan length')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='metrics', to='planner.experimentrun', verbose_name='Run')),
            ],
            options={
                'verbose_name': 'Metric row',
                'verbose_name_plural': 'Metric rows',
            },
        ),
    ]
