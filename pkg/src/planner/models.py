from django.db import models, transaction

from planner.bench import MetricsTable


class ExperimentRunManager(models.Manager):
    def record(self, table: MetricsTable, config: dict | None = None, seed: int = 0) -> "ExperimentRun":
        """Stores a metrics table with all of its rows."""
        with transaction.atomic():
            run = self.create(experiment=table.experiment, seed=seed, config=config or {})
            MetricRecord.objects.bulk_create([
                MetricRecord(
                    run=run,
                    task=row.task,
                    tool=row.tool,
                    config=row.config,
                    nodes_mean=row.nodes_mean,
                    failed_attempts_mean=row.failed_attempts_mean,
                    success=row.success,
                    cases=row.cases,
                    plan_length_mean=row.plan_length_mean,
                )
                for row in table.rows
            ])
            BudgetRecord.objects.bulk_create([
                BudgetRecord(
                    run=run,
                    config=row.config,
                    budget=row.budget,
                    successes=row.successes,
                    cases=row.cases,
                )
                for row in table.budget_rows
            ])
            AdaptabilityRecord.objects.bulk_create([
                AdaptabilityRecord(
                    run=run,
                    task=row.task,
                    config=row.config,
                    correct=row.correct,
                    random_correct=row.random_correct,
                    cases=row.cases,
                )
                for row in table.adaptability_rows
            ])
        return run


class ExperimentRun(models.Model):
    objects = ExperimentRunManager()

    EXPERIMENT_CHOICES = (
        ("baselines", "Baselines"),
        ("algorithms", "Algorithms"),
        ("adaptability", "Adaptability"),
    )

    experiment = models.CharField(max_length=32, choices=EXPERIMENT_CHOICES, verbose_name="Experiment")
    seed = models.IntegerField(default=0, verbose_name="Seed")
    config = models.JSONField(default=dict, blank=True, verbose_name="Experiment config")
    created_at = models.DateTimeField(auto_now_add=True, verbose_name="Created at")

    def __str__(self):
        return f"{self.experiment} #{self.pk} (seed {self.seed})"

    def to_table(self) -> MetricsTable:
        from planner.bench import AdaptabilityRow, BudgetRow, MetricRow

        return MetricsTable(
            experiment=self.experiment,
            rows=[
                MetricRow(
                    task=r.task,
                    tool=r.tool,
                    config=r.config,
                    nodes_mean=r.nodes_mean,
                    failed_attempts_mean=r.failed_attempts_mean,
                    success=r.success,
                    cases=r.cases,
                    plan_length_mean=r.plan_length_mean,
                )
                for r in self.metrics.order_by("id")
            ],
            budget_rows=[
                BudgetRow(config=r.config, budget=r.budget, successes=r.successes, cases=r.cases)
                for r in self.budgets.order_by("id")
            ],
            adaptability_rows=[
                AdaptabilityRow(
                    task=r.task,
                    config=r.config,
                    correct=r.correct,
                    random_correct=r.random_correct,
                    cases=r.cases,
                )
                for r in self.adaptability.order_by("id")
            ],
        )

    class Meta:
        verbose_name = "Experiment run"
        verbose_name_plural = "Experiment runs"
        ordering = ("-created_at",)


class MetricRecord(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="metrics", verbose_name="Run")
    task = models.CharField(max_length=32, verbose_name="Task type")
    tool = models.CharField(max_length=32, verbose_name="Tool")
    config = models.CharField(max_length=64, verbose_name="Search config")
    nodes_mean = models.FloatField(verbose_name="Mean nodes expanded per search")
    failed_attempts_mean = models.FloatField(blank=True, null=True, verbose_name="Mean failed attempts")
    success = models.PositiveIntegerField(verbose_name="Successes")
    cases = models.PositiveIntegerField(verbose_name="Cases")
    plan_length_mean = models.FloatField(blank=True, null=True, verbose_name="Mean plan length")

    def __str__(self):
        return f"{self.task}/{self.tool} {self.config}"

    class Meta:
        verbose_name = "Metric row"
        verbose_name_plural = "Metric rows"


class BudgetRecord(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="budgets", verbose_name="Run")
    config = models.CharField(max_length=64, verbose_name="Search config")
    budget = models.PositiveIntegerField(verbose_name="Failed attempt budget")
    successes = models.PositiveIntegerField(verbose_name="Successes")
    cases = models.PositiveIntegerField(verbose_name="Cases")

    @property
    def success_rate(self) -> float:
        return self.successes / self.cases if self.cases else 0.0

    def __str__(self):
        return f"{self.config} @ {self.budget}"

    class Meta:
        verbose_name = "Budget point"
        verbose_name_plural = "Budget points"


class AdaptabilityRecord(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="adaptability", verbose_name="Run")
    task = models.CharField(max_length=32, verbose_name="Task type")
    config = models.CharField(max_length=64, verbose_name="Search config")
    correct = models.PositiveIntegerField(verbose_name="Correct tool choices")
    random_correct = models.PositiveIntegerField(verbose_name="Random baseline correct")
    cases = models.PositiveIntegerField(verbose_name="Cases")

    def __str__(self):
        return f"{self.task} {self.config}: {self.correct}/{self.cases}"

    class Meta:
        verbose_name = "Adaptability result"
        verbose_name_plural = "Adaptability results"
