"""
Django models for stored benchmark runs.

COMPARISON WITH THE CSV WORKFLOW:
=================================

`manage.py bench` always writes a results CSV plus a JSON sidecar:
```
results/scaling.csv    one row per BenchResult
results/scaling.json   manifest + environment
```

With `--save` the same rows also land in the database, so they can be
filtered in the admin or through `/api/results/` instead of loading every
CSV into pandas:
```python
df = pd.read_csv('results/scaling.csv')
df[(df.input_mode == 'cf-linkage') & (df.n >= 16000)]
```
is `/api/results/?input_mode=cf-linkage&min_n=16000`.
"""

from django.db import models


class BenchmarkRun(models.Model):
    """One execution of a benchmark manifest."""

    label = models.CharField(max_length=200, blank=True, db_index=True)
    manifest = models.JSONField(default=dict)
    environment = models.JSONField(default=dict)
    parallel = models.BooleanField(default=False)
    results_path = models.CharField(max_length=500, blank=True)

    started_at = models.DateTimeField(db_index=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        db_table = 'benchmark_runs'
        ordering = ['-started_at']
        verbose_name = 'Benchmark Run'
        verbose_name_plural = 'Benchmark Runs'

    def __str__(self):
        return f'{self.label or "run"} #{self.pk} ({self.started_at:%Y-%m-%d %H:%M})'

    @property
    def duration_seconds(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()


class BenchmarkResult(models.Model):
    """One grid cell of a run. Mirrors `bench.BenchResult` column for column."""

    INPUT_MODES = [
        ('full', 'Full data'),
        ('cf-centers', 'CF centers'),
        ('cf-linkage', 'CF linkage'),
        ('cf-aggregation', 'CF aggregation'),
    ]
    ALGORITHMS = [
        ('naive', 'Naive'),
        ('anderberg', 'Anderberg'),
        ('nnchain', 'NN-chain'),
    ]

    run = models.ForeignKey(
        BenchmarkRun,
        on_delete=models.CASCADE,
        related_name='results'
    )

    algorithm = models.CharField(max_length=20, choices=ALGORITHMS, db_index=True)
    input_mode = models.CharField(max_length=20, choices=INPUT_MODES, db_index=True)
    # linkage name, or the criterion for cf-aggregation rows
    linkage = models.CharField(max_length=20, db_index=True)
    generator = models.CharField(max_length=30, blank=True)

    n = models.PositiveIntegerField(db_index=True)
    dim = models.PositiveIntegerField()
    seed = models.PositiveBigIntegerField()
    repetition = models.PositiveIntegerField(default=0)

    leaf_count = models.PositiveIntegerField(null=True, blank=True)
    tree_seconds = models.FloatField(null=True, blank=True)
    wall_time_seconds = models.FloatField(null=True, blank=True)
    cut_k = models.PositiveIntegerField(null=True, blank=True)
    rmsd_at_k = models.FloatField(null=True, blank=True)

    contended = models.BooleanField(default=False)
    error = models.TextField(blank=True)

    class Meta:
        db_table = 'benchmark_results'
        ordering = ['run', 'id']
        indexes = [
            models.Index(fields=['algorithm', 'input_mode', 'linkage'], name='bench_result_method_idx'),
            models.Index(fields=['run', 'n'], name='bench_result_run_n_idx'),
        ]
        verbose_name = 'Benchmark Result'
        verbose_name_plural = 'Benchmark Results'

    def __str__(self):
        return f'{self.algorithm}/{self.input_mode}/{self.linkage} n={self.n} rep={self.repetition}'

    @property
    def failed(self):
        return bool(self.error)

    @classmethod
    def from_bench_result(cls, run, result):
        """Unsaved model instance for a `bench.BenchResult`."""
        return cls(
            run=run,
            algorithm=result.algorithm,
            input_mode=result.input_mode,
            linkage=result.linkage,
            generator=result.generator,
            n=result.n,
            dim=result.dim,
            seed=result.seed,
            repetition=result.repetition,
            leaf_count=result.leaf_count,
            tree_seconds=result.tree_seconds,
            wall_time_seconds=result.wall_time_seconds,
            cut_k=result.cut_k,
            rmsd_at_k=result.rmsd_at_k,
            contended=result.contended,
            error=result.error,
        )

    def to_bench_result(self):
        from .bench import BenchResult

        return BenchResult(
            algorithm=self.algorithm,
            input_mode=self.input_mode,
            linkage=self.linkage,
            n=self.n,
            dim=self.dim,
            seed=self.seed,
            repetition=self.repetition,
            leaf_count=self.leaf_count,
            tree_seconds=self.tree_seconds,
            wall_time_seconds=self.wall_time_seconds,
            cut_k=self.cut_k,
            rmsd_at_k=self.rmsd_at_k,
            generator=self.generator,
            contended=self.contended,
            error=self.error,
        )
