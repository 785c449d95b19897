"""
Management command to run a benchmark manifest
Usage:
    python manage.py bench manifests/quality.json
    python manage.py bench manifests/scaling_full.json --out results/full.csv --save
    python manage.py bench manifests/grid.json --parallel --workers 4

Writes one CSV row per (generator, mode, linkage, engine, repetition) plus
a JSON sidecar with the manifest and the machine it ran on. Failed rows keep
an `error` message and the run continues.
"""

from pathlib import Path

from django.conf import settings
from django.db import transaction
from django.core.management.base import BaseCommand
from django.utils import timezone

from backend.clustering.bench import BenchManifest, environment, iter_jobs, run_manifest, write_results
from backend.clustering.models import BenchmarkResult, BenchmarkRun

from ._shared import add_tree_arguments, data_errors, results_dir, tree_config, usage_error


class Command(BaseCommand):
    help = 'Run a benchmark manifest and write results CSV + JSON sidecar'

    def add_arguments(self, parser):
        parser.add_argument('manifest', help='Manifest JSON file')
        parser.add_argument('--out', help='Results CSV (default: <RESULTS_DIR>/<manifest name>.csv)')
        parser.add_argument('--label', help='Run label (default: manifest label or file name)')
        parser.add_argument(
            '--parallel',
            action='store_true',
            help='Run rows concurrently; timings are flagged as contended'
        )
        parser.add_argument('--workers', type=int, help='Worker processes for --parallel')
        parser.add_argument('--save', action='store_true', help='Also store the run in the database')
        add_tree_arguments(parser)

    def handle(self, *args, **options):
        if options['workers'] is not None and not options['parallel']:
            raise usage_error('--workers needs --parallel')
        if options['workers'] is not None and options['workers'] < 1:
            raise usage_error('--workers must be >= 1')
        base_tree = tree_config(options)

        manifest_path = Path(options['manifest'])
        with data_errors():
            manifest = BenchManifest.load(manifest_path, base_tree=base_tree)
        if manifest.cut_k is None:
            manifest.cut_k = settings.HAC_TOOLKIT['DEFAULT_CUT_K']
        label = options['label'] or manifest.label or manifest_path.stem
        out = Path(options['out']) if options['out'] else results_dir() / f'{manifest_path.stem}.csv'

        rows = sum(1 for _ in iter_jobs(manifest))
        self.stdout.write(f'Running {rows} benchmark rows from {manifest_path} ({label})')

        started_at = timezone.now()
        with data_errors():
            results = run_manifest(manifest, parallel=options['parallel'], workers=options['workers'])
            csv_path, sidecar = write_results(
                results, out, manifest, extra={'label': label, 'parallel': options['parallel']}
            )
        finished_at = timezone.now()

        failed = [r for r in results if r.failed]
        for result in failed:
            self.stdout.write(self.style.WARNING(
                f'{result.algorithm}/{result.input_mode}/{result.linkage} n={result.n} '
                f'rep={result.repetition}: {result.error}'
            ))
        self.stdout.write(self.style.SUCCESS(
            f'{len(results) - len(failed)}/{len(results)} rows succeeded; wrote {csv_path} and {sidecar}'
        ))

        if options['save']:
            run = self.save_run(label, manifest, options['parallel'], csv_path, started_at, finished_at, results)
            self.stdout.write(self.style.SUCCESS(f'Stored as benchmark run #{run.pk}'))

    @transaction.atomic
    def save_run(self, label, manifest, parallel, csv_path, started_at, finished_at, results):
        run = BenchmarkRun.objects.create(
            label=label,
            manifest=manifest.to_dict(),
            environment=environment(),
            parallel=parallel,
            results_path=str(csv_path),
            started_at=started_at,
            finished_at=finished_at,
        )
        BenchmarkResult.objects.bulk_create(
            [BenchmarkResult.from_bench_result(run, result) for result in results]
        )
        return run
