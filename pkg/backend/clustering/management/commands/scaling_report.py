"""
Management command to fit runtime scaling slopes
Usage:
    python manage.py scaling_report results/scaling.csv
    python manage.py scaling_report results/scaling.csv --out results/scaling_plot.csv --metric cluster

Groups successful rows by (algorithm, input_mode, linkage, generator, dim),
averages the runtime per data set size and fits log(time) = slope * log(n) + c. A slope
near 2 is quadratic, near 1 linear.
"""

from django.core.management.base import BaseCommand

from backend.clustering.bench import read_results, scaling_report, write_scaling_csv

from ._shared import data_errors


class Command(BaseCommand):
    help = 'Per-series log-log runtime slopes from a bench results CSV'

    def add_arguments(self, parser):
        parser.add_argument('results', help='Results CSV written by the bench command')
        parser.add_argument('--out', help='Plot-ready CSV (n, mean, stddev, slope per series)')
        parser.add_argument(
            '--metric',
            default='total',
            choices=['total', 'cluster'],
            help='total = tree + clustering time, cluster = clustering only'
        )
        parser.add_argument(
            '--skip-short',
            action='store_true',
            help='Report series with fewer than 3 sizes without a slope instead of failing'
        )

    def handle(self, *args, **options):
        with data_errors():
            results = read_results(options['results'])
            report = scaling_report(results, metric=options['metric'], skip_short=options['skip_short'])
            if options['out']:
                write_scaling_csv(report, options['out'])

        for series in report:
            slope = 'n/a' if series.slope is None else f'{series.slope:.3f}'
            sizes = ', '.join(str(p.n) for p in series.points)
            self.stdout.write(f'{series.algorithm:10} {series.input_mode:15} {series.linkage:9} '
                              f'{series.generator or "-":16} d={series.dim:<3} '
                              f'slope {slope}  (n = {sizes})')
        if options['out']:
            self.stdout.write(self.style.SUCCESS(f'Plot data written to {options["out"]}'))
