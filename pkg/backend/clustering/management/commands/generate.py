"""
Management command to generate a synthetic data set
Usage:
    python manage.py generate out.csv --kind uniform --n 50000 --dim 5 --seed 1
    python manage.py generate out.csv --kind gaussian-mixture --n 20000 --k-clusters 50
    python manage.py generate out.csv --spec generator.json
"""

from django.core.management.base import BaseCommand

from backend.clustering.datagen_io import (
    DEFAULT_CLUSTER_SIGMA,
    DEFAULT_DOMAIN_SCALE,
    GeneratorSpec,
    generate,
    write_csv,
)

from ._shared import data_errors, usage_error


class Command(BaseCommand):
    help = 'Generate a seeded synthetic data set (uniform hypercube or Gaussian mixture) as CSV'

    def add_arguments(self, parser):
        parser.add_argument('out', help='Output CSV path')
        parser.add_argument('--spec', help='Generator spec as a JSON file (replaces the flags below)')
        parser.add_argument('--kind', default='uniform', help='uniform or gaussian-mixture')
        parser.add_argument('--n', type=int, default=1000, help='Number of points')
        parser.add_argument('--dim', type=int, default=5, help='Dimensions')
        parser.add_argument('--k-clusters', type=int, default=1, help='Mixture components')
        parser.add_argument('--seed', type=int, default=0, help='PRNG seed')
        parser.add_argument('--domain-scale', type=float, default=DEFAULT_DOMAIN_SCALE,
                            help='Side length of the hypercube')
        parser.add_argument('--sigma', type=float, default=DEFAULT_CLUSTER_SIGMA,
                            help='Standard deviation of each mixture component')
        parser.add_argument('--no-header', action='store_true', help='Omit the x1..xd header row')

    def handle(self, *args, **options):
        with data_errors():
            if options['spec']:
                with open(options['spec']) as handle:
                    text = handle.read()
                try:
                    spec = GeneratorSpec.from_json(text)
                except ValueError as exc:
                    raise usage_error(f'invalid generator spec: {exc}') from exc
            else:
                try:
                    spec = GeneratorSpec(
                        kind=options['kind'],
                        n=options['n'],
                        dim=options['dim'],
                        k_clusters=options['k_clusters'],
                        seed=options['seed'],
                        domain_scale=options['domain_scale'],
                        cluster_sigma=options['sigma'],
                    )
                except ValueError as exc:
                    raise usage_error(str(exc)) from exc

            data = generate(spec)
            path = write_csv(data, options['out'], header=not options['no_header'])

        self.stdout.write(self.style.SUCCESS(
            f'Wrote {len(data)} x {data.dim} points ({spec.kind.value}, seed {spec.seed}) to {path}'
        ))
