"""
Management command to cut a dendrogram into flat clusters
Usage:
    python manage.py cut tree.csv --k 50 --out labels.csv
    python manage.py cut tree.csv --height 12.5 --out labels.csv
"""

from django.core.management.base import BaseCommand

from backend.clustering.evaluation import cut, cut_at_height, write_labels_csv
from backend.clustering.hac_engines import read_dendrogram

from ._shared import data_errors, usage_error


class Command(BaseCommand):
    help = 'Cut a dendrogram CSV into k clusters (or at a height) and write item_id,label'

    def add_arguments(self, parser):
        parser.add_argument('dendrogram', help='Dendrogram CSV written by the cluster command')
        parser.add_argument('--out', required=True, help='Labels CSV path')
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument('--k', type=int, help='Number of clusters')
        group.add_argument('--height', type=float, help='Apply every merge at or below this height')

    def handle(self, *args, **options):
        with data_errors():
            dendrogram = read_dendrogram(options['dendrogram'])
            if options['k'] is not None:
                if not 1 <= options['k'] <= dendrogram.n0:
                    raise usage_error(f'--k must be between 1 and {dendrogram.n0}')
                flat = cut(dendrogram, options['k'])
            else:
                flat = cut_at_height(dendrogram, options['height'])
            write_labels_csv(flat, options['out'])

        self.stdout.write(self.style.SUCCESS(
            f'{dendrogram.n0} items in {flat.k} clusters written to {options["out"]}'
        ))
