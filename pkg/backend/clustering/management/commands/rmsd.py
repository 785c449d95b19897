"""
Management command to score a flat clustering
Usage:
    python manage.py rmsd data.csv labels.csv
    python manage.py rmsd leaves.csv labels.csv --leaves

With --leaves the input is a leaf dump (`cluster --leaves-out`); the
within-leaf sse is included so the score is comparable to one on raw points.
"""

from django.core.management.base import BaseCommand

from backend.clustering.cf_tree import read_leaves_csv
from backend.clustering.datagen_io import read_csv
from backend.clustering.evaluation import read_labels_csv, rmsd

from ._shared import data_errors


class Command(BaseCommand):
    help = 'Root mean squared deviation of a labelled data set or leaf dump'

    def add_arguments(self, parser):
        parser.add_argument('input', help='Points CSV, or leaf CSV with --leaves')
        parser.add_argument('labels', help='Labels CSV (item_id,label)')
        parser.add_argument('--leaves', action='store_true', help='Input is a CF leaf dump')

    def handle(self, *args, **options):
        with data_errors():
            items = read_leaves_csv(options['input']) if options['leaves'] else read_csv(options['input'])
            labels = read_labels_csv(options['labels'])
            score = rmsd(items, labels)

        k = len(set(labels.tolist()))
        self.stdout.write(self.style.SUCCESS(f'RMSD over {len(items)} items in {k} clusters: {score:.10g}'))
