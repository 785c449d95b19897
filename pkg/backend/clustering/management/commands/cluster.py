"""
Management command to cluster a CSV data set
Usage:
    python manage.py cluster data.csv --out tree.csv --mode full --linkage ward
    python manage.py cluster data.csv --out tree.csv --mode cf-linkage --linkage upgmc --max-leaves 200
    python manage.py cluster data.csv --out tree.csv --mode cf-aggregation --criterion D4 --cut 50 --labels labels.csv

In CF modes the dendrogram (and --labels) is over the leaf entries of the
CF-tree; --point-labels maps every input point to its leaf's cluster.
"""

from django.conf import settings
from django.core.management.base import BaseCommand

from backend.clustering.cf_tree import write_leaves_csv
from backend.clustering.datagen_io import read_csv
from backend.clustering.evaluation import cut, rmsd, write_labels_csv
from backend.clustering.hac_engines import Engine, InputMode, resolve_method, run_pipeline, write_dendrogram
from backend.clustering.linkage import LinkageKind, LinkageSpec

from ._shared import add_tree_arguments, data_errors, tree_config, usage_error


class Command(BaseCommand):
    help = 'Run hierarchical clustering (optionally on BETULA cluster features) and write the dendrogram'

    def add_arguments(self, parser):
        parser.add_argument('input', help='Input CSV of points')
        parser.add_argument('--out', required=True, help='Dendrogram CSV path')
        parser.add_argument(
            '--mode',
            default='full',
            choices=[m.value for m in InputMode],
            help='full, cf-centers, cf-linkage or cf-aggregation'
        )
        parser.add_argument('--linkage', help='single, complete, upgma, wpgma, upgmc, wpgmc or ward')
        parser.add_argument(
            '--primary',
            choices=['euclidean', 'sqeuclidean'],
            help='Primary distance for UPGMA/WPGMA (default sqeuclidean)'
        )
        parser.add_argument('--criterion', help='cf-aggregation criterion: D0, D1, D2, D3, D4 or R')
        parser.add_argument(
            '--engine',
            default=settings.HAC_TOOLKIT['DEFAULT_ENGINE'],
            choices=[e.value for e in Engine],
        )
        parser.add_argument(
            '--linear-memory',
            action='store_true',
            help='Matrix-free single linkage (requires --mode full --linkage single --engine nnchain)'
        )
        parser.add_argument('--sqrt-heights', action='store_true', help='Write square-rooted heights')
        parser.add_argument('--cut', type=int, help='Cut into k clusters and report the RMSD')
        parser.add_argument('--labels', help='Labels CSV for --cut (one row per dendrogram item)')
        parser.add_argument('--point-labels', help='Labels CSV for --cut mapped back to the input points')
        parser.add_argument('--leaves-out', help='Write the CF-tree leaf entries to this CSV')
        add_tree_arguments(parser)

    def check_flags(self, options):
        mode = InputMode(options['mode'])
        if mode is InputMode.CF_AGGREGATION and options['linkage']:
            raise usage_error('--mode cf-aggregation takes --criterion, not --linkage')
        if mode is not InputMode.CF_AGGREGATION and options['criterion']:
            raise usage_error(f'--mode {mode.value} takes --linkage, not --criterion')
        if mode is InputMode.CF_AGGREGATION and not options['criterion']:
            raise usage_error('--mode cf-aggregation requires --criterion')
        if mode is not InputMode.CF_AGGREGATION and not options['linkage']:
            raise usage_error(f'--mode {mode.value} requires --linkage')
        if (options['labels'] or options['point_labels']) and options['cut'] is None:
            raise usage_error('--labels and --point-labels need --cut')
        if not mode.uses_tree and (options['point_labels'] or options['leaves_out']):
            raise usage_error('--point-labels and --leaves-out only apply to CF modes')
        if options['linear_memory'] and (
            mode is not InputMode.FULL or options['engine'] != Engine.NNCHAIN.value
            or (options['linkage'] or '').lower() != LinkageKind.SINGLE.value
        ):
            raise usage_error('--linear-memory requires --mode full --linkage single --engine nnchain')
        if options['primary'] and mode is InputMode.CF_AGGREGATION:
            raise usage_error('--primary does not apply to cf-aggregation')

        try:
            linkage = None
            if options['linkage']:
                linkage = LinkageSpec.of(options['linkage'], options['primary'])
            return mode, resolve_method(mode, linkage, options['criterion'])
        except ValueError as exc:
            raise usage_error(str(exc)) from exc

    def handle(self, *args, **options):
        mode, (spec, criterion) = self.check_flags(options)
        config = tree_config(options)

        with data_errors():
            data = read_csv(options['input'])
            self.stdout.write(f'Read {len(data)} points in {data.dim} dimensions from {options["input"]}')

            result = run_pipeline(
                data,
                mode=mode,
                linkage=spec,
                criterion=criterion,
                engine=options['engine'],
                tree_config=config,
                linear_memory=options['linear_memory'],
            )
            dendrogram = result.dendrogram

            if result.tree is not None:
                stats = result.tree.stats()
                self.stdout.write(
                    f'CF-tree: {stats.leaf_entries} leaf entries, height {stats.height}, '
                    f'{stats.rebuilds} rebuilds, threshold {stats.threshold:.6g} '
                    f'({result.tree_seconds:.3f}s)'
                )
                if options['leaves_out']:
                    write_leaves_csv(result.leaves, options['leaves_out'])
                    self.stdout.write(f'Leaf entries written to {options["leaves_out"]}')

            path = write_dendrogram(dendrogram, options['out'], sqrt_heights=options['sqrt_heights'])
            self.stdout.write(self.style.SUCCESS(
                f'{len(dendrogram)} merges ({result.engine.value}, {dendrogram.linkage}) '
                f'in {result.cluster_seconds:.3f}s written to {path}'
            ))
            inversions = dendrogram.inversions()
            if inversions:
                self.stdout.write(self.style.WARNING(
                    f'Dendrogram is not monotone: {len(inversions)} inversions (first at merge {inversions[0]})'
                ))

            if options['cut'] is not None:
                self.write_cut(options, result, data)

    def write_cut(self, options, result, data):
        flat = cut(result.dendrogram, options['cut'])
        items = result.leaves if result.leaves is not None else data
        score = rmsd(items, flat)
        self.stdout.write(self.style.SUCCESS(f'RMSD at k={flat.k}: {score:.6g}'))

        if options['labels']:
            write_labels_csv(flat, options['labels'])
            self.stdout.write(f'Labels written to {options["labels"]}')
        if options['point_labels']:
            points = flat.expand(result.tree.assign_points(data))
            write_labels_csv(points, options['point_labels'])
            self.stdout.write(
                f'Point labels written to {options["point_labels"]} '
                f'(point-level RMSD {rmsd(data, points):.6g})'
            )
