import tempfile
from collections import Counter
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from backend.clustering.cf_distances import CFDistanceKind
from backend.clustering.cf_tree import TreeConfig
from backend.clustering.core_model import Dataset, cf_from_point
from backend.clustering.datagen_io import GeneratorSpec, generate, make_rng
from backend.clustering.evaluation import cut
from backend.clustering.exceptions import DatasetParseError, InvalidInputError
from backend.clustering.hac_engines import (
    Dendrogram,
    Engine,
    InputMode,
    Merge,
    criterion_for,
    hac,
    hac_anderberg,
    hac_cf_aggregation,
    hac_naive,
    hac_nnchain,
    hac_nnchain_single_linear,
    pipeline,
    read_dendrogram,
    run_pipeline,
)
from backend.clustering.linkage import CondensedDistanceMatrix, LinkageKind, LinkageSpec, init_matrix_points

ALL_LINKAGES = [kind.value for kind in LinkageKind]
REDUCIBLE_LINKAGES = ['single', 'complete', 'upgma', 'wpgma', 'ward']


def points_1d(*xs):
    return Dataset.from_rows([[float(x)] for x in xs])


def run(engine, data, linkage):
    spec = LinkageSpec.of(linkage)
    return hac(init_matrix_points(data, spec), np.ones(len(data)), spec, engine)


def random_data(seed, n=40, dim=2):
    return Dataset(make_rng(seed).normal(size=(n, dim)))


def partition(dendrogram, k):
    """Flat clustering as a set of frozensets, independent of label numbering."""
    labels = cut(dendrogram, k).labels
    groups = {}
    for item, label in enumerate(labels.tolist()):
        groups.setdefault(label, set()).add(item)
    return {frozenset(group) for group in groups.values()}


class EnumTests(SimpleTestCase):
    def test_parse(self):
        self.assertIs(Engine.parse('NN-chain'), Engine.NNCHAIN)
        self.assertIs(InputMode.parse('full-data'), InputMode.FULL)
        self.assertIs(InputMode.parse('cf_linkage'), InputMode.CF_LINKAGE)
        self.assertFalse(InputMode.FULL.uses_tree)
        with self.assertRaises(InvalidInputError):
            Engine.parse('slink')
        with self.assertRaises(InvalidInputError):
            InputMode.parse('sample')

    def test_criterion_for(self):
        self.assertIs(criterion_for('ward'), CFDistanceKind.D4)
        self.assertIs(criterion_for('average'), CFDistanceKind.D2)
        self.assertIs(criterion_for('centroid'), CFDistanceKind.D0)
        with self.assertRaises(InvalidInputError):
            criterion_for('single')


class SmallExampleTests(SimpleTestCase):
    def test_single_linkage(self):
        for engine in Engine:
            dendrogram = run(engine, points_1d(0, 1, 10), 'single')
            self.assertEqual(dendrogram.merges, [Merge(0, 1, 1.0, 2.0), Merge(3, 2, 9.0, 3.0)])
            self.assertFalse(dendrogram.squared)

    def test_ward_heights_are_squared(self):
        for engine in Engine:
            dendrogram = run(engine, points_1d(0, 2, 10), 'ward')
            self.assertEqual(dendrogram.pairs(), [(0, 1), (3, 2)])
            assert_allclose(dendrogram.heights(), [4.0, 108.0])
            self.assertTrue(dendrogram.squared)

    def test_centroid_example(self):
        data = Dataset.from_rows([[0.0, 1.0], [0.0, -1.0], [4.0, 0.0]])
        dendrogram = run(Engine.NAIVE, data, 'upgmc')
        assert_allclose(dendrogram.heights(), [4.0, 16.0])
        self.assertEqual(dendrogram.inversions(), [])

    def test_centroid_inversion(self):
        data = Dataset.from_rows([[0.0, 0.0], [2.0, 0.0], [1.0, 1.8]])
        dendrogram = run(Engine.NAIVE, data, 'upgmc')
        assert_allclose(dendrogram.heights(), [4.0, 3.24])
        self.assertEqual(dendrogram.inversions(), [1])

    def test_ties_go_to_smallest_id_pair(self):
        for engine in (Engine.NAIVE, Engine.ANDERBERG):
            dendrogram = run(engine, points_1d(0, 1, 2, 3), 'single')
            self.assertEqual(dendrogram.pairs(), [(0, 1), (2, 3), (4, 5)])

    def test_two_points(self):
        for engine in Engine:
            dendrogram = run(engine, points_1d(5, 5), 'complete')
            self.assertEqual(dendrogram.merges, [Merge(0, 1, 0.0, 2.0)])

    def test_sizes_accumulate(self):
        dendrogram = run(Engine.ANDERBERG, random_data(1, n=12), 'upgma')
        self.assertEqual(dendrogram.merges[-1].size, 12.0)
        dendrogram.validate()


class EngineAgreementTests(SimpleTestCase):
    def test_anderberg_matches_naive_exactly(self):
        for seed in range(10):
            data = random_data(seed, n=30)
            for linkage in ALL_LINKAGES:
                naive = run(Engine.NAIVE, data, linkage)
                anderberg = run(Engine.ANDERBERG, data, linkage)
                self.assertEqual(naive.merges, anderberg.merges, f'{linkage} seed {seed}')

    def test_anderberg_matches_naive_with_ties(self):
        grid = Dataset.from_rows([[float(x), float(y)] for x in range(4) for y in range(4)])
        for linkage in ALL_LINKAGES:
            self.assertEqual(run(Engine.NAIVE, grid, linkage).merges, run(Engine.ANDERBERG, grid, linkage).merges)

    def test_nnchain_same_heights_and_cuts_for_reducible(self):
        for seed in range(10):
            data = random_data(seed, n=30)
            for linkage in REDUCIBLE_LINKAGES:
                naive = run(Engine.NAIVE, data, linkage)
                chain = run(Engine.NNCHAIN, data, linkage)
                assert_allclose(np.sort(chain.heights()), np.sort(naive.heights()), rtol=1e-12)
                for k in (1, 2, 5, 10, 30):
                    self.assertEqual(partition(chain, k), partition(naive, k), f'{linkage} k={k}')

    def test_nnchain_warns_on_non_reducible_linkage(self):
        with self.assertLogs('backend.clustering.hac_engines', level='WARNING'):
            dendrogram = run(Engine.NNCHAIN, random_data(3, n=10), 'upgmc')
        dendrogram.validate()

    def test_evaluation_count_is_quadratic(self):
        m = 25
        data = random_data(4, n=m)
        for engine in Engine:
            self.assertEqual(run(engine, data, 'complete').evaluations, (m - 1) * (m - 2) // 2)

    def test_input_matrix_preserved_by_default(self):
        spec = LinkageSpec.of('single')
        matrix = init_matrix_points(random_data(5, n=8), spec)
        before = matrix.values.copy()
        hac_naive(matrix, np.ones(8), spec)
        hac_anderberg(matrix, np.ones(8), spec)
        self.assertEqual(matrix.values.tolist(), before.tolist())

    def test_consumed_matrix_rejected(self):
        spec = LinkageSpec.of('single')
        matrix = init_matrix_points(random_data(5, n=8), spec)
        hac_nnchain(matrix, np.ones(8), spec, preserve_input=False)
        with self.assertRaises(InvalidInputError):
            hac_naive(matrix, np.ones(8), spec)

    def test_dispatch_forwards_preserve_input(self):
        spec = LinkageSpec.of('ward')
        for engine in Engine:
            matrix = init_matrix_points(random_data(6, n=8), spec)
            hac(matrix, np.ones(8), spec, engine)
            self.assertTrue(matrix.active.all())
            hac(matrix, np.ones(8), spec, engine, preserve_input=False)
            self.assertFalse(matrix.active.all())

    def test_bad_sizes(self):
        spec = LinkageSpec.of('ward')
        matrix = init_matrix_points(random_data(5, n=4), spec)
        with self.assertRaises(InvalidInputError):
            hac_naive(matrix, np.ones(3), spec)
        with self.assertRaises(InvalidInputError):
            hac_naive(matrix, np.array([1.0, 0.0, 1.0, 1.0]), spec)


class DendrogramPropertyTests(SimpleTestCase):
    def test_reducible_linkages_are_monotone(self):
        for seed in range(10):
            data = random_data(seed, n=40, dim=3)
            for linkage in REDUCIBLE_LINKAGES:
                heights = run(Engine.NAIVE, data, linkage).heights()
                tolerance = 1e-12 * max(1.0, float(heights.max()))
                self.assertTrue(np.all(heights[1:] >= heights[:-1] - tolerance), linkage)

    def test_centroid_inversions_exist_on_random_data(self):
        found = any(run(Engine.NAIVE, random_data(seed, n=40), 'upgmc').inversions() for seed in range(20))
        self.assertTrue(found)

    def test_scale_equivariance(self):
        data = random_data(6, n=25)
        scaled = Dataset(data.points * 2.0)
        for linkage in ALL_LINKAGES:
            base = run(Engine.NAIVE, data, linkage)
            bigger = run(Engine.NAIVE, scaled, linkage)
            factor = 4.0 if base.squared else 2.0
            self.assertEqual(base.pairs(), bigger.pairs())
            assert_allclose(bigger.heights(), factor * base.heights(), rtol=1e-12)

    def test_as_sqrt(self):
        dendrogram = run(Engine.NAIVE, points_1d(0, 2, 10), 'ward').as_sqrt()
        assert_allclose(dendrogram.heights(), [2.0, np.sqrt(108.0)])
        self.assertFalse(dendrogram.squared)

    def test_validate_rejects_reused_child(self):
        dendrogram = Dendrogram([Merge(0, 1, 1.0, 2.0), Merge(0, 2, 2.0, 2.0)], 3)
        with self.assertRaises(InvalidInputError):
            dendrogram.validate()


class ClusterFeatureAggregationTests(SimpleTestCase):
    def setUp(self):
        self.data = random_data(7, n=25)
        self.features = [cf_from_point(p) for p in self.data.points]

    def test_variance_increase_on_three_points(self):
        features = [cf_from_point([x]) for x in (0.0, 2.0, 10.0)]
        dendrogram = hac_cf_aggregation(features, 'D4', Engine.NAIVE)
        self.assertEqual(dendrogram.pairs(), [(0, 1), (3, 2)])
        assert_allclose(dendrogram.heights(), [2.0, 54.0])

    def test_matches_linkage_counterparts(self):
        # D4 is half of Ward, D2 is UPGMA on squared distances, D0 is UPGMC.
        cases = [('ward', 'D4', 0.5), ('upgma', 'D2', 1.0), ('upgmc', 'D0', 1.0)]
        for linkage, criterion, factor in cases:
            expected = run(Engine.NAIVE, self.data, linkage)
            actual = hac_cf_aggregation(self.features, criterion, Engine.NAIVE)
            self.assertEqual(actual.pairs(), expected.pairs(), linkage)
            assert_allclose(actual.heights(), factor * expected.heights(), rtol=1e-9)

    def test_engines_agree(self):
        for criterion in CFDistanceKind:
            if criterion is CFDistanceKind.D3:
                continue
            naive = hac_cf_aggregation(self.features, criterion, Engine.NAIVE)
            anderberg = hac_cf_aggregation(self.features, criterion, Engine.ANDERBERG)
            self.assertEqual(naive.merges, anderberg.merges, criterion.value)

    def test_nnchain_reducible_criteria(self):
        for criterion in ('D2', 'D4'):
            naive = hac_cf_aggregation(self.features, criterion, Engine.NAIVE)
            chain = hac_cf_aggregation(self.features, criterion, Engine.NNCHAIN)
            assert_allclose(np.sort(chain.heights()), np.sort(naive.heights()), rtol=1e-9)
            for k in (2, 5, 12):
                self.assertEqual(partition(chain, k), partition(naive, k))

    def test_d1_heights_are_plain(self):
        features = [cf_from_point(p) for p in ([0.0, 0.0], [1.0, 1.0], [5.0, 5.0])]
        dendrogram = hac_cf_aggregation(features, 'D1', Engine.NAIVE)
        self.assertFalse(dendrogram.squared)
        self.assertEqual(dendrogram.heights()[0], 2.0)


class LinearSingleLinkageTests(SimpleTestCase):
    def test_matches_matrix_single_linkage(self):
        for seed in range(5):
            data = random_data(seed, n=35)
            expected = run(Engine.NAIVE, data, 'single')
            actual = hac_nnchain_single_linear(data)
            assert_allclose(actual.heights(), expected.heights(), rtol=1e-12)
            for k in (2, 7, 20):
                self.assertEqual(partition(actual, k), partition(expected, k))

    def test_needs_two_points(self):
        with self.assertRaises(InvalidInputError):
            hac_nnchain_single_linear(points_1d(1))


class PipelineTests(SimpleTestCase):
    def setUp(self):
        self.data = generate(GeneratorSpec('gaussian-mixture', n=300, dim=2, k_clusters=4, seed=11))

    def test_without_aggregation_cf_modes_equal_full(self):
        data = random_data(8, n=30)
        config = TreeConfig(max_leaf_entries=None)
        for linkage in ALL_LINKAGES:
            full = pipeline(data, 'full', linkage=linkage, engine='naive')
            for mode in ('cf-centers', 'cf-linkage'):
                via_tree = pipeline(data, mode, linkage=linkage, engine='naive', tree_config=config)
                self.assertEqual(via_tree.merges, full.merges, f'{mode} {linkage}')

    def test_pipeline_does_not_copy_its_matrix(self):
        with mock.patch.object(CondensedDistanceMatrix, 'copy', side_effect=AssertionError('matrix copied')):
            for mode in ('full', 'cf-centers', 'cf-linkage'):
                dendrogram = pipeline(self.data, mode, linkage='ward', engine='anderberg',
                                      tree_config=TreeConfig(max_leaf_entries=40))
                dendrogram.validate()

    def test_modes_report_leaves(self):
        config = TreeConfig(max_leaf_entries=40)
        for mode, kwargs in [
            ('cf-centers', {'linkage': 'ward'}),
            ('cf-linkage', {'linkage': 'ward'}),
            ('cf-aggregation', {'criterion': 'D4'}),
        ]:
            result = run_pipeline(self.data, mode, engine='nnchain', tree_config=config, **kwargs)
            self.assertLessEqual(result.leaf_count, 40)
            self.assertEqual(result.dendrogram.n0, result.leaf_count)
            self.assertIsNotNone(result.tree_seconds)

    def test_full_mode_has_no_tree(self):
        result = run_pipeline(self.data, 'full', linkage='single', engine='nnchain', linear_memory=True)
        self.assertIsNone(result.leaf_count)
        self.assertIsNone(result.tree_seconds)
        self.assertEqual(result.dendrogram.n0, 300)

    def test_flag_errors(self):
        with self.assertRaises(InvalidInputError):
            pipeline(self.data, 'cf-aggregation', linkage='ward')
        with self.assertRaises(InvalidInputError):
            pipeline(self.data, 'full', criterion='D4')
        with self.assertRaises(InvalidInputError):
            pipeline(self.data, 'full')
        with self.assertRaises(InvalidInputError):
            pipeline(self.data, 'full', linkage='ward', engine='nnchain', linear_memory=True)

    def test_single_leaf_is_an_error(self):
        config = TreeConfig(max_leaf_entries=None, initial_threshold=1e9)
        with self.assertRaises(InvalidInputError):
            pipeline(self.data, 'cf-linkage', linkage='ward', tree_config=config)

    def test_aggregation_keeps_cluster_structure(self):
        config = TreeConfig(max_leaf_entries=30)
        dendrogram = pipeline(self.data, 'cf-linkage', linkage='ward', engine='anderberg', tree_config=config)
        self.assertEqual(dendrogram.merges[-1].size, 300.0)


class DendrogramFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        from backend.clustering.hac_engines import write_dendrogram

        dendrogram = run(Engine.ANDERBERG, random_data(9, n=20), 'ward')
        path = write_dendrogram(dendrogram, self.dir / 'tree.csv')
        self.assertTrue(path.read_text().startswith('# n0=20 linkage=ward squared=true'))
        restored = read_dendrogram(path)
        self.assertEqual(restored, dendrogram)

        rooted = read_dendrogram(write_dendrogram(dendrogram, self.dir / 'sqrt.csv', sqrt_heights=True))
        self.assertFalse(rooted.squared)
        assert_allclose(rooted.heights(), np.sqrt(dendrogram.heights()))

    def test_missing_header(self):
        path = self.dir / 'tree.csv'
        path.write_text('0,1,1.0,2.0\n')
        with self.assertRaises(DatasetParseError):
            read_dendrogram(path)

    def test_bad_row(self):
        path = self.dir / 'tree.csv'
        path.write_text('# n0=3 linkage=single squared=false\n0,1,1.0,2.0\n3,x,2.0,3.0\n')
        with self.assertRaises(DatasetParseError) as ctx:
            read_dendrogram(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_inconsistent_merges(self):
        path = self.dir / 'tree.csv'
        path.write_text('# n0=3 linkage=single squared=false\n0,1,1.0,2.0\n')
        with self.assertRaises(InvalidInputError):
            read_dendrogram(path)

    def test_sizes_multiset(self):
        dendrogram = run(Engine.NNCHAIN, points_1d(0, 1, 10, 11), 'complete')
        self.assertEqual(Counter(m.size for m in dendrogram.merges), Counter({2.0: 2, 4.0: 1}))
