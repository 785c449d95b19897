import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from backend.clustering.core_model import Dataset, cf_from_point, cf_from_points
from backend.clustering.datagen_io import make_rng
from backend.clustering.exceptions import InvalidInputError
from backend.clustering.linkage import (
    CondensedDistanceMatrix,
    InitMode,
    LinkageKind,
    LinkageSpec,
    PrimaryDistance,
    init_matrix_cfs,
    init_matrix_points,
    lw_update,
)


def sq_dist(a, b):
    return float(np.sum((np.asarray(a) - np.asarray(b)) ** 2))


class LinkageSpecTests(SimpleTestCase):
    def test_aliases(self):
        self.assertIs(LinkageKind.parse('average'), LinkageKind.UPGMA)
        self.assertIs(LinkageKind.parse('Median'), LinkageKind.WPGMC)
        self.assertIs(LinkageKind.parse('centroid'), LinkageKind.UPGMC)
        with self.assertRaises(InvalidInputError):
            LinkageKind.parse('furthest')

    def test_representation(self):
        self.assertIs(LinkageSpec.of('ward').init_mode, InitMode.SQUARED)
        self.assertTrue(LinkageSpec.of('upgmc').heights_squared)
        self.assertFalse(LinkageSpec.of('single').heights_squared)
        self.assertIs(LinkageSpec.of('upgma').primary, PrimaryDistance.SQEUCLIDEAN)
        self.assertFalse(LinkageSpec.of('upgma', primary='euclidean').heights_squared)
        with self.assertRaises(InvalidInputError):
            LinkageSpec.of('single', primary='cosine')

    def test_reducibility(self):
        self.assertTrue(LinkageSpec.of('ward').reducible)
        self.assertFalse(LinkageSpec.of('upgmc').reducible)
        self.assertFalse(LinkageSpec.of('wpgmc').reducible)
        self.assertTrue(LinkageSpec.of('wpgma').weighted)


class LanceWilliamsTests(SimpleTestCase):
    def test_single_and_complete(self):
        self.assertEqual(lw_update(LinkageSpec.of('single'), 3.0, 5.0, 1.0, 1, 1, 1), 3.0)
        self.assertEqual(lw_update(LinkageSpec.of('complete'), 3.0, 5.0, 1.0, 1, 1, 1), 5.0)

    def test_upgma_is_size_weighted_mean(self):
        self.assertEqual(lw_update(LinkageSpec.of('upgma'), 2.0, 8.0, 1.0, 3, 1, 2), 3.5)
        self.assertEqual(lw_update(LinkageSpec.of('wpgma'), 2.0, 8.0, 1.0, 3, 1, 2), 5.0)

    def test_upgmc_matches_centroid_distance(self):
        rng = make_rng(7)
        spec = LinkageSpec.of('upgmc')
        for _ in range(20):
            a = rng.normal(size=(int(rng.integers(1, 6)), 3))
            b = rng.normal(size=(int(rng.integers(1, 6)), 3))
            c = rng.normal(size=(int(rng.integers(1, 6)), 3))
            ma, mb, mc = a.mean(0), b.mean(0), c.mean(0)
            merged = np.vstack([a, b]).mean(0)
            value = lw_update(spec, sq_dist(ma, mc), sq_dist(mb, mc), sq_dist(ma, mb), len(a), len(b), len(c))
            self.assertAlmostEqual(value, sq_dist(merged, mc), places=10)

    def test_ward_matches_twice_sse_increase(self):
        rng = make_rng(8)
        spec = LinkageSpec.of('ward')

        def ward(p, q):
            return 2 * len(p) * len(q) / (len(p) + len(q)) * sq_dist(p.mean(0), q.mean(0))

        for _ in range(20):
            a, b, c = (rng.normal(size=(int(rng.integers(1, 6)), 2)) for _ in range(3))
            value = lw_update(spec, ward(a, c), ward(b, c), ward(a, b), len(a), len(b), len(c))
            self.assertAlmostEqual(value, ward(np.vstack([a, b]), c), places=10)

    def test_upgma_matches_mean_pairwise_distance(self):
        rng = make_rng(9)
        metrics = {
            'sqeuclidean': sq_dist,
            'euclidean': lambda p, q: float(np.sqrt(sq_dist(p, q))),
        }
        for primary, dist in metrics.items():
            spec = LinkageSpec.of('upgma', primary=primary)

            def average(p, q):
                return float(np.mean([dist(x, y) for x in p for y in q]))

            for _ in range(20):
                a, b, c = (rng.normal(size=(int(rng.integers(1, 6)), 3)) for _ in range(3))
                value = lw_update(spec, average(a, c), average(b, c), average(a, b), len(a), len(b), len(c))
                self.assertAlmostEqual(value, average(np.vstack([a, b]), c), places=10, msg=primary)

    def test_vectorised_over_third_cluster(self):
        spec = LinkageSpec.of('upgma')
        result = lw_update(spec, np.array([1.0, 2.0]), np.array([3.0, 4.0]), 0.5, 1, 1, np.array([1.0, 5.0]))
        assert_allclose(result, [2.0, 3.0])

    def test_rejects_non_positive_sizes(self):
        with self.assertRaises(InvalidInputError):
            lw_update(LinkageSpec.of('ward'), 1.0, 1.0, 1.0, 0, 1, 1)


class CondensedMatrixTests(SimpleTestCase):
    def test_index_and_pair_of_are_inverse(self):
        matrix = CondensedDistanceMatrix(np.arange(45.0), 10)
        for position in range(45):
            i, j = matrix.pair_of(position)
            self.assertLess(i, j)
            self.assertEqual(matrix.index(i, j), position)
            self.assertEqual(matrix.index(j, i), position)

    def test_row_and_square(self):
        square = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
        matrix = CondensedDistanceMatrix.from_square(square)
        self.assertEqual(matrix.values.tolist(), [1.0, 2.0, 3.0])
        self.assertEqual(matrix.row(1).tolist(), [1.0, np.inf, 3.0])
        assert_allclose(matrix.to_square(), square)

    def test_deactivate_fills_infinity(self):
        matrix = CondensedDistanceMatrix(np.array([1.0, 2.0, 3.0]), 3)
        matrix.deactivate(2)
        self.assertEqual(matrix.values.tolist(), [1.0, np.inf, np.inf])
        self.assertEqual(matrix.active.tolist(), [True, True, False])

    def test_validation(self):
        with self.assertRaises(InvalidInputError):
            CondensedDistanceMatrix(np.array([]), 1)
        with self.assertRaises(InvalidInputError):
            CondensedDistanceMatrix(np.array([1.0, 2.0]), 3)
        with self.assertRaises(InvalidInputError):
            CondensedDistanceMatrix(np.array([1.0, np.nan, 2.0]), 3)
        with self.assertRaises(InvalidInputError):
            CondensedDistanceMatrix(np.arange(3.0), 3).index(1, 1)


class MatrixInitialisationTests(SimpleTestCase):
    def setUp(self):
        self.data = Dataset.from_rows([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])

    def test_plain_and_squared(self):
        self.assertEqual(init_matrix_points(self.data, LinkageSpec.of('single')).values.tolist(), [5.0, 10.0, 5.0])
        self.assertEqual(init_matrix_points(self.data, LinkageSpec.of('ward')).values.tolist(), [25.0, 100.0, 25.0])
        self.assertEqual(init_matrix_points(self.data, LinkageSpec.of('upgma')).values.tolist(), [25.0, 100.0, 25.0])

    def test_needs_two_points(self):
        with self.assertRaises(InvalidInputError):
            init_matrix_points(Dataset.from_rows([[1.0]]), LinkageSpec.of('single'))

    def test_single_point_features_match_point_matrix(self):
        features = [cf_from_point(p) for p in self.data.points]
        for kind in ('upgma', 'upgmc', 'single', 'complete'):
            spec = LinkageSpec.of(kind)
            matrix, sizes = init_matrix_cfs(features, spec)
            assert_allclose(matrix.values, init_matrix_points(self.data, spec).values)
            self.assertEqual(sizes.tolist(), [1.0, 1.0, 1.0])

    def test_ward_uses_twice_variance_increase(self):
        a = cf_from_points([[0.0], [2.0]])
        b = cf_from_points([[10.0]])
        matrix, sizes = init_matrix_cfs([a, b], LinkageSpec.of('ward'))
        self.assertAlmostEqual(matrix.values[0], 2 * (2 * 1 / 3) * 81.0)
        self.assertEqual(sizes.tolist(), [2.0, 1.0])

    def test_upgma_uses_inter_cluster_criterion(self):
        a = cf_from_points([[0.0], [2.0]])
        b = cf_from_points([[10.0], [12.0]])
        matrix, _ = init_matrix_cfs([a, b], LinkageSpec.of('upgma'))
        cross = [(x - y) ** 2 for x in (0.0, 2.0) for y in (10.0, 12.0)]
        self.assertAlmostEqual(matrix.values[0], sum(cross) / 4)

    def test_weighted_linkages_get_unit_sizes(self):
        features = [cf_from_points([[0.0], [1.0]]), cf_from_points([[5.0]])]
        _, sizes = init_matrix_cfs(features, LinkageSpec.of('wpgmc'))
        self.assertEqual(sizes.tolist(), [1.0, 1.0])
