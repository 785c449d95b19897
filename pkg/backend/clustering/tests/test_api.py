from datetime import timedelta

from django.utils import timezone
from rest_framework import status
from rest_framework.test import APITestCase

from backend.clustering.bench import BenchResult
from backend.clustering.models import BenchmarkResult, BenchmarkRun


class BenchmarkApiTests(APITestCase):
    @classmethod
    def setUpTestData(cls):
        started = timezone.now()
        cls.bench_run = BenchmarkRun.objects.create(
            label='scaling-full',
            manifest={'linkage': 'ward'},
            environment={'numpy': '1.26.4'},
            started_at=started,
            finished_at=started + timedelta(seconds=90),
        )
        rows = []
        for n in (1000, 2000, 4000):
            rows.append(BenchResult('anderberg', 'full', 'ward', n, 5, 1, 0,
                                    wall_time_seconds=1e-6 * n ** 2, cut_k=50, rmsd_at_k=1.5))
            rows.append(BenchResult('nnchain', 'cf-linkage', 'ward', n, 5, 1, 0, leaf_count=200,
                                    tree_seconds=1e-4 * n, wall_time_seconds=0.5, cut_k=50, rmsd_at_k=2.0))
        rows.append(BenchResult('naive', 'full', 'ward', 8000, 5, 1, 0, error='MemoryError: matrix too large'))
        BenchmarkResult.objects.bulk_create([BenchmarkResult.from_bench_result(cls.bench_run, r) for r in rows])

        cls.short_run = BenchmarkRun.objects.create(label='quality', started_at=started - timedelta(days=1))
        BenchmarkResult.objects.create(
            run=cls.short_run, algorithm='nnchain', input_mode='cf-aggregation', linkage='D4',
            n=500, dim=2, seed=3, wall_time_seconds=0.1,
        )

    def test_api_root(self):
        response = self.client.get('/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.json()['endpoints']['runs'], '/api/runs/')

    def test_run_list(self):
        response = self.client.get('/api/runs/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        first = response.data['results'][0]
        self.assertEqual(first['label'], 'scaling-full')
        self.assertEqual(first['result_count'], 7)
        self.assertEqual(first['failed_count'], 1)
        self.assertEqual(first['duration_seconds'], 90.0)
        self.assertNotIn('results', first)

    def test_run_detail_nests_results(self):
        response = self.client.get(f'/api/runs/{self.bench_run.pk}/')
        self.assertEqual(len(response.data['results']), 7)
        self.assertEqual(response.data['environment'], {'numpy': '1.26.4'})
        totals = {r['n']: r['total_seconds'] for r in response.data['results'] if r['input_mode'] == 'cf-linkage'}
        self.assertAlmostEqual(totals[2000], 0.7)

    def test_run_scaling(self):
        response = self.client.get(f'/api/runs/{self.bench_run.pk}/scaling/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        slopes = {(s['algorithm'], s['input_mode']): s['slope'] for s in response.data['series']}
        self.assertAlmostEqual(slopes['anderberg', 'full'], 2.0, places=6)
        self.assertLess(slopes['nnchain', 'cf-linkage'], 1.0)
        self.assertEqual({(s['generator'], s['dim']) for s in response.data['series']}, {('', 5)})

        cluster_only = self.client.get(f'/api/runs/{self.bench_run.pk}/scaling/', {'metric': 'cluster'})
        slopes = {(s['algorithm'], s['input_mode']): s['slope'] for s in cluster_only.data['series']}
        self.assertAlmostEqual(slopes['nnchain', 'cf-linkage'], 0.0, places=6)

    def test_short_series_has_null_slope(self):
        response = self.client.get(f'/api/runs/{self.short_run.pk}/scaling/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIsNone(response.data['series'][0]['slope'])

    def test_bad_metric(self):
        response = self.client.get(f'/api/runs/{self.bench_run.pk}/scaling/', {'metric': 'wall'})
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('metric', response.data['error'])

    def test_result_filters(self):
        def count(**params):
            return self.client.get('/api/results/', params).data['count']

        self.assertEqual(count(), 8)
        self.assertEqual(count(algorithm='anderberg'), 3)
        self.assertEqual(count(input_mode='cf-linkage', min_n=2000), 2)
        self.assertEqual(count(linkage='WARD'), 7)
        self.assertEqual(count(linkage='d4'), 1)
        self.assertEqual(count(failed='true'), 1)
        self.assertEqual(count(failed='false'), 7)
        self.assertEqual(count(run=self.short_run.pk), 1)
        self.assertEqual(count(max_n=1000), 3)

    def test_result_ordering(self):
        response = self.client.get('/api/results/', {'algorithm': 'anderberg', 'ordering': '-wall_time_seconds'})
        self.assertEqual([r['n'] for r in response.data['results']], [4000, 2000, 1000])

    def test_failed_row_serialization(self):
        response = self.client.get('/api/results/', {'failed': 'true'})
        row = response.data['results'][0]
        self.assertTrue(row['failed'])
        self.assertIsNone(row['total_seconds'])
        self.assertIsNone(row['leaf_count'])

    def test_read_only(self):
        response = self.client.post('/api/runs/', {'label': 'new'})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
