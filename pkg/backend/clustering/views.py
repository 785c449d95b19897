"""
Django REST Framework Views (ViewSets)

Read-only browsing of stored benchmark runs. Nothing here runs a benchmark;
rows are written by `manage.py bench --save`.

AVAILABLE ENDPOINTS:
===================

1. List runs:            GET /api/runs/
2. Run with its results: GET /api/runs/{id}/
3. Scaling slopes:       GET /api/runs/{id}/scaling/?metric=total|cluster
4. List results:         GET /api/results/
   - algorithm, input_mode, linkage, generator, run, repetition
   - n, min_n, max_n
   - failed, contended
   - ordering: wall_time_seconds, tree_seconds, rmsd_at_k, n (prefix - for descending)
5. Single result:        GET /api/results/{id}/
"""

from django.db.models import Count, Q
from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import status, viewsets
from rest_framework.decorators import action
from rest_framework.filters import OrderingFilter, SearchFilter
from rest_framework.response import Response

from .bench import scaling_report
from .exceptions import ClusteringError
from .filters import BenchmarkResultFilter
from .models import BenchmarkResult, BenchmarkRun
from .serializers import (
    BenchmarkResultSerializer,
    BenchmarkRunDetailSerializer,
    BenchmarkRunListSerializer,
    ScalingSeriesSerializer,
)


class BenchmarkRunViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = BenchmarkRun.objects.annotate(
        result_count=Count('results'),
        failed_count=Count('results', filter=~Q(results__error='')),
    ).all()

    filter_backends = [OrderingFilter, SearchFilter]
    ordering_fields = ['started_at', 'label']
    ordering = ['-started_at']
    search_fields = ['label']

    def get_queryset(self):
        queryset = super().get_queryset()
        if self.action == 'retrieve':
            queryset = queryset.prefetch_related('results')
        return queryset

    def get_serializer_class(self):
        if self.action == 'list':
            return BenchmarkRunListSerializer
        return BenchmarkRunDetailSerializer

    @action(detail=True, methods=['get'])
    def scaling(self, request, pk=None):
        """
        Log-log runtime slope per (algorithm, input_mode, linkage, generator, dim) series.

        Series with fewer than three sizes are listed with a null slope.
        """
        run = self.get_object()
        metric = request.query_params.get('metric', 'total')
        results = [row.to_bench_result() for row in run.results.all()]
        try:
            report = scaling_report(results, metric=metric, skip_short=True)
        except ClusteringError as exc:
            return Response({'error': str(exc)}, status=status.HTTP_400_BAD_REQUEST)

        return Response({
            'run': run.pk,
            'metric': metric,
            'series': ScalingSeriesSerializer(report, many=True).data,
        })


class BenchmarkResultViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = BenchmarkResult.objects.select_related('run').all()
    serializer_class = BenchmarkResultSerializer

    filter_backends = [
        DjangoFilterBackend,
        OrderingFilter,
        SearchFilter,
    ]
    filterset_class = BenchmarkResultFilter

    ordering_fields = [
        'wall_time_seconds',
        'tree_seconds',
        'rmsd_at_k',
        'n',
        'leaf_count',
    ]
    ordering = ['run', 'id']
    search_fields = ['error', 'run__label']
