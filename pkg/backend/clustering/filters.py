"""
Django Filters for the results API

Query parameters map onto the result columns:
- /api/results/?algorithm=anderberg&input_mode=cf-linkage
- /api/results/?linkage=ward&min_n=16000&max_n=128000
- /api/results/?failed=true
- /api/results/?run=3
"""

from django_filters import rest_framework as filters
from .models import BenchmarkResult


class BenchmarkResultFilter(filters.FilterSet):
    algorithm = filters.ChoiceFilter(choices=BenchmarkResult.ALGORITHMS)
    input_mode = filters.ChoiceFilter(choices=BenchmarkResult.INPUT_MODES)
    # case-insensitive so that ?linkage=UPGMA and ?linkage=d4 both work
    linkage = filters.CharFilter(field_name='linkage', lookup_expr='iexact')
    generator = filters.CharFilter(field_name='generator', lookup_expr='iexact')

    n = filters.NumberFilter(field_name='n', lookup_expr='exact')
    min_n = filters.NumberFilter(
        field_name='n',
        lookup_expr='gte',
        label='Minimum data set size'
    )
    max_n = filters.NumberFilter(
        field_name='n',
        lookup_expr='lte',
        label='Maximum data set size'
    )

    failed = filters.BooleanFilter(method='filter_failed', label='Only failed (true) or successful (false) rows')
    contended = filters.BooleanFilter(field_name='contended')

    class Meta:
        model = BenchmarkResult
        fields = ['run', 'algorithm', 'input_mode', 'linkage', 'generator', 'n', 'repetition', 'contended']

    def filter_failed(self, queryset, name, value):
        if value is None:
            return queryset
        if value:
            return queryset.exclude(error='')
        return queryset.filter(error='')
