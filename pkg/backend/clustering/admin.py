"""
Django Admin Configuration

Stored benchmark runs can be browsed at http://localhost:8000/admin/
Results are read-only here; they come from `manage.py bench --save`.
"""

from django.contrib import admin
from .models import BenchmarkRun, BenchmarkResult


class BenchmarkResultInline(admin.TabularInline):
    """Result rows shown under their run"""
    model = BenchmarkResult
    extra = 0
    can_delete = False
    fields = [
        'algorithm',
        'input_mode',
        'linkage',
        'n',
        'repetition',
        'leaf_count',
        'tree_seconds',
        'wall_time_seconds',
        'rmsd_at_k',
        'error',
    ]
    readonly_fields = fields


@admin.register(BenchmarkRun)
class BenchmarkRunAdmin(admin.ModelAdmin):
    list_display = ['id', 'label', 'started_at', 'finished_at', 'parallel', 'results_path']
    list_filter = ['parallel', 'started_at']
    search_fields = ['label', 'results_path']
    inlines = [BenchmarkResultInline]
    readonly_fields = ['manifest', 'environment', 'started_at', 'finished_at']


@admin.register(BenchmarkResult)
class BenchmarkResultAdmin(admin.ModelAdmin):
    list_display = [
        'run',
        'algorithm',
        'input_mode',
        'linkage',
        'n',
        'repetition',
        'leaf_count',
        'wall_time_seconds',
        'rmsd_at_k',
        'contended',
    ]
    list_filter = ['algorithm', 'input_mode', 'linkage', 'contended']
    search_fields = ['run__label', 'error']
