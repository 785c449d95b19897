"""
Django REST Framework Serializers

COMPARISON WITH THE CSV WORKFLOW:
=================================

A results CSV row and a `BenchmarkResult` JSON object carry the same
columns; `failed` and `total_seconds` are derived like the properties of
`bench.BenchResult`. Run detail responses nest their result rows, the way
the JSON sidecar sits next to its CSV.
"""

from rest_framework import serializers
from .models import BenchmarkRun, BenchmarkResult


class BenchmarkResultSerializer(serializers.ModelSerializer):
    failed = serializers.BooleanField(read_only=True)
    total_seconds = serializers.SerializerMethodField()

    class Meta:
        model = BenchmarkResult
        fields = [
            'id',
            'run',
            'algorithm',
            'input_mode',
            'linkage',
            'generator',
            'n',
            'dim',
            'seed',
            'repetition',
            'leaf_count',
            'tree_seconds',
            'wall_time_seconds',
            'total_seconds',
            'cut_k',
            'rmsd_at_k',
            'contended',
            'failed',
            'error',
        ]

    def get_total_seconds(self, obj):
        if obj.wall_time_seconds is None:
            return None
        return obj.wall_time_seconds + (obj.tree_seconds or 0.0)


class BenchmarkRunListSerializer(serializers.ModelSerializer):
    """Summary row for the run list: no manifest, no nested results"""
    result_count = serializers.IntegerField(read_only=True)
    failed_count = serializers.IntegerField(read_only=True)
    duration_seconds = serializers.FloatField(read_only=True)

    class Meta:
        model = BenchmarkRun
        fields = [
            'id',
            'label',
            'started_at',
            'finished_at',
            'duration_seconds',
            'parallel',
            'result_count',
            'failed_count',
        ]


class BenchmarkRunDetailSerializer(BenchmarkRunListSerializer):
    results = BenchmarkResultSerializer(many=True, read_only=True)

    class Meta(BenchmarkRunListSerializer.Meta):
        fields = BenchmarkRunListSerializer.Meta.fields + [
            'manifest',
            'environment',
            'results_path',
            'results',
        ]


class ScalingPointSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    mean_seconds = serializers.FloatField()
    std_seconds = serializers.FloatField()
    runs = serializers.IntegerField()


class ScalingSeriesSerializer(serializers.Serializer):
    algorithm = serializers.CharField()
    input_mode = serializers.CharField()
    linkage = serializers.CharField()
    generator = serializers.CharField(allow_blank=True)
    dim = serializers.IntegerField()
    slope = serializers.FloatField(allow_null=True)
    intercept = serializers.FloatField(allow_null=True)
    points = ScalingPointSerializer(many=True)
