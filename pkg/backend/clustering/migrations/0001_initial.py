# Generated by Django 4.2.7 on 2026-10-19 10:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='BenchmarkRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(blank=True, db_index=True, max_length=200)),
                ('manifest', models.JSONField(default=dict)),
                ('environment', models.JSONField(default=dict)),
                ('parallel', models.BooleanField(default=False)),
                ('results_path', models.CharField(blank=True, max_length=500)),
                ('started_at', models.DateTimeField(db_index=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Benchmark Run',
                'verbose_name_plural': 'Benchmark Runs',
                'db_table': 'benchmark_runs',
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='BenchmarkResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('algorithm', models.CharField(choices=[('naive', 'Naive'), ('anderberg', 'Anderberg'), ('nnchain', 'NN-chain')], db_index=True, max_length=20)),
                ('input_mode', models.CharField(choices=[('full', 'Full data'), ('cf-centers', 'CF centers'), ('cf-linkage', 'CF linkage'), ('cf-aggregation', 'CF aggregation')], db_index=True, max_length=20)),
                ('linkage', models.CharField(db_index=True, max_length=20)),
                ('generator', models.CharField(blank=True, max_length=30)),
                ('n', models.PositiveIntegerField(db_index=True)),
                ('dim', models.PositiveIntegerField()),
                ('seed', models.PositiveBigIntegerField()),
                ('repetition', models.PositiveIntegerField(default=0)),
                ('leaf_count', models.PositiveIntegerField(blank=True, null=True)),
                ('tree_seconds', models.FloatField(blank=True, null=True)),
                ('wall_time_seconds', models.FloatField(blank=True, null=True)),
                ('cut_k', models.PositiveIntegerField(blank=True, null=True)),
                ('rmsd_at_k', models.FloatField(blank=True, null=True)),
                ('contended', models.BooleanField(default=False)),
                ('error', models.TextField(blank=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='clustering.benchmarkrun')),
            ],
            options={
                'verbose_name': 'Benchmark Result',
                'verbose_name_plural': 'Benchmark Results',
                'db_table': 'benchmark_results',
                'ordering': ['run', 'id'],
            },
        ),
        migrations.AddIndex(
            model_name='benchmarkresult',
            index=models.Index(fields=['algorithm', 'input_mode', 'linkage'], name='bench_result_method_idx'),
        ),
        migrations.AddIndex(
            model_name='benchmarkresult',
            index=models.Index(fields=['run', 'n'], name='bench_result_run_n_idx'),
        ),
    ]
