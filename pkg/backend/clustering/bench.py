"""
Benchmark harness: run a grid of (generator x mode x linkage x engine x
repetition) jobs, record one `BenchResult` per job, and fit log-log
scaling slopes.

A manifest is a JSON document:

    {
      "label": "scaling-full",
      "generator": {"kind": "uniform", "dim": 5, "seed": 1},
      "sizes": [2000, 4000, 8000],
      "modes": ["full", "cf-linkage"],
      "engines": ["anderberg"],
      "linkages": ["upgmc", "ward"],
      "repetitions": 3,
      "cut_k": 50,
      "tree": {"max_leaf_entries": 2000}
    }

`generator` may also be a list of generator specs, each expanded over
`sizes`; `generators` (a list of full generator specs) replaces both.
`linkage` is shorthand for a one-element `linkages`. For cf-aggregation the
criteria are `criteria` (or `criterion`) if given, else the ones
corresponding to the linkages, without repeats.

Timing covers only tree construction (`tree_seconds`) and clustering
(`wall_time_seconds`); generation, permutation and scoring are excluded.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .cf_distances import CFDistanceKind
from .cf_tree import TreeConfig
from .datagen_io import GeneratorSpec, generate, input_order
from .evaluation import cut, rmsd
from .exceptions import ClusteringError, InsufficientDataError, InvalidInputError
from .hac_engines import Engine, InputMode, criterion_for, run_pipeline
from .linkage import LinkageKind

logger = logging.getLogger(__name__)

MIN_SCALING_SIZES = 3


@dataclass
class BenchResult:
    algorithm: str
    input_mode: str
    linkage: str
    n: int
    dim: int
    seed: int
    repetition: int
    leaf_count: int | None = None
    tree_seconds: float | None = None
    wall_time_seconds: float | None = None
    cut_k: int | None = None
    rmsd_at_k: float | None = None
    generator: str = ''
    contended: bool = False
    error: str = ''

    @property
    def failed(self) -> bool:
        return bool(self.error)

    @property
    def total_seconds(self) -> float | None:
        if self.wall_time_seconds is None:
            return None
        return self.wall_time_seconds + (self.tree_seconds or 0.0)


RESULT_COLUMNS = [f.name for f in fields(BenchResult)]
_INT_COLUMNS = {'n', 'dim', 'seed', 'repetition', 'leaf_count', 'cut_k'}
_FLOAT_COLUMNS = {'tree_seconds', 'wall_time_seconds', 'rmsd_at_k'}


@dataclass(frozen=True)
class BenchJob:
    generator: GeneratorSpec
    mode: InputMode
    engine: Engine
    linkage: LinkageKind | None
    criterion: CFDistanceKind | None
    repetition: int
    cut_k: int | None
    tree: TreeConfig
    linear_memory: bool = False

    @property
    def method_name(self) -> str:
        if self.mode is InputMode.CF_AGGREGATION:
            return self.criterion.value
        return self.linkage.value


@dataclass
class BenchManifest:
    generators: list[GeneratorSpec]
    modes: list[InputMode]
    engines: list[Engine]
    linkages: list[LinkageKind] = field(default_factory=list)
    criteria: list[CFDistanceKind] = field(default_factory=list)
    repetitions: int = 1
    cut_k: int | None = None
    tree: TreeConfig = field(default_factory=TreeConfig)
    linear_memory: bool = False
    label: str = ''

    def __post_init__(self):
        if not self.generators:
            raise InvalidInputError('manifest lists no generators')
        if not self.modes or not self.engines:
            raise InvalidInputError('manifest needs at least one mode and one engine')
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise InvalidInputError(f'repetitions must be >= 1, got {self.repetitions}')
        if self.cut_k is not None and self.cut_k < 1:
            raise InvalidInputError(f'cut_k must be >= 1, got {self.cut_k}')
        needs_linkage = any(m is not InputMode.CF_AGGREGATION for m in self.modes)
        if needs_linkage and not self.linkages:
            raise InvalidInputError('manifest needs a linkage for its non-aggregation modes')
        if InputMode.CF_AGGREGATION in self.modes and not self.criteria:
            if not self.linkages:
                raise InvalidInputError('cf-aggregation needs a criterion or a linkage to derive one from')
            self.criteria = list(dict.fromkeys(criterion_for(linkage) for linkage in self.linkages))

    @classmethod
    def from_dict(cls, data: Mapping, base_tree: TreeConfig | None = None, **overrides) -> 'BenchManifest':
        """Parse a manifest; `base_tree` supplies tree defaults the manifest may override."""
        data = dict(data)
        known = {'label', 'generator', 'sizes', 'generators', 'modes', 'engines', 'linkage', 'linkages',
                 'criterion', 'criteria', 'repetitions', 'cut_k', 'tree', 'linear_memory'}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f'unknown manifest keys: {", ".join(sorted(unknown))}')

        if 'generators' in data:
            generators = [GeneratorSpec.from_dict(g) for g in data['generators']]
        elif 'generator' in data and 'sizes' in data:
            bases = data['generator'] if isinstance(data['generator'], list) else [data['generator']]
            generators = [GeneratorSpec.from_dict({**base, 'n': n}) for base in bases for n in data['sizes']]
        else:
            raise InvalidInputError('manifest needs "generators" or "generator" with "sizes"')

        values = dict(
            generators=generators,
            modes=[InputMode.parse(m) for m in data.get('modes', ['full'])],
            engines=[Engine.parse(e) for e in data.get('engines', ['anderberg'])],
            linkages=[LinkageKind.parse(k) for k in _one_or_many(data, 'linkage', 'linkages')],
            criteria=[CFDistanceKind.parse(c) for c in _one_or_many(data, 'criterion', 'criteria')],
            repetitions=data.get('repetitions', 1),
            cut_k=data.get('cut_k'),
            tree=TreeConfig.from_dict({**(base_tree or TreeConfig()).to_dict(), **data.get('tree', {})}),
            linear_memory=bool(data.get('linear_memory', False)),
            label=data.get('label', ''),
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def load(cls, path, base_tree: TreeConfig | None = None, **overrides) -> 'BenchManifest':
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise InvalidInputError(f'cannot read manifest {path}: {exc}') from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f'manifest {path} is not valid JSON: {exc}') from None
        if not isinstance(data, dict):
            raise InvalidInputError(f'manifest {path} must be a JSON object')
        return cls.from_dict(data, base_tree, **overrides)

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'generators': [g.to_dict() for g in self.generators],
            'modes': [m.value for m in self.modes],
            'engines': [e.value for e in self.engines],
            'linkages': [k.value for k in self.linkages],
            'criteria': [c.value for c in self.criteria],
            'repetitions': self.repetitions,
            'cut_k': self.cut_k,
            'tree': self.tree.to_dict(),
            'linear_memory': self.linear_memory,
        }


def _one_or_many(data: Mapping, single: str, plural: str) -> list:
    if single in data and plural in data:
        raise InvalidInputError(f'manifest takes "{single}" or "{plural}", not both')
    if plural in data:
        if not isinstance(data[plural], list):
            raise InvalidInputError(f'"{plural}" must be a list')
        return data[plural]
    return [data[single]] if data.get(single) is not None else []


def iter_jobs(manifest: BenchManifest) -> Iterator[BenchJob]:
    for generator in manifest.generators:
        for mode in manifest.modes:
            aggregating = mode is InputMode.CF_AGGREGATION
            for method in (manifest.criteria if aggregating else manifest.linkages):
                for engine in manifest.engines:
                    for repetition in range(manifest.repetitions):
                        yield BenchJob(
                            generator=generator,
                            mode=mode,
                            engine=engine,
                            linkage=None if aggregating else method,
                            criterion=method if aggregating else None,
                            repetition=repetition,
                            cut_k=manifest.cut_k,
                            tree=manifest.tree,
                            linear_memory=manifest.linear_memory and mode is InputMode.FULL,
                        )


@lru_cache(maxsize=4)
def _dataset(spec: GeneratorSpec):
    return generate(spec)


def run_job(job: BenchJob, contended: bool = False) -> BenchResult:
    """Run one grid cell. Clustering errors are recorded on the row, not raised."""
    spec = job.generator
    result = BenchResult(
        algorithm=job.engine.value,
        input_mode=job.mode.value,
        linkage=job.method_name,
        n=spec.n,
        dim=spec.dim,
        seed=spec.seed,
        repetition=job.repetition,
        generator=spec.kind.value,
        contended=contended,
    )
    logger.info('bench %s %s %s n=%d rep=%d', result.algorithm, result.input_mode, result.linkage,
                result.n, result.repetition)
    try:
        data = _dataset(spec).permuted(input_order(spec.n, spec.seed, job.repetition))
        outcome = run_pipeline(
            data,
            mode=job.mode,
            linkage=job.linkage,
            criterion=job.criterion,
            engine=job.engine,
            tree_config=job.tree,
            linear_memory=job.linear_memory,
        )
        result.leaf_count = outcome.leaf_count
        result.tree_seconds = outcome.tree_seconds
        result.wall_time_seconds = outcome.cluster_seconds
        if job.cut_k is not None:
            items = outcome.leaves if job.mode.uses_tree else data
            k = min(job.cut_k, outcome.dendrogram.n0)
            result.cut_k = k
            result.rmsd_at_k = rmsd(items, cut(outcome.dendrogram, k))
    except (ClusteringError, FloatingPointError, MemoryError) as exc:
        result.error = f'{type(exc).__name__}: {exc}'
        logger.error('bench row failed (%s %s n=%d rep=%d): %s', result.algorithm, result.input_mode,
                     result.n, result.repetition, result.error)
    else:
        logger.info('bench row done in %.3fs (tree %s)', result.wall_time_seconds,
                    'n/a' if result.tree_seconds is None else f'{result.tree_seconds:.3f}s')
    return result


def _run_contended(job: BenchJob) -> BenchResult:
    return run_job(job, contended=True)


def run_manifest(manifest: BenchManifest, parallel: bool = False, workers: int | None = None) -> list[BenchResult]:
    """Run every job of the grid, sequentially unless `parallel`."""
    jobs = list(iter_jobs(manifest))
    logger.info('running %d benchmark rows (%s)', len(jobs), 'parallel' if parallel else 'sequential')
    if not parallel:
        return [run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_run_contended, jobs))


def environment() -> dict:
    return {
        'python': sys.version.split()[0],
        'numpy': np.__version__,
        'platform': platform.platform(),
        'machine': platform.machine(),
        'processor': platform.processor(),
        'cpu_count': os.cpu_count(),
        'recorded_at': datetime.now(timezone.utc).isoformat(),
    }


# -- results files -------------------------------------------------------------

def _format(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(results: Sequence[BenchResult], path, manifest: BenchManifest | None = None,
                  extra: Mapping | None = None) -> tuple[Path, Path]:
    """Results CSV plus a `<name>.json` sidecar with manifest and environment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        for result in results:
            row = asdict(result)
            writer.writerow([_format(row[column]) for column in RESULT_COLUMNS])
    sidecar = path.with_suffix('.json')
    meta = {
        'environment': environment(),
        'manifest': manifest.to_dict() if manifest is not None else None,
        'rows': len(results),
        'failed_rows': sum(1 for r in results if r.failed),
    }
    if extra:
        meta.update(extra)
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path, sidecar


def read_results(path) -> list[BenchResult]:
    path = Path(path)
    results = []
    try:
        handle = path.open(newline='')
    except OSError as exc:
        raise InvalidInputError(f'cannot open {path}: {exc}') from None
    with handle:
        reader = csv.DictReader(handle)
        missing = {'algorithm', 'input_mode', 'linkage', 'n', 'wall_time_seconds'} - set(reader.fieldnames or [])
        if missing:
            raise InvalidInputError(f'{path} lacks result columns: {", ".join(sorted(missing))}')
        for line_no, row in enumerate(reader, start=2):
            values = {}
            for column in RESULT_COLUMNS:
                raw = (row.get(column) or '').strip()
                try:
                    if column in _INT_COLUMNS:
                        values[column] = int(raw) if raw else (None if column in {'leaf_count', 'cut_k'} else 0)
                    elif column in _FLOAT_COLUMNS:
                        values[column] = float(raw) if raw else None
                    elif column == 'contended':
                        values[column] = raw.lower() == 'true'
                    else:
                        values[column] = raw
                except ValueError:
                    raise InvalidInputError(f'{path} line {line_no}: bad value {raw!r} in column {column}') from None
            results.append(BenchResult(**values))
    return results


# -- scaling -----------------------------------------------------------------

@dataclass
class ScalingPoint:
    n: int
    mean_seconds: float
    std_seconds: float
    runs: int


@dataclass
class ScalingSeries:
    algorithm: str
    input_mode: str
    linkage: str
    generator: str
    dim: int
    points: list[ScalingPoint]
    slope: float | None = None
    intercept: float | None = None

    @property
    def key(self) -> tuple[str, str, str, str, int]:
        return self.algorithm, self.input_mode, self.linkage, self.generator, self.dim

    @property
    def name(self) -> str:
        return '/'.join(str(part) for part in self.key if part != '')


def loglog_slope(sizes, seconds) -> tuple[float, float]:
    """Least-squares fit of log(seconds) = slope * log(size) + intercept."""
    sizes = np.asarray(sizes, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if np.unique(sizes).shape[0] < MIN_SCALING_SIZES:
        raise InsufficientDataError(
            f'a scaling slope needs at least {MIN_SCALING_SIZES} distinct sizes, got {np.unique(sizes).shape[0]}'
        )
    if np.any(sizes <= 0) or np.any(seconds <= 0):
        raise InsufficientDataError('sizes and timings must be positive for a log-log fit')
    slope, intercept = np.polyfit(np.log(sizes), np.log(seconds), 1)
    return float(slope), float(intercept)


def scaling_report(results: Sequence[BenchResult], metric: str = 'total', skip_short: bool = False) -> list[ScalingSeries]:
    """Per (algorithm, mode, linkage, generator, dim) series: timing per size and the log-log slope.

    `metric` is `total` (tree + clustering) or `cluster` (clustering only).
    Failed rows are ignored.
    """
    if metric not in ('total', 'cluster'):
        raise InvalidInputError(f'metric must be "total" or "cluster", got {metric!r}')
    grouped: dict[tuple[str, str, str, str, int], dict[int, list[float]]] = {}
    for result in results:
        if result.failed or result.wall_time_seconds is None:
            continue
        value = result.total_seconds if metric == 'total' else result.wall_time_seconds
        key = (result.algorithm, result.input_mode, result.linkage, result.generator, result.dim)
        grouped.setdefault(key, {}).setdefault(result.n, []).append(value)

    if not grouped:
        raise InsufficientDataError('no successful benchmark rows to report on')

    report = []
    for key in sorted(grouped):
        by_size = grouped[key]
        points = [
            ScalingPoint(n, float(np.mean(v)), float(np.std(v, ddof=1)) if len(v) > 1 else 0.0, len(v))
            for n, v in sorted(by_size.items())
        ]
        series = ScalingSeries(*key, points=points)
        try:
            series.slope, series.intercept = loglog_slope(
                [p.n for p in points], [p.mean_seconds for p in points]
            )
        except InsufficientDataError as exc:
            if not skip_short:
                raise InsufficientDataError(f'series {series.name}: {exc}') from None
            logger.warning('skipping slope for %s: %s', series.name, exc)
        report.append(series)
    return report


def write_scaling_csv(report: Sequence[ScalingSeries], path) -> Path:
    """Plot-ready rows: one per (series, size), the series slope repeated."""
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow([
            'algorithm', 'input_mode', 'linkage', 'generator', 'dim',
            'n', 'mean_seconds', 'std_seconds', 'runs', 'slope',
        ])
        for series in report:
            for point in series.points:
                writer.writerow([
                    series.algorithm, series.input_mode, series.linkage, series.generator, series.dim, point.n,
                    repr(point.mean_seconds), repr(point.std_seconds), point.runs,
                    '' if series.slope is None else repr(series.slope),
                ])
    return path
