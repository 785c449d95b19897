"""
Hierarchical agglomerative clustering engines.

Three engines share one condensed matrix layout and one merge step:

- `hac_naive`: scan the whole matrix for the closest pair on every step,
  O(m^3). Kept as the reference the other engines are checked against.
- `hac_anderberg`: cache the nearest neighbour of every row and rescan only
  rows whose cached neighbour was affected. Worst case is still cubic, in
  practice close to quadratic. Produces exactly the merge list of
  `hac_naive`.
- `hac_nnchain`: follow nearest-neighbour chains and merge reciprocal
  nearest neighbours, O(m^2). Exact for reducible linkages (single,
  complete, UPGMA, WPGMA, Ward); for centroid/median it may differ.

How a merged row is recomputed is a pluggable rule: the Lance-Williams
recurrence of a linkage, or ("CF aggregation") merging the two cluster
features and re-evaluating a BIRCH criterion against every other feature.

Ties: among all pairs at the minimal distance the pair with the
lexicographically smallest (smaller id, larger id) of current cluster ids
wins. Initial clusters have ids 0..N0-1, merge k creates id N0+k. A merged
cluster lives in the lower of its two matrix slots; `left` is the cluster in
the lower slot.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .cf_distances import CFDistanceKind, criterion_to_many
from .cf_tree import CFTree, TreeConfig, build
from .core_model import ClusterFeature, Dataset, cf_merge, squared_norms, stack_features
from .exceptions import DatasetParseError, InvalidInputError
from .linkage import (
    CRITERION_FOR_LINKAGE,
    CondensedDistanceMatrix,
    LinkageKind,
    LinkageSpec,
    init_matrix_cfs,
    init_matrix_points,
    lw_update,
)

logger = logging.getLogger(__name__)

# Criteria whose CF aggregation satisfies the reducibility property.
REDUCIBLE_CRITERIA = frozenset({CFDistanceKind.D2, CFDistanceKind.D4})


class Engine(str, Enum):
    NAIVE = 'naive'
    ANDERBERG = 'anderberg'
    NNCHAIN = 'nnchain'

    @classmethod
    def parse(cls, value) -> 'Engine':
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace('-', '').replace('_', '')
        try:
            return cls(text)
        except ValueError:
            names = ','.join(e.value for e in cls)
            raise InvalidInputError(f'unknown engine {value!r} (expected one of {names})') from None


class InputMode(str, Enum):
    FULL = 'full'
    CF_CENTERS = 'cf-centers'
    CF_LINKAGE = 'cf-linkage'
    CF_AGGREGATION = 'cf-aggregation'

    @classmethod
    def parse(cls, value) -> 'InputMode':
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace('_', '-')
        if text == 'full-data':
            return cls.FULL
        try:
            return cls(text)
        except ValueError:
            names = ','.join(m.value for m in cls)
            raise InvalidInputError(f'unknown input mode {value!r} (expected one of {names})') from None

    @property
    def uses_tree(self) -> bool:
        return self is not InputMode.FULL


class Merge(NamedTuple):
    left: int
    right: int
    height: float
    size: float


@dataclass
class Dendrogram:
    """Ordered merge list. Merge k creates cluster id n0 + k."""

    merges: list[Merge]
    n0: int
    linkage: str = ''
    squared: bool = False
    evaluations: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.merges)

    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges], dtype=np.float64)

    def pairs(self) -> list[tuple[int, int]]:
        return [(m.left, m.right) for m in self.merges]

    def inversions(self) -> list[int]:
        """Indices k where merge k is lower than merge k-1."""
        heights = self.heights()
        return [int(k) for k in np.flatnonzero(heights[1:] < heights[:-1]) + 1]

    def as_sqrt(self) -> 'Dendrogram':
        """Presentation copy with square-rooted heights (no-op if not squared)."""
        if not self.squared:
            return self
        merges = [Merge(m.left, m.right, float(np.sqrt(max(m.height, 0.0))), m.size) for m in self.merges]
        return Dendrogram(merges, self.n0, self.linkage, False, self.evaluations)

    def validate(self):
        if len(self.merges) != self.n0 - 1:
            raise InvalidInputError(f'dendrogram over {self.n0} items needs {self.n0 - 1} merges, has {len(self.merges)}')
        used = set()
        for k, merge in enumerate(self.merges):
            for child in (merge.left, merge.right):
                if not 0 <= child < self.n0 + k or child in used:
                    raise InvalidInputError(f'merge {k} has an invalid child {child}')
                used.add(child)


# -- merge rules -------------------------------------------------------------

class _LanceWilliamsRule:
    def __init__(self, spec: LinkageSpec, sizes: np.ndarray):
        self.spec = spec
        self.sizes = np.array(sizes, dtype=np.float64)
        self.evaluations = 0

    @property
    def reducible(self) -> bool:
        return self.spec.reducible

    def merge(self, matrix: CondensedDistanceMatrix, a: int, b: int, others: np.ndarray) -> np.ndarray:
        pos_a = matrix.row_positions(a)[others]
        pos_b = matrix.row_positions(b)[others]
        values = lw_update(
            self.spec,
            matrix.values[pos_a],
            matrix.values[pos_b],
            matrix.get(a, b),
            self.sizes[a],
            self.sizes[b],
            self.sizes[others],
        )
        self.sizes[a] += self.sizes[b]
        self.evaluations += int(others.shape[0])
        return values


class _CFAggregationRule:
    def __init__(self, features: Sequence[ClusterFeature], kind: CFDistanceKind):
        self.kind = kind
        self.features = list(features)
        n, mu, sse = stack_features(self.features)
        self.n, self.mu, self.sse = n, mu.copy(), sse
        self.evaluations = 0

    @property
    def reducible(self) -> bool:
        return self.kind in REDUCIBLE_CRITERIA

    def values_to(self, anchor: ClusterFeature, slots) -> np.ndarray:
        values = criterion_to_many(self.kind, self.n[slots], self.mu[slots], self.sse[slots], anchor)
        if self.kind is CFDistanceKind.D1:
            values = np.sqrt(values)
        return values

    def merge(self, matrix: CondensedDistanceMatrix, a: int, b: int, others: np.ndarray) -> np.ndarray:
        merged = cf_merge(self.features[a], self.features[b])
        self.features[a] = merged
        self.features[b] = None
        self.n[a], self.mu[a], self.sse[a] = merged.n, merged.mu, merged.sse
        self.evaluations += int(others.shape[0])
        if others.shape[0] == 0:
            return np.empty(0)
        return self.values_to(merged, others)


def cf_criterion_matrix(features: Sequence[ClusterFeature], kind) -> CondensedDistanceMatrix:
    """Initial matrix of squared criterion values (plain for D1)."""
    kind = CFDistanceKind.parse(kind)
    m = len(features)
    if m < 2:
        raise InvalidInputError(f'need at least 2 cluster features, got {m}')
    rule = _CFAggregationRule(features, kind)
    if np.any(rule.n <= 0):
        raise InvalidInputError('cluster features must have positive weight')
    values = np.empty(m * (m - 1) // 2, dtype=np.float64)
    start = 0
    for i in range(m - 1):
        row = rule.values_to(features[i], np.arange(i + 1, m))
        values[start:start + row.shape[0]] = row
        start += row.shape[0]
    return CondensedDistanceMatrix(values, m)


# -- shared engine state ----------------------------------------------------

class _State:
    """Slot bookkeeping shared by all engines."""

    def __init__(self, matrix: CondensedDistanceMatrix, rule, weights):
        self.matrix = matrix
        self.rule = rule
        self.n0 = matrix.size
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (self.n0,):
            raise InvalidInputError(f'expected {self.n0} cluster sizes, got {weights.shape}')
        if np.any(weights <= 0):
            raise InvalidInputError('cluster sizes must be positive')
        self.weights = weights
        self.ids = np.arange(self.n0)
        self.merges: list[Merge] = []

    def best_pair(self, pairs: list[tuple[int, int]]) -> tuple[int, int]:
        """Apply the id tie rule to candidate slot pairs (i < j)."""
        def key(pair):
            x, y = self.ids[pair[0]], self.ids[pair[1]]
            return (min(x, y), max(x, y))
        return min(pairs, key=key)

    def merge(self, a: int, b: int) -> Merge:
        """Merge slot b into slot a (a < b); returns the recorded merge."""
        matrix = self.matrix
        height = matrix.get(a, b)
        others = np.flatnonzero(matrix.active)
        others = others[(others != a) & (others != b)]
        new_values = self.rule.merge(matrix, a, b, others)
        if others.shape[0]:
            matrix.values[matrix.row_positions(a)[others]] = new_values
        matrix.deactivate(b)
        size = self.weights[a] + self.weights[b]
        record = Merge(int(self.ids[a]), int(self.ids[b]), float(height), float(size))
        self.weights[a] = size
        self.ids[a] = self.n0 + len(self.merges)
        self.merges.append(record)
        return record


def _prepare(matrix: CondensedDistanceMatrix, preserve_input: bool) -> CondensedDistanceMatrix:
    if matrix.size < 2:
        raise InvalidInputError('need at least 2 clusters')
    if not bool(np.all(matrix.active)):
        raise InvalidInputError('matrix has already been consumed by an engine run')
    return matrix.copy() if preserve_input else matrix


def _naive(state: _State):
    matrix = state.matrix
    for _ in range(state.n0 - 1):
        values = matrix.values
        best = values.min()
        candidates = [matrix.pair_of(int(p)) for p in np.flatnonzero(values == best)]
        a, b = state.best_pair(candidates)
        state.merge(a, b)


def _anderberg(state: _State):
    matrix = state.matrix
    m = state.n0
    nn_value = np.full(m, np.inf)
    nn_index = np.full(m, -1, dtype=np.int64)

    def refresh(i):
        window = matrix.values[matrix.upper_slice(i)]
        if window.shape[0] == 0:
            nn_value[i], nn_index[i] = np.inf, -1
            return
        j = int(np.argmin(window))
        nn_value[i], nn_index[i] = window[j], i + 1 + j

    for i in range(m - 1):
        refresh(i)

    for _ in range(m - 1):
        best = nn_value.min()
        candidates = []
        for i in np.flatnonzero(nn_value == best):
            window = matrix.values[matrix.upper_slice(int(i))]
            candidates.extend((int(i), int(i) + 1 + int(j)) for j in np.flatnonzero(window == best))
        a, b = state.best_pair(candidates)
        state.merge(a, b)

        nn_value[b], nn_index[b] = np.inf, -1
        refresh(a)
        rows = np.flatnonzero(matrix.active[:b])
        rows = rows[rows != a]
        if rows.shape[0] == 0:
            continue
        stale = (nn_index[rows] == a) | (nn_index[rows] == b)
        for i in rows[stale]:
            refresh(int(i))
        below = rows[~stale & (rows < a)]
        if below.shape[0]:
            new_values = matrix.values[matrix.row_positions(a)[below]]
            better = new_values < nn_value[below]
            nn_value[below[better]] = new_values[better]
            nn_index[below[better]] = a


def _nnchain_pairs(state: _State) -> list[tuple[int, int, float]]:
    """Run the chain; returns (slot_a, slot_b, height) in discovery order."""
    matrix = state.matrix
    found = []
    chain: list[int] = []
    reducible = state.rule.reducible
    for _ in range(state.n0 - 1):
        if not chain:
            chain.append(int(np.flatnonzero(matrix.active)[0]))
        while True:
            x = chain[-1]
            row = matrix.row(x)
            y = int(np.argmin(row))
            if len(chain) > 1 and row[chain[-2]] == row[y]:
                y = chain[-2]
            if len(chain) > 1 and y == chain[-2]:
                break
            chain.append(y)
        x, y = chain.pop(), chain.pop()
        a, b = (x, y) if x < y else (y, x)
        found.append((a, b, matrix.get(a, b)))
        state.merge(a, b)
        if not reducible:
            chain.clear()
    return found


def _relabel(n0: int, pairs, weights, sort: bool) -> list[Merge]:
    """Turn representative-slot merges into an id-based merge list."""
    order = sorted(range(len(pairs)), key=lambda k: pairs[k][2]) if sort else range(len(pairs))
    parent = list(range(n0))
    cluster_id = list(range(n0))
    size = {i: float(w) for i, w in enumerate(weights)}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    merges = []
    for k in order:
        a, b, height = pairs[k]
        ra, rb = find(a), find(b)
        left, right = cluster_id[ra], cluster_id[rb]
        new_size = size.pop(left) + size.pop(right)
        new_id = n0 + len(merges)
        parent[rb] = ra
        cluster_id[ra] = new_id
        size[new_id] = new_size
        merges.append(Merge(left, right, float(height), new_size))
    return merges


def _run(engine: Engine, matrix, rule, weights, name, squared, preserve_input=True) -> Dendrogram:
    matrix = _prepare(matrix, preserve_input)
    state = _State(matrix, rule, weights)
    started = time.perf_counter()
    if engine is Engine.NAIVE:
        _naive(state)
        merges = state.merges
    elif engine is Engine.ANDERBERG:
        _anderberg(state)
        merges = state.merges
    else:
        pairs = _nnchain_pairs(state)
        merges = _relabel(state.n0, pairs, weights, sort=rule.reducible)
    logger.debug('%s %s over %d clusters took %.3fs', engine.value, name, state.n0, time.perf_counter() - started)
    return Dendrogram(merges, state.n0, name, squared, rule.evaluations)


# -- public engine API --------------------------------------------------------

def hac_naive(matrix: CondensedDistanceMatrix, sizes, spec: LinkageSpec, preserve_input: bool = True) -> Dendrogram:
    rule = _LanceWilliamsRule(spec, sizes)
    return _run(Engine.NAIVE, matrix, rule, sizes, spec.name, spec.heights_squared, preserve_input)


def hac_anderberg(matrix: CondensedDistanceMatrix, sizes, spec: LinkageSpec, preserve_input: bool = True) -> Dendrogram:
    rule = _LanceWilliamsRule(spec, sizes)
    return _run(Engine.ANDERBERG, matrix, rule, sizes, spec.name, spec.heights_squared, preserve_input)


def hac_nnchain(matrix: CondensedDistanceMatrix, sizes, spec: LinkageSpec, preserve_input: bool = True) -> Dendrogram:
    if not spec.reducible:
        logger.warning(
            'NN-chain with non-reducible linkage %s: the result may differ from the exact algorithm',
            spec.name,
        )
    rule = _LanceWilliamsRule(spec, sizes)
    return _run(Engine.NNCHAIN, matrix, rule, sizes, spec.name, spec.heights_squared, preserve_input)


_ENGINES = {
    Engine.NAIVE: hac_naive,
    Engine.ANDERBERG: hac_anderberg,
    Engine.NNCHAIN: hac_nnchain,
}


def hac(matrix: CondensedDistanceMatrix, sizes, spec: LinkageSpec, engine=Engine.ANDERBERG,
        preserve_input: bool = True) -> Dendrogram:
    return _ENGINES[Engine.parse(engine)](matrix, sizes, spec, preserve_input)


def hac_nnchain_single_linear(data: Dataset) -> Dendrogram:
    """Single-linkage NN-chain without a distance matrix.

    Memory beyond the points is O(N): a cluster label per point and one
    distance vector per nearest-neighbour query. Heights are Euclidean
    distances computed exactly as `init_matrix_points` computes them.
    """
    points = data.points
    n = points.shape[0]
    if n < 2:
        raise InvalidInputError(f'need at least 2 points, got {n}')
    labels = np.arange(n)
    members = {i: [i] for i in range(n)}
    evaluations = 0

    def nearest(x):
        nonlocal evaluations
        best = np.full(n, np.inf)
        for p in members[x]:
            distances = np.sqrt(squared_norms(points - points[p]))
            np.minimum.at(best, labels, distances)
            evaluations += n
        best[x] = np.inf
        return best

    pairs = []
    chain: list[int] = []
    for _ in range(n - 1):
        if not chain:
            chain.append(min(members))
        while True:
            x = chain[-1]
            row = nearest(x)
            y = int(np.argmin(row))
            if len(chain) > 1 and row[chain[-2]] == row[y]:
                y = chain[-2]
            if len(chain) > 1 and y == chain[-2]:
                height = row[y]
                break
            chain.append(y)
        x, y = chain.pop(), chain.pop()
        a, b = (x, y) if x < y else (y, x)
        pairs.append((a, b, float(height)))
        labels[members[b]] = a
        members[a].extend(members.pop(b))
    merges = _relabel(n, pairs, np.ones(n), sort=True)
    return Dendrogram(merges, n, LinkageKind.SINGLE.value, False, evaluations)


def hac_cf_aggregation(features: Sequence[ClusterFeature], kind, engine=Engine.ANDERBERG) -> Dendrogram:
    """Cluster leaf features by merging features and re-evaluating a criterion.

    Heights are the squared criterion values (plain values for D1).
    """
    kind = CFDistanceKind.parse(kind)
    engine = Engine.parse(engine)
    matrix = cf_criterion_matrix(features, kind)
    rule = _CFAggregationRule(features, kind)
    if engine is Engine.NNCHAIN and not rule.reducible:
        logger.warning('NN-chain with non-reducible criterion %s: merges may differ from the exact algorithm', kind.value)
    weights = rule.n.copy()
    return _run(engine, matrix, rule, weights, kind.value, kind is not CFDistanceKind.D1, preserve_input=False)


# -- pipeline ---------------------------------------------------------------

@dataclass
class PipelineResult:
    dendrogram: Dendrogram
    mode: InputMode
    engine: Engine
    tree: CFTree | None = None
    leaves: list[ClusterFeature] | None = None
    tree_seconds: float | None = None
    cluster_seconds: float = 0.0

    @property
    def leaf_count(self) -> int | None:
        return len(self.leaves) if self.leaves is not None else None


def resolve_method(mode: InputMode, linkage=None, criterion=None) -> tuple[LinkageSpec | None, CFDistanceKind | None]:
    """Validate the linkage/criterion pair for an input mode."""
    if mode is InputMode.CF_AGGREGATION:
        if linkage is not None and criterion is None:
            raise InvalidInputError('cf-aggregation takes a criterion (D0..D4, R), not a linkage')
        if criterion is None:
            raise InvalidInputError('cf-aggregation requires a criterion')
        return None, CFDistanceKind.parse(criterion)
    if criterion is not None:
        raise InvalidInputError(f'{mode.value} takes a linkage, not a criterion')
    if linkage is None:
        raise InvalidInputError(f'{mode.value} requires a linkage')
    spec = linkage if isinstance(linkage, LinkageSpec) else LinkageSpec.of(linkage)
    return spec, None


def run_pipeline(
    data: Dataset,
    mode=InputMode.FULL,
    linkage=None,
    criterion=None,
    engine=Engine.ANDERBERG,
    tree_config: TreeConfig | None = None,
    linear_memory: bool = False,
) -> PipelineResult:
    """Aggregate (unless mode is full) and cluster; times both phases."""
    mode = InputMode.parse(mode)
    engine = Engine.parse(engine)
    spec, kind = resolve_method(mode, linkage, criterion)

    tree = leaves = tree_seconds = None
    if mode.uses_tree:
        started = time.perf_counter()
        tree = build(data, tree_config or TreeConfig())
        leaves = tree.leaves()
        tree_seconds = time.perf_counter() - started
        if len(leaves) < 2:
            raise InvalidInputError('the CF-tree aggregated everything into a single leaf entry')

    started = time.perf_counter()
    if mode is InputMode.FULL:
        if linear_memory:
            if spec.kind is not LinkageKind.SINGLE or engine is not Engine.NNCHAIN:
                raise InvalidInputError('the linear-memory variant exists for single linkage with nnchain only')
            dendrogram = hac_nnchain_single_linear(data)
        else:
            matrix = init_matrix_points(data, spec)
            dendrogram = hac(matrix, np.ones(len(data)), spec, engine, preserve_input=False)
    elif mode is InputMode.CF_CENTERS:
        centers = Dataset(np.vstack([cf.mu for cf in leaves]))
        matrix = init_matrix_points(centers, spec)
        dendrogram = hac(matrix, np.ones(len(leaves)), spec, engine, preserve_input=False)
    elif mode is InputMode.CF_LINKAGE:
        matrix, sizes = init_matrix_cfs(leaves, spec)
        dendrogram = hac(matrix, sizes, spec, engine, preserve_input=False)
    else:
        dendrogram = hac_cf_aggregation(leaves, kind, engine)
    cluster_seconds = time.perf_counter() - started

    return PipelineResult(dendrogram, mode, engine, tree, leaves, tree_seconds, cluster_seconds)


def pipeline(data: Dataset, mode=InputMode.FULL, linkage=None, criterion=None, engine=Engine.ANDERBERG,
             tree_config: TreeConfig | None = None, linear_memory: bool = False) -> Dendrogram:
    return run_pipeline(data, mode, linkage, criterion, engine, tree_config, linear_memory).dendrogram


def criterion_for(linkage) -> CFDistanceKind:
    """CF-aggregation criterion corresponding to a linkage."""
    kind = LinkageKind.parse(linkage)
    if kind not in CRITERION_FOR_LINKAGE:
        raise InvalidInputError(f'no cluster-feature criterion corresponds to {kind.value} linkage')
    return CRITERION_FOR_LINKAGE[kind]


# -- dendrogram files -----------------------------------------------------------

def write_dendrogram(dendrogram: Dendrogram, path, sqrt_heights: bool = False) -> Path:
    """CSV with a `# n0=.. linkage=.. squared=..` header line."""
    path = Path(path)
    out = dendrogram.as_sqrt() if sqrt_heights else dendrogram
    with path.open('w', newline='') as handle:
        handle.write(f'# n0={out.n0} linkage={out.linkage} squared={str(out.squared).lower()}\n')
        writer = csv.writer(handle)
        for merge in out.merges:
            writer.writerow([merge.left, merge.right, repr(merge.height), repr(merge.size)])
    return path


def read_dendrogram(path) -> Dendrogram:
    path = Path(path)
    meta = {}
    merges = []
    with path.open(newline='') as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith('#'):
                for token in line[1:].split():
                    key, _, value = token.partition('=')
                    meta[key] = value
                continue
            fields = line.split(',')
            if len(fields) != 4:
                raise DatasetParseError(f'expected 4 fields, got {len(fields)}', line_no)
            try:
                merges.append(Merge(int(fields[0]), int(fields[1]), float(fields[2]), float(fields[3])))
            except ValueError as exc:
                raise DatasetParseError(str(exc), line_no) from None
    if 'n0' not in meta:
        raise DatasetParseError('missing "# n0=..." header line', 1)
    dendrogram = Dendrogram(
        merges,
        int(meta['n0']),
        meta.get('linkage', ''),
        meta.get('squared', 'false').lower() == 'true',
    )
    dendrogram.validate()
    return dendrogram
