"""
BETULA CF-tree: memory-bounded data aggregation.

Points are inserted one by one. Each insertion descends to the closest child
on every level, then either absorbs the point into the closest leaf entry (if
the criterion stays within the absorption threshold) or opens a new leaf
entry. Nodes that overflow are split. When the number of leaf entries exceeds
the configured maximum, the tree is rebuilt from its own leaf entries with a
larger threshold, which bounds memory at the price of accuracy.

Only the leaf entries are used afterwards, as the input of hierarchical
clustering (see `hac_engines.pipeline`).

In scikit-learn the equivalent would be `Birch(threshold=..., branching_factor=...)`
followed by reading `subcluster_centers_`; here the leaves keep their full
(n, mu, sse) statistics.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .cf_distances import CFDistanceKind, DEFAULT_CRITERION, cf_distance, criterion_to_many
from .core_model import ClusterFeature, Dataset, cf_fold, cf_from_point, cf_merge, stack_features
from .datagen_io import make_rng
from .exceptions import DatasetParseError, InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_BRANCHING_FACTOR = 32
DEFAULT_MAX_LEAF_ENTRIES = 25_000
BOOTSTRAP_PAIRS = 256


@dataclass(frozen=True)
class TreeConfig:
    """Capacity and absorption parameters.

    `max_leaf_entries=None` is the fixed-threshold mode: the tree grows as
    needed and the threshold is never raised.
    """

    branching_factor: int = DEFAULT_BRANCHING_FACTOR
    max_leaf_entries: int | None = DEFAULT_MAX_LEAF_ENTRIES
    criterion: CFDistanceKind = DEFAULT_CRITERION
    initial_threshold: float = 0.0
    bootstrap_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'criterion', CFDistanceKind.parse(self.criterion))
        if int(self.branching_factor) != self.branching_factor or self.branching_factor < 2:
            raise InvalidInputError(f'branching_factor must be an integer >= 2, got {self.branching_factor}')
        if self.max_leaf_entries is not None and (
            int(self.max_leaf_entries) != self.max_leaf_entries or self.max_leaf_entries < 1
        ):
            raise InvalidInputError(f'max_leaf_entries must be an integer >= 1, got {self.max_leaf_entries}')
        threshold = float(self.initial_threshold)
        if np.isnan(threshold) or threshold < 0:
            raise InvalidInputError(f'initial_threshold must be >= 0, got {self.initial_threshold}')
        object.__setattr__(self, 'initial_threshold', threshold)

    @classmethod
    def from_mapping(cls, mapping: Mapping, **overrides) -> 'TreeConfig':
        """Build from a settings-style mapping (upper-case keys), then apply overrides."""
        values = {
            'branching_factor': mapping.get('BRANCHING_FACTOR', DEFAULT_BRANCHING_FACTOR),
            'max_leaf_entries': mapping.get('MAX_LEAF_ENTRIES', DEFAULT_MAX_LEAF_ENTRIES),
            'criterion': mapping.get('TREE_CRITERION', DEFAULT_CRITERION),
            'initial_threshold': mapping.get('INITIAL_THRESHOLD', 0.0),
            'bootstrap_seed': mapping.get('BOOTSTRAP_SEED', 0),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return {
            'branching_factor': self.branching_factor,
            'max_leaf_entries': self.max_leaf_entries,
            'criterion': self.criterion.value,
            'initial_threshold': self.initial_threshold,
            'bootstrap_seed': self.bootstrap_seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'TreeConfig':
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise InvalidInputError(f'invalid tree config: {exc}') from None


class _Node:
    """A tree node. Leaves hold entry features, inner nodes hold child nodes.

    Leaf entries carry a creation sequence number so that `leaves()` can
    return them in insertion-stable order.
    """

    __slots__ = ('is_leaf', 'items', 'seqs', 'cf')

    def __init__(self, is_leaf: bool, items: list, cf: ClusterFeature, seqs: list | None = None):
        self.is_leaf = is_leaf
        self.items = items
        self.seqs = seqs if seqs is not None else []
        self.cf = cf

    def summaries(self) -> list[ClusterFeature]:
        return self.items if self.is_leaf else [child.cf for child in self.items]


@dataclass(frozen=True)
class TreeStats:
    height: int
    nodes: int
    leaf_entries: int
    rebuilds: int
    threshold: float
    total_weight: float


class CFTree:
    """Height-balanced tree of cluster features."""

    def __init__(self, config: TreeConfig | None = None):
        self.config = config or TreeConfig()
        self.threshold = self.config.initial_threshold
        self.rebuilds = 0
        self._root: _Node | None = None
        self._dim: int | None = None
        self._leaf_entries = 0
        self._next_seq = 0

    @property
    def dim(self) -> int | None:
        return self._dim

    @property
    def leaf_entries(self) -> int:
        return self._leaf_entries

    @property
    def root_cf(self) -> ClusterFeature | None:
        return self._root.cf if self._root is not None else None

    def __len__(self) -> int:
        return self._leaf_entries

    # -- insertion ---------------------------------------------------------

    def insert(self, p) -> 'CFTree':
        """Insert one point. The tree is left unchanged if the point is invalid."""
        cf = cf_from_point(p)
        self.insert_cf(cf)
        return self

    def insert_cf(self, cf: ClusterFeature) -> 'CFTree':
        """Insert an already aggregated feature, routed like a point."""
        if cf.n <= 0:
            raise InvalidInputError('cannot insert a cluster feature with zero weight')
        if self._dim is not None and cf.dim != self._dim:
            raise InvalidInputError(f'dimension mismatch: tree has dim {self._dim}, point has {cf.dim}')
        self._insert_unbounded(cf)
        self._enforce_capacity()
        return self

    def _insert_unbounded(self, cf: ClusterFeature):
        if self._root is None:
            self._dim = cf.dim
            self._root = _Node(True, [cf], cf, [self._take_seq()])
            self._leaf_entries = 1
            return
        split = self._insert_into(self._root, cf)
        if split is not None:
            left, right = split
            self._root = _Node(False, [left, right], cf_merge(left.cf, right.cf))

    def _take_seq(self) -> int:
        seq = self._next_seq
        self._next_seq += 1
        return seq

    def _nearest(self, node: _Node, cf: ClusterFeature) -> tuple[int, float]:
        n, mu, sse = stack_features(node.summaries())
        values = criterion_to_many(self.config.criterion, n, mu, sse, cf)
        index = int(np.argmin(values))  # first minimum: ties go to the lowest index
        return index, float(values[index])

    def _absorbs(self, squared_value: float) -> bool:
        return squared_value <= self.threshold * self.threshold

    def _insert_into(self, node: _Node, cf: ClusterFeature):
        index, value = self._nearest(node, cf)
        if node.is_leaf:
            if self._absorbs(value):
                node.items[index] = cf_merge(node.items[index], cf)
            else:
                node.items.append(cf)
                node.seqs.append(self._take_seq())
                self._leaf_entries += 1
        else:
            split = self._insert_into(node.items[index], cf)
            if split is not None:
                node.items[index:index + 1] = list(split)
        node.cf = cf_merge(node.cf, cf)
        if len(node.items) > self.config.branching_factor:
            return self._split(node)
        return None

    def _split(self, node: _Node) -> tuple[_Node, _Node]:
        """Farthest-pair split: seed with the two most distant items."""
        summaries = node.summaries()
        n, mu, sse = stack_features(summaries)
        count = len(summaries)
        best, seed_a, seed_b = -1.0, 0, 1
        rows = []
        for i in range(count):
            row = criterion_to_many(self.config.criterion, n, mu, sse, summaries[i])
            rows.append(row)
            for j in range(i + 1, count):
                if row[j] > best:
                    best, seed_a, seed_b = float(row[j]), i, j

        groups = ([], [])
        for i in range(count):
            if i == seed_a:
                groups[0].append(i)
            elif i == seed_b:
                groups[1].append(i)
            elif rows[seed_b][i] < rows[seed_a][i]:
                groups[1].append(i)
            else:
                groups[0].append(i)

        halves = []
        for members in groups:
            items = [node.items[i] for i in members]
            seqs = [node.seqs[i] for i in members] if node.is_leaf else None
            cf = cf_fold(summaries[i] for i in members)
            halves.append(_Node(node.is_leaf, items, cf, seqs))
        return halves[0], halves[1]

    # -- rebuilding --------------------------------------------------------

    def _enforce_capacity(self):
        cap = self.config.max_leaf_entries
        while cap is not None and self._leaf_entries > cap:
            self.rebuild(self._next_threshold())

    def _next_threshold(self) -> float:
        if self.threshold > 0:
            return 2.0 * self.threshold
        return self._bootstrap_threshold()

    def _bootstrap_threshold(self) -> float:
        """Median criterion over random leaf pairs, used to leave threshold 0."""
        leaves = self.leaves()
        rng = make_rng(self.config.bootstrap_seed)
        first = rng.integers(0, len(leaves), size=BOOTSTRAP_PAIRS)
        second = rng.integers(0, len(leaves), size=BOOTSTRAP_PAIRS)
        values = [
            cf_distance(self.config.criterion, leaves[i], leaves[j])
            for i, j in zip(first.tolist(), second.tolist())
            if i != j
        ]
        positive = [v for v in values if v > 0]
        if not positive:
            # sampled only coincident pairs; fall back to a full scan of neighbours
            positive = [
                v for v in (cf_distance(self.config.criterion, a, b) for a, b in zip(leaves, leaves[1:]))
                if v > 0
            ]
        if not positive:
            return float('inf')
        median = float(np.median(values))
        return median if median > 0 else min(positive)

    def rebuild(self, new_threshold: float) -> 'CFTree':
        """Re-insert all leaf entries into a fresh tree with a larger threshold."""
        new_threshold = float(new_threshold)
        if not new_threshold > self.threshold:
            raise InvalidInputError(
                f'rebuild threshold must increase: {new_threshold} <= {self.threshold}'
            )
        old_leaves = self.leaves()
        before = len(old_leaves)
        self._root = None
        self._leaf_entries = 0
        self._next_seq = 0
        self.threshold = new_threshold
        for cf in old_leaves:
            self._insert_unbounded(cf)
        self.rebuilds += 1
        logger.info(
            'CF-tree rebuilt with threshold %.6g: %d -> %d leaf entries',
            new_threshold, before, self._leaf_entries,
        )
        return self

    # -- reading -----------------------------------------------------------

    def _leaf_nodes(self) -> Iterator[_Node]:
        if self._root is None:
            return
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(reversed(node.items))

    def leaves(self) -> list[ClusterFeature]:
        """Leaf entries in the order they were created (insertion-stable)."""
        pairs = [(seq, cf) for node in self._leaf_nodes() for seq, cf in zip(node.seqs, node.items)]
        pairs.sort(key=lambda pair: pair[0])
        return [cf for _, cf in pairs]

    def assign_points(self, data: Dataset) -> np.ndarray:
        """Index into `leaves()` of the entry each point routes to."""
        if self._root is None:
            raise InvalidInputError('cannot assign points with an empty tree')
        if data.dim != self._dim:
            raise InvalidInputError(f'dimension mismatch: tree has dim {self._dim}, data has {data.dim}')
        seqs = sorted(seq for node in self._leaf_nodes() for seq in node.seqs)
        rank = {seq: i for i, seq in enumerate(seqs)}

        labels = np.empty(len(data), dtype=np.int64)
        for row, p in enumerate(data.points):
            cf = cf_from_point(p)
            node = self._root
            while not node.is_leaf:
                index, _ = self._nearest(node, cf)
                node = node.items[index]
            index, _ = self._nearest(node, cf)
            labels[row] = rank[node.seqs[index]]
        return labels

    def inner_consistency_error(self) -> float:
        """Largest relative deviation between a node CF and the fold of its children."""
        worst = 0.0
        if self._root is None:
            return worst
        stack = [self._root]
        while stack:
            node = stack.pop()
            folded = cf_fold(node.summaries())
            scale_mu = max(1.0, float(np.max(np.abs(folded.mu))))
            worst = max(
                worst,
                abs(node.cf.n - folded.n) / max(folded.n, 1.0),
                float(np.max(np.abs(node.cf.mu - folded.mu))) / scale_mu,
                abs(node.cf.sse - folded.sse) / max(folded.sse, 1.0),
            )
            if not node.is_leaf:
                stack.extend(node.items)
        return worst

    def stats(self) -> TreeStats:
        height = 0
        nodes = 0
        if self._root is not None:
            level = [self._root]
            while level:
                height += 1
                nodes += len(level)
                level = [child for node in level if not node.is_leaf for child in node.items]
        return TreeStats(
            height=height,
            nodes=nodes,
            leaf_entries=self._leaf_entries,
            rebuilds=self.rebuilds,
            threshold=self.threshold,
            total_weight=self._root.cf.n if self._root is not None else 0.0,
        )


def build(data: Dataset, config: TreeConfig | None = None) -> CFTree:
    """Build a tree by inserting every point in dataset order."""
    if len(data) == 0:
        raise InvalidInputError('cannot build a CF-tree from an empty dataset')
    tree = CFTree(config)
    for p in data.points:
        tree.insert_cf(ClusterFeature(1.0, p, 0.0))
    logger.debug('CF-tree built: %s', tree.stats())
    return tree


def rebuild(tree: CFTree, new_threshold: float) -> CFTree:
    return tree.rebuild(new_threshold)


def insert(tree: CFTree, p) -> CFTree:
    return tree.insert(p)


def leaves(tree: CFTree) -> list[ClusterFeature]:
    return tree.leaves()


def with_threshold(config: TreeConfig, threshold: float) -> TreeConfig:
    return replace(config, initial_threshold=threshold)


# -- leaf dump -------------------------------------------------------------

def write_leaves_csv(features: Sequence[ClusterFeature], path) -> Path:
    """One row per leaf entry: n, mu_1..mu_d, sse."""
    path = Path(path)
    if not features:
        raise InvalidInputError('no leaf entries to write')
    dim = features[0].dim
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['n'] + [f'mu_{i + 1}' for i in range(dim)] + ['sse'])
        for cf in features:
            writer.writerow([repr(cf.n)] + [repr(float(x)) for x in cf.mu] + [repr(cf.sse)])
    return path


def read_leaves_csv(path) -> list[ClusterFeature]:
    path = Path(path)
    features = []
    width = None
    with path.open(newline='') as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if line_no == 1 and row[0].strip() == 'n':
                continue
            if width is None:
                width = len(row)
                if width < 3:
                    raise DatasetParseError('a leaf row needs n, at least one mean coordinate and sse', line_no)
            if len(row) != width:
                raise DatasetParseError(f'expected {width} fields, got {len(row)}', line_no)
            try:
                values = [float(cell) for cell in row]
                features.append(ClusterFeature(values[0], np.array(values[1:-1]), values[-1]))
            except (ValueError, InvalidInputError) as exc:
                raise DatasetParseError(str(exc), line_no) from None
    if not features:
        raise DatasetParseError('no leaf entries found')
    return features
