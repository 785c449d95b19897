"""
Flat clusterings from dendrograms, and their root mean squared deviation.

`rmsd` accepts raw points or cluster features. For features the within-
feature sse is added to the between-feature spread, so a clustering of
aggregated leaves is scored on the same scale as one of the raw points.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core_model import ClusterFeature, Dataset, squared_norms, stack_features
from .exceptions import DatasetParseError, InvalidInputError
from .hac_engines import Dendrogram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlatClustering:
    labels: np.ndarray
    k: int

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def expand(self, assignment: np.ndarray) -> 'FlatClustering':
        """Labels for items routed to these clusters (e.g. points to leaf entries)."""
        assignment = np.asarray(assignment, dtype=np.int64)
        if assignment.size and (assignment.min() < 0 or assignment.max() >= len(self)):
            raise InvalidInputError('assignment refers to items outside the clustering')
        labels = self.labels[assignment]
        return FlatClustering(labels, int(np.unique(labels).shape[0]))


def _components(n0: int, merges) -> np.ndarray:
    """Labels 0..k-1 in order of first appearance, from a prefix of merges."""
    parent = np.arange(2 * n0 - 1)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for k, merge in enumerate(merges):
        new_id = n0 + k
        parent[find(merge.left)] = new_id
        parent[find(merge.right)] = new_id

    roots = np.array([find(i) for i in range(n0)])
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # renumber so that label order follows the first item of each cluster
    order = np.argsort(np.argsort(first))
    return order[inverse].astype(np.int64)


def cut(dendrogram: Dendrogram, k: int) -> FlatClustering:
    """Undo the last k-1 merges."""
    n0 = dendrogram.n0
    if int(k) != k or not 1 <= k <= n0:
        raise InvalidInputError(f'k must be an integer in [1, {n0}], got {k}')
    k = int(k)
    labels = _components(n0, dendrogram.merges[:n0 - k])
    return FlatClustering(labels, k)


def cut_at_height(dendrogram: Dendrogram, height: float) -> FlatClustering:
    """Clusters formed by all merges at or below `height`."""
    inversions = dendrogram.inversions()
    if inversions:
        raise InvalidInputError(
            f'cannot cut a non-monotone dendrogram by height (first inversion at merge {inversions[0]})'
        )
    heights = dendrogram.heights()
    applied = int(np.searchsorted(heights, height, side='right'))
    labels = _components(dendrogram.n0, dendrogram.merges[:applied])
    return FlatClustering(labels, dendrogram.n0 - applied)


def _as_stats(items, weights):
    if isinstance(items, Dataset):
        points = items.points
    elif len(items) and isinstance(items[0], ClusterFeature):
        n, mu, sse = stack_features(items)
        if weights is not None:
            raise InvalidInputError('cluster features carry their own weights')
        return n, mu, sse
    else:
        points = Dataset(np.asarray(items, dtype=np.float64)).points
    m = points.shape[0]
    if weights is None:
        n = np.ones(m)
    else:
        n = np.asarray(weights, dtype=np.float64)
        if n.shape != (m,):
            raise InvalidInputError(f'expected {m} weights, got {n.shape[0] if n.ndim else 1}')
        if np.any(n <= 0) or not np.all(np.isfinite(n)):
            raise InvalidInputError('weights must be positive and finite')
    return n, points, np.zeros(m)


def rmsd(items, labels, weights=None) -> float:
    """Root mean squared deviation of items from their cluster means.

    `items` is a Dataset, an (m, d) array or a sequence of ClusterFeature.
    Two passes: cluster means first, then deviations from them.
    """
    if isinstance(labels, FlatClustering):
        labels = labels.labels
    labels = np.asarray(labels)
    n, mu, sse = _as_stats(items, weights)
    if labels.shape != (n.shape[0],):
        raise InvalidInputError(f'expected {n.shape[0]} labels, got {labels.shape[0] if labels.ndim else 1}')
    _, labels = np.unique(labels, return_inverse=True)
    k = int(labels.max()) + 1 if labels.size else 0

    totals = np.bincount(labels, weights=n, minlength=k)
    sums = np.zeros((k, mu.shape[1]))
    np.add.at(sums, labels, n[:, None] * mu)
    means = sums / totals[:, None]

    spread = n * squared_norms(mu - means[labels])
    total = float(np.sum(sse) + np.sum(spread))
    return float(np.sqrt(max(total, 0.0) / np.sum(n)))


def rmsd_by_k(dendrogram: Dendrogram, items, ks: Iterable[int]) -> dict[int, float]:
    """RMSD for several cuts of one dendrogram; logs when a finer cut scores worse."""
    scores = {}
    previous = None
    for k in sorted(set(int(k) for k in ks)):
        scores[k] = rmsd(items, cut(dendrogram, k))
        if previous is not None and scores[k] > scores[previous] * (1 + 1e-12):
            logger.warning(
                'RMSD increased from k=%d (%.6g) to k=%d (%.6g)',
                previous, scores[previous], k, scores[k],
            )
        previous = k
    return scores


# -- labels file -------------------------------------------------------------

def write_labels_csv(labels, path) -> Path:
    if isinstance(labels, FlatClustering):
        labels = labels.labels
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['item_id', 'label'])
        for item_id, label in enumerate(labels):
            writer.writerow([item_id, int(label)])
    return path


def read_labels_csv(path) -> np.ndarray:
    path = Path(path)
    rows: dict[int, int] = {}
    with path.open(newline='') as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            if line_no == 1 and row[0].strip() == 'item_id':
                continue
            if len(row) != 2:
                raise DatasetParseError(f'expected item_id,label, got {len(row)} fields', line_no)
            try:
                item_id, label = int(row[0]), int(row[1])
            except ValueError:
                raise DatasetParseError('non-integer item_id or label', line_no) from None
            if item_id in rows:
                raise DatasetParseError(f'duplicate item_id {item_id}', line_no)
            rows[item_id] = label
    if sorted(rows) != list(range(len(rows))):
        raise DatasetParseError('item ids must cover 0..m-1')
    return np.array([rows[i] for i in range(len(rows))], dtype=np.int64)

