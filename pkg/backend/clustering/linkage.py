"""
Linkages as Lance-Williams recurrences, and distance-matrix initialisation.

Every supported linkage updates the distance of a merged cluster A+B to a
third cluster C with

    d(A+B, C) = a_A d(A,C) + a_B d(B,C) + b d(A,B) + g |d(A,C) - d(B,C)|

    linkage    a_A          a_B          b              g      init
    single     1/2          1/2          0              -1/2   d
    complete   1/2          1/2          0              +1/2   d
    upgma      nA/nAB       nB/nAB       0              0      d
    wpgma      1/2          1/2          0              0      d
    upgmc      nA/nAB       nB/nAB       -nA nB/nAB^2   0      d^2
    wpgmc      1/2          1/2          -1/4           0      d^2
    ward       nAC/nABC     nBC/nABC     -nC/nABC       0      d^2

Centroid, median and Ward only make sense on squared Euclidean distances,
and their merge heights are squared too. The representation travels with the LinkageSpec
(`LinkageSpec.heights_squared`) and with every dendrogram.

In SciPy terms: `scipy.cluster.hierarchy.linkage(y, method=...)` with
'average', 'weighted', 'centroid', 'median' for the four group methods.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .cf_distances import CFDistanceKind, criterion_to_many
from .core_model import ClusterFeature, Dataset, squared_norms, stack_features
from .exceptions import InvalidInputError


class LinkageKind(str, Enum):
    SINGLE = 'single'
    COMPLETE = 'complete'
    UPGMA = 'upgma'
    WPGMA = 'wpgma'
    UPGMC = 'upgmc'
    WPGMC = 'wpgmc'
    WARD = 'ward'

    @classmethod
    def parse(cls, value) -> 'LinkageKind':
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {
            'average': cls.UPGMA,
            'weighted': cls.WPGMA,
            'mcquitty': cls.WPGMA,
            'centroid': cls.UPGMC,
            'median': cls.WPGMC,
        }
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError:
            names = ','.join(k.value for k in cls)
            raise InvalidInputError(f'unknown linkage {value!r} (expected one of {names})') from None


class InitMode(str, Enum):
    PLAIN = 'plain'
    SQUARED = 'squared'


class PrimaryDistance(str, Enum):
    """Point-to-point distance that feeds a Plain-mode matrix."""

    EUCLIDEAN = 'euclidean'
    SQEUCLIDEAN = 'sqeuclidean'


REDUCIBLE = frozenset({
    LinkageKind.SINGLE, LinkageKind.COMPLETE, LinkageKind.UPGMA, LinkageKind.WPGMA, LinkageKind.WARD,
})
WEIGHTED = frozenset({LinkageKind.WPGMA, LinkageKind.WPGMC})

# Cluster-feature criterion whose squared value reproduces the linkage.
CRITERION_FOR_LINKAGE = {
    LinkageKind.UPGMA: CFDistanceKind.D2,
    LinkageKind.WPGMA: CFDistanceKind.D2,
    LinkageKind.UPGMC: CFDistanceKind.D0,
    LinkageKind.WPGMC: CFDistanceKind.D0,
    LinkageKind.WARD: CFDistanceKind.D4,
}


def _single(n_a, n_b, n_c):
    return 0.5, 0.5, 0.0, -0.5


def _complete(n_a, n_b, n_c):
    return 0.5, 0.5, 0.0, 0.5


def _upgma(n_a, n_b, n_c):
    n_ab = n_a + n_b
    return n_a / n_ab, n_b / n_ab, 0.0, 0.0


def _wpgma(n_a, n_b, n_c):
    return 0.5, 0.5, 0.0, 0.0


def _upgmc(n_a, n_b, n_c):
    n_ab = n_a + n_b
    return n_a / n_ab, n_b / n_ab, -(n_a * n_b) / (n_ab * n_ab), 0.0


def _wpgmc(n_a, n_b, n_c):
    return 0.5, 0.5, -0.25, 0.0


def _ward(n_a, n_b, n_c):
    n_abc = n_a + n_b + n_c
    return (n_a + n_c) / n_abc, (n_b + n_c) / n_abc, -n_c / n_abc, 0.0


_COEFFICIENTS = {
    LinkageKind.SINGLE: (_single, InitMode.PLAIN),
    LinkageKind.COMPLETE: (_complete, InitMode.PLAIN),
    LinkageKind.UPGMA: (_upgma, InitMode.PLAIN),
    LinkageKind.WPGMA: (_wpgma, InitMode.PLAIN),
    LinkageKind.UPGMC: (_upgmc, InitMode.SQUARED),
    LinkageKind.WPGMC: (_wpgmc, InitMode.SQUARED),
    LinkageKind.WARD: (_ward, InitMode.SQUARED),
}


@dataclass(frozen=True)
class LinkageSpec:
    """A linkage with its coefficient function and matrix representation.

    `primary` only matters for Plain-mode linkages. Group average (and its
    weighted variant) default to squared Euclidean, the representation in
    which they coincide with the inter-cluster criterion D2^2 of cluster
    features; pass `primary='euclidean'` for the classic variant.
    """

    kind: LinkageKind
    init_mode: InitMode
    coefficients: Callable
    primary: PrimaryDistance = PrimaryDistance.EUCLIDEAN

    @classmethod
    def of(cls, kind, primary=None) -> 'LinkageSpec':
        kind = LinkageKind.parse(kind)
        coefficients, init_mode = _COEFFICIENTS[kind]
        if primary is None:
            primary = (
                PrimaryDistance.SQEUCLIDEAN
                if kind in (LinkageKind.UPGMA, LinkageKind.WPGMA)
                else PrimaryDistance.EUCLIDEAN
            )
        else:
            try:
                primary = PrimaryDistance(str(getattr(primary, 'value', primary)).lower())
            except ValueError:
                raise InvalidInputError(f'unknown primary distance {primary!r}') from None
        return cls(kind, init_mode, coefficients, primary)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def heights_squared(self) -> bool:
        return self.init_mode is InitMode.SQUARED or self.primary is PrimaryDistance.SQEUCLIDEAN

    @property
    def reducible(self) -> bool:
        return self.kind in REDUCIBLE

    @property
    def weighted(self) -> bool:
        return self.kind in WEIGHTED


def lw_update(spec: LinkageSpec, d_ac, d_bc, d_ab, n_a, n_b, n_c):
    """Distance of the merged cluster A+B to C, in the linkage's representation.

    `d_ac`, `d_bc` and `n_c` may be arrays (one entry per cluster C).
    """
    if np.any(np.asarray(n_a) <= 0) or np.any(np.asarray(n_b) <= 0) or np.any(np.asarray(n_c) <= 0):
        raise InvalidInputError('cluster sizes must be positive')
    alpha_a, alpha_b, beta, gamma = spec.coefficients(n_a, n_b, n_c)
    result = alpha_a * d_ac + alpha_b * d_bc + beta * d_ab
    if np.any(gamma != 0):
        result = result + gamma * np.abs(d_ac - d_bc)
    return result


class CondensedDistanceMatrix:
    """Upper-triangular pairwise values d(i, j), i < j, stored contiguously.

    Slot i of a size-m matrix starts as cluster i. Engines merge into the
    lower slot and deactivate the higher one; entries touching an inactive
    slot are set to +inf.
    """

    def __init__(self, values: np.ndarray, size: int):
        size = int(size)
        values = np.asarray(values, dtype=np.float64)
        if size < 2:
            raise InvalidInputError(f'a distance matrix needs at least 2 clusters, got {size}')
        if values.shape != (size * (size - 1) // 2,):
            raise InvalidInputError(
                f'condensed matrix of size {size} needs {size * (size - 1) // 2} entries, got {values.shape}'
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError('distance matrix entries must be finite')
        self.size = size
        self.values = values
        self.active = np.ones(size, dtype=bool)

    @classmethod
    def from_square(cls, square) -> 'CondensedDistanceMatrix':
        square = np.asarray(square, dtype=np.float64)
        m = square.shape[0]
        rows, cols = np.triu_indices(m, k=1)
        return cls(square[rows, cols].copy(), m)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def copy(self) -> 'CondensedDistanceMatrix':
        clone = object.__new__(CondensedDistanceMatrix)
        clone.size = self.size
        clone.values = self.values.copy()
        clone.active = self.active.copy()
        return clone

    def index(self, i: int, j: int) -> int:
        if i == j:
            raise InvalidInputError('the diagonal is not stored')
        if i > j:
            i, j = j, i
        return self.size * i - i * (i + 1) // 2 + (j - i - 1)

    def get(self, i: int, j: int) -> float:
        return float(self.values[self.index(i, j)])

    def upper_slice(self, i: int) -> slice:
        """Positions of (i, j) for all j > i; contiguous in condensed order."""
        start = self.size * i - i * (i + 1) // 2
        return slice(start, start + self.size - i - 1)

    def row_positions(self, i: int) -> np.ndarray:
        """Condensed position of (i, j) for every j; position i is a placeholder 0."""
        j = np.arange(self.size)
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        positions = self.size * lo - lo * (lo + 1) // 2 + (hi - lo - 1)
        positions[i] = 0
        return positions

    def row(self, i: int) -> np.ndarray:
        """d(i, j) for every slot j, +inf on the diagonal."""
        values = self.values[self.row_positions(i)]
        values[i] = np.inf
        return values

    def pair_of(self, position: int) -> tuple[int, int]:
        """Inverse of `index` for i < j."""
        m = self.size
        i = int((2 * m - 1 - np.sqrt((2 * m - 1) ** 2 - 8 * position)) // 2)
        while i > 0 and self.size * i - i * (i + 1) // 2 > position:
            i -= 1
        while self.size * (i + 1) - (i + 1) * (i + 2) // 2 <= position:
            i += 1
        j = position - (self.size * i - i * (i + 1) // 2) + i + 1
        return i, int(j)

    def deactivate(self, i: int):
        positions = self.row_positions(i)
        mask = np.ones(self.size, dtype=bool)
        mask[i] = False
        self.values[positions[mask]] = np.inf
        self.active[i] = False

    def to_square(self) -> np.ndarray:
        square = np.zeros((self.size, self.size))
        rows, cols = np.triu_indices(self.size, k=1)
        square[rows, cols] = self.values
        square[cols, rows] = self.values
        return square


def init_matrix_points(data: Dataset, spec: LinkageSpec) -> CondensedDistanceMatrix:
    """Pairwise matrix of raw points in the linkage's representation."""
    points = data.points if isinstance(data, Dataset) else Dataset(data).points
    n = points.shape[0]
    if n < 2:
        raise InvalidInputError(f'need at least 2 points, got {n}')
    take_root = not spec.heights_squared
    values = np.empty(n * (n - 1) // 2, dtype=np.float64)
    start = 0
    for i in range(n - 1):
        sq = squared_norms(points[i + 1:] - points[i])
        stop = start + sq.shape[0]
        values[start:stop] = np.sqrt(sq) if take_root else sq
        start = stop
    return CondensedDistanceMatrix(values, n)


def _cf_row(kind, n, mu, sse, i) -> np.ndarray:
    anchor = ClusterFeature(n[i], mu[i], sse[i])
    return criterion_to_many(kind, n[i + 1:], mu[i + 1:], sse[i + 1:], anchor)


def init_matrix_cfs(
    features: Sequence[ClusterFeature], spec: LinkageSpec
) -> tuple[CondensedDistanceMatrix, np.ndarray]:
    """Matrix and cluster sizes for clustering leaf features with a linkage.

    UPGMA/WPGMA use D2^2, UPGMC/WPGMC use D0^2, Ward uses 2 D4^2. Single and
    complete fall back to the Euclidean distance of the centres, which
    ignores the extent of each feature. With a Euclidean primary distance,
    UPGMA/WPGMA use D2 (the root mean squared pair distance). Weighted
    linkages get unit sizes.
    """
    m = len(features)
    if m < 2:
        raise InvalidInputError(f'need at least 2 cluster features, got {m}')
    n, mu, sse = stack_features(features)
    if np.any(n <= 0):
        raise InvalidInputError('cluster features must have positive weight')

    if spec.kind in (LinkageKind.UPGMA, LinkageKind.WPGMA):
        kind, factor, take_root = CFDistanceKind.D2, None, not spec.heights_squared
    elif spec.kind in (LinkageKind.UPGMC, LinkageKind.WPGMC):
        kind, factor, take_root = CFDistanceKind.D0, None, False
    elif spec.kind is LinkageKind.WARD:
        kind, factor, take_root = CFDistanceKind.D4, 2.0, False
    else:
        kind, factor, take_root = CFDistanceKind.D0, None, spec.primary is PrimaryDistance.EUCLIDEAN

    values = np.empty(m * (m - 1) // 2, dtype=np.float64)
    start = 0
    for i in range(m - 1):
        row = _cf_row(kind, n, mu, sse, i)
        if factor is not None:
            row = factor * row
        if take_root:
            row = np.sqrt(row)
        stop = start + row.shape[0]
        values[start:stop] = row
        start = stop

    sizes = np.ones(m) if spec.weighted else n.copy()
    return CondensedDistanceMatrix(values, m), sizes
