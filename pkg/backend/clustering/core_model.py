"""
Vectors, datasets and BETULA cluster features.

A cluster feature summarises a set of points by the triple (n, mu, sse):
the aggregated weight, the mean vector and the sum of squared deviations
from the mean (summed over dimensions). Two features combine without
touching the underlying points:

    n_AB   = n_A + n_B
    mu_AB  = mu_A + (n_B / n_AB) * (mu_B - mu_A)
    sse_AB = sse_A + sse_B + n_B * <mu_B - mu_A, mu_B - mu_AB>

This is the numerically stable update (a pairwise Welford step). The old
BIRCH representation (linear sum, square sum) loses almost all precision
when the data sits far from the origin; this one does not.

In scikit-learn, the closest thing is the `_CFSubcluster` of `Birch`, which
still stores linear and squared sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidInputError

# Cancellation can leave sse a hair below zero; anything within this
# (scaled) band is treated as exact zero.
SSE_CLAMP_TOLERANCE = 1e-9


def squared_norms(diff: np.ndarray) -> np.ndarray:
    """Row-wise squared Euclidean norms (sum over the last axis).

    Every squared distance in the package goes through this function, so
    the same inputs always give bit-identical results regardless of the
    module asking.
    """
    return np.einsum('...i,...i->...', diff, diff)


def as_vector(p) -> np.ndarray:
    """Validate and convert a point to a finite 1-D float64 array."""
    vec = np.array(p, dtype=np.float64, copy=True)
    if vec.ndim != 1 or vec.shape[0] == 0:
        raise InvalidInputError(f'expected a non-empty 1-D vector, got shape {vec.shape}')
    if not np.all(np.isfinite(vec)):
        raise InvalidInputError('vector has non-finite coordinates')
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True)
class Dataset:
    """An (N, dim) block of finite points. Ids are the row indices."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] == 0:
            raise InvalidInputError(f'dataset must be a 2-D array with dim > 0, got shape {pts.shape}')
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError('dataset contains non-finite coordinates')
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> 'Dataset':
        return cls(np.asarray(list(rows), dtype=np.float64))

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __iter__(self):
        return iter(self.points)

    def permuted(self, order: np.ndarray) -> 'Dataset':
        """Same points in a different input order."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(len(self))):
            raise InvalidInputError('order must be a permutation of the point ids')
        return Dataset(self.points[order])


@dataclass(frozen=True, eq=False)
class ClusterFeature:
    """The (n, mu, sse) triple. Instances are immutable."""

    n: float
    mu: np.ndarray
    sse: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64, copy=True)
        if mu.ndim != 1 or mu.shape[0] == 0:
            raise InvalidInputError('cluster feature mean must be a non-empty 1-D vector')
        n = float(self.n)
        sse = float(self.sse)
        if not (np.isfinite(n) and n >= 0):
            raise InvalidInputError(f'cluster feature weight must be finite and >= 0, got {n}')
        if not np.all(np.isfinite(mu)) or not np.isfinite(sse):
            raise InvalidInputError('cluster feature has non-finite statistics')
        if sse < 0:
            raise InvalidInputError(f'cluster feature sse must be >= 0, got {sse}')
        mu.setflags(write=False)
        object.__setattr__(self, 'n', n)
        object.__setattr__(self, 'mu', mu)
        object.__setattr__(self, 'sse', sse)

    @classmethod
    def zero(cls, dim: int) -> 'ClusterFeature':
        return cls(0.0, np.zeros(dim), 0.0)

    @property
    def dim(self) -> int:
        return int(self.mu.shape[0])

    def isclose(self, other: 'ClusterFeature', rtol: float = 1e-9, atol: float = 0.0) -> bool:
        return (
            self.dim == other.dim
            and bool(np.isclose(self.n, other.n, rtol=rtol, atol=atol))
            and bool(np.allclose(self.mu, other.mu, rtol=rtol, atol=atol))
            and bool(np.isclose(self.sse, other.sse, rtol=rtol, atol=max(atol, 1e-12)))
        )

    def __repr__(self):
        return f'ClusterFeature(n={self.n!r}, mu={self.mu.tolist()!r}, sse={self.sse!r})'


def cf_from_point(p) -> ClusterFeature:
    """A single point is the feature (1, p, 0)."""
    return ClusterFeature(1.0, as_vector(p), 0.0)


def _check_same_dim(a: ClusterFeature, b: ClusterFeature):
    if a.dim != b.dim:
        raise InvalidInputError(f'dimension mismatch: {a.dim} != {b.dim}')


def cf_merge(a: ClusterFeature, b: ClusterFeature) -> ClusterFeature:
    """Combine two cluster features; neither input is modified.

    A zero-weight feature is the identity element. Merging two zero-weight
    features yields a zero feature carrying A's mean.
    """
    _check_same_dim(a, b)
    if b.n == 0:
        return a if a.n > 0 else ClusterFeature(0.0, a.mu, 0.0)
    if a.n == 0:
        return b

    n_ab = a.n + b.n
    delta = b.mu - a.mu
    mu_ab = a.mu + (b.n / n_ab) * delta
    sse_ab = a.sse + b.sse + b.n * float(np.dot(delta, b.mu - mu_ab))
    if sse_ab < 0:
        scale = 1.0 + n_ab * float(np.dot(mu_ab, mu_ab))
        if -sse_ab <= SSE_CLAMP_TOLERANCE * scale:
            sse_ab = 0.0
    return ClusterFeature(n_ab, mu_ab, sse_ab)


def cf_fold(features: Iterable[ClusterFeature], dim: int | None = None) -> ClusterFeature:
    """Left fold of cf_merge over a sequence of features."""
    acc = None
    for cf in features:
        acc = cf if acc is None else cf_merge(acc, cf)
    if acc is None:
        if dim is None:
            raise InvalidInputError('cannot fold an empty sequence without a dimension')
        return ClusterFeature.zero(dim)
    return acc


def cf_from_points(points) -> ClusterFeature:
    """Fold a block of points into one feature, one point at a time."""
    data = points if isinstance(points, Dataset) else Dataset(points)
    return cf_fold((cf_from_point(p) for p in data.points), dim=data.dim)


def cf_centroid_sq_dist(a: ClusterFeature, b: ClusterFeature) -> float:
    """Squared Euclidean distance of the two means."""
    _check_same_dim(a, b)
    return float(squared_norms(a.mu - b.mu))


def stack_features(features: Sequence[ClusterFeature]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column arrays (n, mu, sse) for vectorised criterion evaluation."""
    if len(features) == 0:
        raise InvalidInputError('no cluster features to stack')
    n = np.fromiter((cf.n for cf in features), dtype=np.float64, count=len(features))
    sse = np.fromiter((cf.sse for cf in features), dtype=np.float64, count=len(features))
    mu = np.vstack([cf.mu for cf in features])
    return n, mu, sse
