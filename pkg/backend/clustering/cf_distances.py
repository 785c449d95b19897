"""
Distance and absorption criteria between cluster features.

BIRCH defines separate "distance functions" (to pick a subtree) and
"absorption criteria" (to decide whether to merge into a leaf entry). We use
one criterion for both. All six are evaluated from the (n, mu, sse) summary
statistics only:

    D0^2 = |mu_A - mu_B|^2                              centroid Euclidean
    D1   = |mu_A - mu_B|_1                              centroid Manhattan
    D2^2 = sse_A/n_A + sse_B/n_B + |mu_A - mu_B|^2       inter-cluster
    D3^2 = 2 (sse_A + sse_B + w |mu_A - mu_B|^2) / (n_AB - 1)   intra-cluster
    D4^2 = w |mu_A - mu_B|^2                            variance increase
    R^2  = (sse_A + sse_B + w |mu_A - mu_B|^2) / n_AB    radius

with w = n_A n_B / n_AB. The identities follow from expanding the pairwise
sums about the means (Koenig-Huygens).
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .core_model import ClusterFeature, squared_norms
from .exceptions import InvalidInputError, UndefinedCriterionError


class CFDistanceKind(str, Enum):
    D0 = 'D0'
    D1 = 'D1'
    D2 = 'D2'
    D3 = 'D3'
    D4 = 'D4'
    R = 'R'

    @classmethod
    def parse(cls, value) -> 'CFDistanceKind':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            names = ','.join(k.value for k in cls)
            raise InvalidInputError(f'unknown criterion {value!r} (expected one of {names})') from None

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    CFDistanceKind.D0: 'centroid Euclidean distance',
    CFDistanceKind.D1: 'centroid Manhattan distance',
    CFDistanceKind.D2: 'inter-cluster distance',
    CFDistanceKind.D3: 'intra-cluster distance (diameter)',
    CFDistanceKind.D4: 'variance-increase distance',
    CFDistanceKind.R: 'radius',
}

DEFAULT_CRITERION = CFDistanceKind.R


def criterion_squared_many(kind, n_a, mu_a, sse_a, n_b, mu_b, sse_b) -> np.ndarray:
    """Squared criterion between features given as column arrays.

    Either side may be a batch: `mu_a` of shape (m, d) against a single
    `mu_b` of shape (d,), or the other way around. D1 returns its square.
    """
    kind = CFDistanceKind.parse(kind)
    n_a = np.asarray(n_a, dtype=np.float64)
    n_b = np.asarray(n_b, dtype=np.float64)
    if np.any(n_a <= 0) or np.any(n_b <= 0):
        raise InvalidInputError('criterion requires cluster features with positive weight')
    mu_a = np.asarray(mu_a, dtype=np.float64)
    mu_b = np.asarray(mu_b, dtype=np.float64)
    if mu_a.shape[-1] != mu_b.shape[-1]:
        raise InvalidInputError(f'dimension mismatch: {mu_a.shape[-1]} != {mu_b.shape[-1]}')

    delta = mu_a - mu_b
    if kind is CFDistanceKind.D1:
        manhattan = np.sum(np.abs(delta), axis=-1)
        return manhattan * manhattan

    sq = squared_norms(delta)
    if kind is CFDistanceKind.D0:
        return sq
    if kind is CFDistanceKind.D2:
        return sse_a / n_a + sse_b / n_b + sq

    n_ab = n_a + n_b
    spread = (n_a * n_b / n_ab) * sq
    if kind is CFDistanceKind.D4:
        return spread
    if kind is CFDistanceKind.R:
        return (sse_a + sse_b + spread) / n_ab
    # D3
    if np.any(n_ab <= 1):
        raise UndefinedCriterionError('D3 is undefined for a combined weight <= 1')
    return 2.0 * (sse_a + sse_b + spread) / (n_ab - 1.0)


def _check_pair(a: ClusterFeature, b: ClusterFeature):
    if a.dim != b.dim:
        raise InvalidInputError(f'dimension mismatch: {a.dim} != {b.dim}')


def cf_distance_squared(kind, a: ClusterFeature, b: ClusterFeature) -> float:
    """Squared criterion value between two features (D1 returns D1^2)."""
    _check_pair(a, b)
    value = criterion_squared_many(kind, a.n, a.mu, a.sse, b.n, b.mu, b.sse)
    return max(float(value), 0.0)


def cf_distance(kind, a: ClusterFeature, b: ClusterFeature) -> float:
    """Criterion value between two features, in length units."""
    kind = CFDistanceKind.parse(kind)
    _check_pair(a, b)
    if kind is CFDistanceKind.D1:
        if a.n <= 0 or b.n <= 0:
            raise InvalidInputError('criterion requires cluster features with positive weight')
        return float(np.sum(np.abs(a.mu - b.mu)))
    return float(np.sqrt(cf_distance_squared(kind, a, b)))


def criterion_to_many(kind, n, mu, sse, other: ClusterFeature) -> np.ndarray:
    """Squared criterion from each stacked feature to `other` (batch on side A)."""
    values = criterion_squared_many(kind, n, mu, sse, other.n, other.mu, other.sse)
    return np.maximum(values, 0.0)
