"""
Synthetic data generators and CSV dataset I/O.

Two generators mirror the scalability experiments: points drawn uniformly
from a hypercube [0, domain_scale]^dim, and an equal-size mixture of
isotropic Gaussians whose means are themselves uniform on that hypercube.

All randomness comes from numpy's Philox generator, a counter-based PRNG
(Philox-4x64 with 10 rounds) seeded through `SeedSequence`. The stream for
a given seed is fixed by the algorithm, not by the platform, so fixtures
are reproducible across machines.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .core_model import Dataset
from .exceptions import DatasetParseError, InvalidInputError

DEFAULT_DOMAIN_SCALE = 100.0
DEFAULT_CLUSTER_SIGMA = 1.0


def make_rng(seed) -> np.random.Generator:
    """Seeded Philox generator. `seed` may be an int or a sequence of ints."""
    return np.random.Generator(np.random.Philox(seed))


class GeneratorKind(str, Enum):
    UNIFORM = 'uniform'
    GAUSSIAN_MIXTURE = 'gaussian-mixture'

    @classmethod
    def parse(cls, value) -> 'GeneratorKind':
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace('_', '-')
        aliases = {'gaussian': cls.GAUSSIAN_MIXTURE, 'gaussianmixture': cls.GAUSSIAN_MIXTURE}
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError:
            raise InvalidInputError(f'unknown generator kind {value!r}') from None


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind
    n: int
    dim: int
    k_clusters: int = 1
    seed: int = 0
    domain_scale: float = DEFAULT_DOMAIN_SCALE
    cluster_sigma: float = DEFAULT_CLUSTER_SIGMA

    def __post_init__(self):
        object.__setattr__(self, 'kind', GeneratorKind.parse(self.kind))
        for name in ('n', 'dim', 'k_clusters'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidInputError(f'{name} must be an integer >= 1, got {value}')
            object.__setattr__(self, name, int(value))
        if int(self.seed) != self.seed or not 0 <= int(self.seed) < 2 ** 63:
            raise InvalidInputError(f'seed must be a non-negative 64-bit integer, got {self.seed}')
        object.__setattr__(self, 'seed', int(self.seed))
        if not (np.isfinite(self.domain_scale) and self.domain_scale > 0):
            raise InvalidInputError(f'domain_scale must be > 0, got {self.domain_scale}')
        if not (np.isfinite(self.cluster_sigma) and self.cluster_sigma > 0):
            raise InvalidInputError(f'cluster_sigma must be > 0, got {self.cluster_sigma}')

    def to_dict(self) -> dict:
        data = asdict(self)
        data['kind'] = self.kind.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> 'GeneratorSpec':
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise InvalidInputError(f'invalid generator spec: {exc}') from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'GeneratorSpec':
        return cls.from_dict(json.loads(text))


def generate(spec: GeneratorSpec) -> Dataset:
    rng = make_rng(spec.seed)
    if spec.kind is GeneratorKind.UNIFORM:
        points = rng.uniform(0.0, spec.domain_scale, size=(spec.n, spec.dim))
    else:
        means = rng.uniform(0.0, spec.domain_scale, size=(spec.k_clusters, spec.dim))
        assignment = np.arange(spec.n) % spec.k_clusters
        noise = rng.standard_normal(size=(spec.n, spec.dim))
        points = means[assignment] + spec.cluster_sigma * noise
    return Dataset(points)


def input_order(n: int, seed: int, repetition: int) -> np.ndarray:
    """Permutation used for one benchmark repetition; repetition 0 keeps the order."""
    if repetition == 0:
        return np.arange(n)
    return make_rng([seed, repetition]).permutation(n)


# -- CSV -------------------------------------------------------------------

def _parse_row(row, line_no):
    try:
        values = [float(cell) for cell in row]
    except ValueError:
        return None
    if not all(np.isfinite(values)):
        raise DatasetParseError('non-finite value', line_no)
    return values


def _is_number(cell) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path) -> Dataset:
    """Read a numeric CSV. A first row with no numeric cell is treated as a header."""
    path = Path(path)
    rows = []
    dim = None
    first = True
    try:
        handle = path.open(newline='')
    except OSError as exc:
        raise DatasetParseError(f'cannot open {path}: {exc}') from None
    with handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = _parse_row(row, line_no)
            if values is None:
                if first and not any(_is_number(cell) for cell in row):
                    first = False
                    continue
                raise DatasetParseError('non-numeric cell', line_no)
            first = False
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise DatasetParseError(f'ragged row: expected {dim} fields, got {len(values)}', line_no)
            rows.append(values)
    if not rows:
        raise DatasetParseError(f'{path} contains no data rows')
    return Dataset(np.asarray(rows, dtype=np.float64))


def write_csv(data: Dataset, path, header: bool = True) -> Path:
    """Write points with shortest round-trip float formatting."""
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        if header:
            writer.writerow([f'x{i + 1}' for i in range(data.dim)])
        for p in data.points:
            writer.writerow([repr(float(x)) for x in p])
    return path
