"""Generalized Faure low-discrepancy sequences with random access by index.

Coordinate 0 of the sequence is the base-``b`` van der Corput radical
inverse of the point index; coordinate ``j`` applies the ``j``-th power of
the upper-triangular Pascal matrix (mod ``b``) to the index digits before
radical inversion.  With ``b`` prime and ``b >= s`` this is a
(0, s)-sequence in base ``b``: every block of ``b^m`` consecutive points
starting at a multiple of ``b^m`` is a (0, m, s)-net.

All digit arithmetic is exact integer arithmetic mod ``b``; digits are only
converted to floats once, at the end.  Points are pure functions of
(config, index), so any index range can be generated independently by any
worker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Enough digits to address indices below 2**40 in any supported base.
MAX_INDEX_BITS = 40
MAX_INDEX = 1 << MAX_INDEX_BITS


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def smallest_prime_geq(n: int) -> int:
    """Smallest prime >= n (the default Faure base for dimension n)."""
    p = max(n, 2)
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True)
class SequenceConfig:
    """Configuration of one generalized Faure stream.

    ``base`` must be a prime >= ``dimension``; ``None`` selects the smallest
    such prime.  ``scrambling`` is either ``"none"`` or ``"permute"``
    (deterministic per-coordinate, per-digit permutations of {1..b-1},
    seeded by ``scramble_seed``; digit 0 is kept fixed so index 0 always
    maps to the origin).  ``skip`` discards that many initial indices.
    ``coordinate_subset`` extracts the listed coordinates from the
    underlying ``dimension``-dimensional stream, which is how a
    lower-dimensional integration domain reuses a higher-dimensional
    point set.
    """

    dimension: int
    base: int | None = None
    scrambling: str = "none"
    scramble_seed: int = 0
    skip: int = 0
    coordinate_subset: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.base is None:
            object.__setattr__(self, "base", smallest_prime_geq(self.dimension))
        if not is_prime(self.base) or self.base < self.dimension:
            raise ValueError(
                f"base must be a prime >= dimension, got base={self.base} "
                f"for dimension={self.dimension}"
            )
        if self.scrambling not in ("none", "permute"):
            raise ValueError(f"unknown scrambling mode {self.scrambling!r}")
        if self.skip < 0:
            raise ValueError("skip must be >= 0")
        if self.coordinate_subset is not None:
            subset = tuple(int(c) for c in self.coordinate_subset)
            if len(set(subset)) != len(subset):
                raise ValueError("coordinate_subset entries must be distinct")
            if any(c < 0 or c >= self.dimension for c in subset):
                raise ValueError("coordinate_subset entries must be < dimension")
            object.__setattr__(self, "coordinate_subset", subset)

    @property
    def output_dimension(self) -> int:
        if self.coordinate_subset is not None:
            return len(self.coordinate_subset)
        return self.dimension

    def _key(self):
        return (self.dimension, self.base, self.scrambling, self.scramble_seed)


def _n_digits(base: int) -> int:
    """Digit count covering all indices below MAX_INDEX."""
    n = 1
    while base**n < MAX_INDEX:
        n += 1
    return n


@lru_cache(maxsize=32)
def _generator_matrices(dimension: int, base: int) -> np.ndarray:
    """Pascal-power digit transform matrices, one (D, D) matrix per coordinate.

    C_j = P^j mod base with P[i, k] = binom(k, i); C_0 is the identity
    (plain van der Corput).
    """
    ndig = _n_digits(base)
    pascal = np.zeros((ndig, ndig), dtype=np.int64)
    for k in range(ndig):
        pascal[0, k] = 1
        for i in range(1, k + 1):
            pascal[i, k] = (pascal[i - 1, k - 1] + pascal[i, k - 1]) % base
    mats = np.empty((dimension, ndig, ndig), dtype=np.int64)
    mats[0] = np.eye(ndig, dtype=np.int64)
    for j in range(1, dimension):
        mats[j] = (mats[j - 1] @ pascal) % base
    return mats


@lru_cache(maxsize=32)
def _scramble_tables(dimension: int, base: int, seed: int) -> np.ndarray:
    """Per (coordinate, digit position) permutations of {0..b-1} fixing 0."""
    ndig = _n_digits(base)
    tables = np.empty((dimension, ndig, base), dtype=np.int64)
    for j in range(dimension):
        for pos in range(ndig):
            rng = np.random.default_rng((seed, j, pos))
            tables[j, pos, 0] = 0
            tables[j, pos, 1:] = 1 + rng.permutation(base - 1)
    return tables


def _digits(indices: np.ndarray, base: int, ndig: int) -> np.ndarray:
    """Base-b digits, least significant first, shape (n, ndig)."""
    out = np.empty((indices.size, ndig), dtype=np.int64)
    rem = indices.astype(np.int64)
    for pos in range(ndig):
        rem, out[:, pos] = np.divmod(rem, base)
    if np.any(rem):
        raise ValueError(f"index out of addressable range (< 2**{MAX_INDEX_BITS})")
    return out


def points_block(config: SequenceConfig, indices: np.ndarray) -> np.ndarray:
    """Faure points for an arbitrary array of indices, shape (n, out_dim)."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and indices.min() < 0:
        raise ValueError("indices must be >= 0")
    b = config.base
    ndig = _n_digits(b)
    mats = _generator_matrices(config.dimension, b)
    coords = (
        range(config.dimension)
        if config.coordinate_subset is None
        else config.coordinate_subset
    )
    if config.scrambling == "permute":
        tables = _scramble_tables(config.dimension, b, config.scramble_seed)
    else:
        tables = None
    digs = _digits(indices + config.skip, b, ndig)
    out = np.empty((indices.size, len(coords)), dtype=np.float64)
    for col, j in enumerate(coords):
        e = (digs @ mats[j].T) % b
        if tables is not None:
            for pos in range(ndig):
                e[:, pos] = tables[j, pos, e[:, pos]]
        # Horner evaluation in a fixed scalar order: the result is
        # bit-identical however the indices are batched (a BLAS dot would
        # reorder the accumulation with the batch shape).
        acc = np.zeros(indices.size)
        for pos in reversed(range(ndig)):
            acc += e[:, pos]
            acc /= b
        out[:, col] = acc
    return out


def faure_point(config: SequenceConfig, index: int) -> np.ndarray:
    """The index-th point of the stream (after ``skip``), in [0, 1)^out_dim."""
    if index < 0:
        raise ValueError("index must be >= 0")
    return points_block(config, np.array([index]))[0]


def stream(config: SequenceConfig, start_index: int, count: int) -> np.ndarray:
    """Points for indices start_index .. start_index + count - 1, as (count, dim)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return np.empty((0, config.output_dimension))
    return points_block(config, np.arange(start_index, start_index + count))


# Rows per independently seeded block of the pseudorandom stream.
_PRNG_BLOCK = 4096


def prng_stream(
    seed: int, dimension: int, count: int, start_index: int = 0, stream_id: int = 0
) -> np.ndarray:
    """Reproducible uniform pseudorandom points (plain Monte Carlo comparator).

    Point index i lives in block i // 4096, and block b is generated from
    the seed tuple (seed, stream_id, b), so any index range reproduces
    exactly the same values as a single sequential pass and disjoint worker
    shards are deterministic.
    """
    if count < 0 or start_index < 0:
        raise ValueError("count and start_index must be >= 0")
    out = np.empty((count, dimension), dtype=np.float64)
    filled = 0
    while filled < count:
        idx = start_index + filled
        block = idx // _PRNG_BLOCK
        offset = idx - block * _PRNG_BLOCK
        take = min(_PRNG_BLOCK - offset, count - filled)
        rng = np.random.default_rng((seed, stream_id, block))
        rows = rng.random((_PRNG_BLOCK, dimension))
        out[filled : filled + take] = rows[offset : offset + take]
        filled += take
    return out
