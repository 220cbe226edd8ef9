"""Recurrent comparison errors.

Every unordered pair ``{x, y}`` of elements gets one outcome when the table
is built: the true order with probability ``1 - p``, the inverted order with
probability ``p``.  Repeating a comparison always gives the same answer.

Elements are identified with their 0-based true ranks ``0..n-1``.

The flip decision for a pair is a keyed 64-bit hash of ``(seed, lo, hi)``
compared against ``floor(p * 2**64)``, so both backends agree bit for bit:

* ``Backend.DENSE`` materializes the ``n(n-1)/2`` flip bits once (packed,
  row-major upper triangle) and answers queries by lookup.
* ``Backend.PRF`` stores nothing and rehashes on every query.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# 2**30 bits = 128 MiB, enough for n = 2**15.
DEFAULT_MAX_DENSE_BITS = 1 << 30

# Pairs hashed per numpy batch while materializing a dense table.
_CHUNK_PAIRS = 1 << 20

# Dense tables up to this n also expand into an n x n outcome matrix
# (n**2 bytes) on first bulk query; one gather per comparison.
OUTCOME_MATRIX_MAX_N = 1 << 13


class Backend(str, Enum):
    DENSE = "dense"
    PRF = "prf"


class Outcome(Enum):
    X_GREATER = "x>y"
    Y_GREATER = "y>x"


class TableTooLarge(ValueError):
    """Dense storage would exceed the configured memory cap."""


def flip_threshold(p: float) -> int:
    """Exact ``floor(p * 2**64)``; a pair flips iff its hash is below it."""
    return int(Fraction(p) * (1 << 64))


def _check_p(p: float) -> None:
    if not (0 <= p < 0.5):
        raise ValueError(f"error probability p={p!r} outside [0, 1/2)")


@dataclass(frozen=True)
class ErrorModel:
    n: int
    p: float
    seed: int
    backend: Backend = Backend.DENSE

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        _check_p(self.p)
        object.__setattr__(self, "backend", Backend(self.backend))
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @property
    def pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def threshold(self) -> int:
        return flip_threshold(self.p)


# --------------------------------------------------------------------------
# keyed pair hash (splitmix64 finalizer, two rounds keyed by the seed)
# --------------------------------------------------------------------------

def _mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _keys(seed: int) -> tuple[int, int]:
    seed &= MASK64
    return _mix64(seed + GOLDEN64), _mix64(seed + 2 * GOLDEN64)


def pair_hash(seed: int, x: int, y: int) -> int:
    """64-bit keyed hash of the unordered pair ``{x, y}``."""
    lo, hi = (x, y) if x < y else (y, x)
    k0, k1 = _keys(seed)
    return _mix64(_mix64(((lo << 32) | hi) ^ k0) + k1)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def pair_hash_array(seed: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pair_hash` for ``lo < hi`` arrays."""
    k0, k1 = _keys(seed)
    packed = (np.asarray(lo, dtype=np.uint64) << np.uint64(32)) | np.asarray(hi, dtype=np.uint64)
    return _mix64_np(_mix64_np(packed ^ np.uint64(k0)) + np.uint64(k1))


def tri_index(n: int, lo, hi):
    """Row-major index of pair ``(lo, hi)``, ``lo < hi``, in the upper triangle."""
    return lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)


def _materialize(model: ErrorModel) -> np.ndarray:
    n, threshold = model.n, np.uint64(model.threshold)
    packed: list[np.ndarray] = []
    carry = np.zeros(0, dtype=bool)
    rows_per_chunk = max(1, _CHUNK_PAIRS // max(n - 1, 1))
    for r0 in range(0, n - 1, rows_per_chunk):
        rows = np.arange(r0, min(r0 + rows_per_chunk, n - 1), dtype=np.int64)
        counts = n - 1 - rows
        lo = np.repeat(rows, counts)
        starts = np.cumsum(counts) - counts
        hi = np.arange(counts.sum(), dtype=np.int64) - np.repeat(starts, counts) + lo + 1
        flips = pair_hash_array(model.seed, lo, hi) < threshold
        buf = np.concatenate([carry, flips])
        cut = len(buf) - len(buf) % 8
        packed.append(np.packbits(buf[:cut], bitorder="little"))
        carry = buf[cut:]
    if len(carry):
        packed.append(np.packbits(carry, bitorder="little"))
    return np.concatenate(packed) if packed else np.zeros(0, dtype=np.uint8)


class ComparisonTable:
    """The fixed outcome of every pairwise comparison among ``n`` elements.

    Immutable after construction apart from the comparison counter, which is
    guarded by a lock so one table can be shared between threads.
    """

    def __init__(self, model: ErrorModel, bits: np.ndarray | None = None):
        self.model = model
        self.n = model.n
        self._threshold = model.threshold
        self._bits = bits
        if model.backend is Backend.DENSE and bits is None:
            raise ValueError("dense backend needs materialized bits; use build_comparison_table")
        self._count = 0
        self._lock = threading.Lock()
        self._outcomes = None

    @classmethod
    def from_flips(cls, n: int, pairs: Iterable[tuple[int, int]]) -> ComparisonTable:
        """Dense table in which exactly the given unordered pairs are flipped."""
        model = ErrorModel(n, 0.0, 0, Backend.DENSE)
        flips = np.zeros(model.pairs, dtype=bool)
        for x, y in pairs:
            _check_pair(n, x, y)
            flips[tri_index(n, min(x, y), max(x, y))] = True
        return cls(model, np.packbits(flips, bitorder="little"))

    @property
    def p(self) -> float:
        return self.model.p

    @property
    def backend(self) -> Backend:
        return self.model.backend

    @property
    def comparisons(self) -> int:
        return self._count

    def reset_comparisons(self) -> None:
        with self._lock:
            self._count = 0

    def tally(self, k: int) -> None:
        """Account for ``k`` comparisons answered from :meth:`outcome_matrix`."""
        with self._lock:
            self._count += k

    def outcome_matrix(self) -> np.ndarray | None:
        """``M[x, y]`` is True iff ``x`` is reported larger than ``y``.

        Only for dense tables with ``n <= OUTCOME_MATRIX_MAX_N``; built on
        first use.  Reading it does not count comparisons, callers
        :meth:`tally` what they consume.
        """
        if self._outcomes is None and self._bits is not None and self.n <= OUTCOME_MATRIX_MAX_N:
            self._outcomes = self._build_outcome_matrix()
        return self._outcomes

    # -- inspection (not counted) ------------------------------------------

    def is_flipped(self, x: int, y: int) -> bool:
        _check_pair(self.n, x, y)
        lo, hi = (x, y) if x < y else (y, x)
        if self._bits is not None:
            idx = tri_index(self.n, lo, hi)
            return bool((int(self._bits[idx >> 3]) >> (idx & 7)) & 1)
        return pair_hash(self.model.seed, lo, hi) < self._threshold

    def flipped(self, xs, ys) -> np.ndarray:
        """Flip bits for the pairs ``(xs[i], ys[i])``."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        lo = np.minimum(xs, ys)
        hi = np.maximum(xs, ys)
        if self._bits is not None:
            idx = tri_index(self.n, lo, hi)
            return ((self._bits[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1).astype(bool)
        return pair_hash_array(self.model.seed, lo, hi) < np.uint64(self._threshold)

    def flip_count(self) -> int:
        """Number of flipped pairs over the whole table."""
        if self._bits is not None:
            return int(np.unpackbits(self._bits, bitorder="little")[: self.model.pairs].sum())
        total = 0
        for x in range(self.n - 1):
            ys = np.arange(x + 1, self.n)
            total += int(self.flipped(np.full_like(ys, x), ys).sum())
        return total

    # -- queries (counted) -------------------------------------------------

    def compare(self, x: int, y: int) -> Outcome:
        """Fixed outcome of comparing ``x`` against ``y``."""
        flip = self.is_flipped(x, y)
        self.tally(1)
        return Outcome.X_GREATER if (x > y) != flip else Outcome.Y_GREATER

    def greater(self, xs, ys) -> np.ndarray:
        """Vectorized :meth:`compare`: True where ``xs[i]`` is reported larger."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have the same shape")
        if xs.size and (np.any(xs == ys) or min(xs.min(), ys.min()) < 0
                        or max(xs.max(), ys.max()) >= self.n):
            raise ValueError("pairs must be distinct elements in 0..n-1")
        return self._greater(xs, ys)

    def _greater(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        # unchecked hot path for the sorters
        outcomes = self.outcome_matrix()
        if outcomes is not None:
            out = outcomes[xs, ys]
        else:
            out = (xs > ys) != self.flipped(xs, ys)
        self.tally(xs.size)
        return out

    def _build_outcome_matrix(self) -> np.ndarray:
        n = self.n
        flips = np.unpackbits(self._bits, bitorder="little")[: self.model.pairs].view(bool)
        upper = np.zeros((n, n), dtype=bool)
        start = 0
        for lo in range(n - 1):
            upper[lo, lo + 1:] = flips[start:start + n - 1 - lo]
            start += n - 1 - lo
        upper |= upper.T
        # row x beats column y: truth (x > y) xor flip
        return upper ^ np.tri(n, n, -1, dtype=bool)

    def __repr__(self):
        m = self.model
        return f"ComparisonTable(n={m.n}, p={m.p}, seed={m.seed}, backend={m.backend.value})"


def _check_pair(n: int, x: int, y: int) -> None:
    if x == y:
        raise ValueError(f"cannot compare element {x} with itself")
    if not (0 <= x < n and 0 <= y < n):
        raise ValueError(f"elements ({x}, {y}) out of range 0..{n - 1}")


def build_comparison_table(n: int, p: float, seed: int, backend: Backend | str = Backend.DENSE,
                           max_dense_bits: int = DEFAULT_MAX_DENSE_BITS) -> ComparisonTable:
    model = ErrorModel(n, p, seed, Backend(backend))
    if model.backend is Backend.PRF:
        return ComparisonTable(model)
    if model.pairs > max_dense_bits:
        raise TableTooLarge(
            f"dense table for n={n} needs {model.pairs} bits > cap {max_dense_bits}; "
            "use the PRF backend")
    return ComparisonTable(model, _materialize(model))


def error_set_size(table: ComparisonTable, x: int, w: float) -> int:
    """How many ``y`` with true rank in ``[x - 4w, x + 4w]`` compare wrongly against ``x``."""
    if w <= 0:
        raise ValueError("window size must be positive")
    if not 0 <= x < table.n:
        raise ValueError(f"element {x} out of range")
    lo = max(0, math.ceil(x - 4 * w))
    hi = min(table.n - 1, math.floor(x + 4 * w))
    ys = np.arange(lo, hi + 1)
    ys = ys[ys != x]
    if ys.size == 0:
        return 0
    return int(table.flipped(np.full_like(ys, x), ys).sum())
