"""Window Sort and a noisy merge sort baseline.

A permutation is a 1-D integer array ``order`` where ``order[l]`` is the
element (true rank, 0-based) sitting at position ``l``.  Per-element arrays
(wins, computed ranks) are indexed by element, not by position.

One iteration with window size ``w`` and per-side width ``W = floor(2w)``:

1. every element at position ``l`` is compared with the occupants of
   positions ``l-W..l-1`` and ``l+1..l+W``; each in-window pair is queried
   once and the outcome credited to its winner;
2. ``computed_rank = max(l - W, 0) + wins``;
3. elements are stably counting-sorted by computed rank.

The window starts at ``n/2`` and shrinks by ``alpha`` until it drops below 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from .noise import ComparisonTable, Outcome


class TraceLevel(str, Enum):
    OFF = "off"
    FULL = "full"


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class WindowSchedule:
    alpha: float
    sizes: tuple[float, ...]

    def __iter__(self):
        return iter(self.sizes)

    def __len__(self):
        return len(self.sizes)


@dataclass
class IterationRecord:
    w: float
    wins: np.ndarray
    computed_rank: np.ndarray
    sigma_before: np.ndarray
    sigma_after: np.ndarray

    @property
    def width(self) -> int:
        return int(np.floor(2 * self.w))


@dataclass
class SortTrace:
    final: np.ndarray
    comparisons_used: int
    alpha: float
    records: list[IterationRecord] = field(default_factory=list)


def positions(order) -> np.ndarray:
    """Inverse permutation: ``positions(order)[x]`` is where ``x`` sits."""
    order = np.asarray(order)
    pos = np.empty(len(order), dtype=np.int64)
    pos[order] = np.arange(len(order))
    return pos


def as_permutation(order) -> np.ndarray:
    order = np.asarray(order, dtype=np.int64)
    if order.ndim != 1 or not np.array_equal(np.sort(order), np.arange(len(order))):
        raise ValueError("not a permutation of 0..n-1")
    return order


def _check_alpha(alpha: float) -> None:
    if not (0.5 <= alpha < 1):
        raise ValueError(f"shrink rate alpha={alpha!r} outside [1/2, 1)")


def window_schedule(n: int, alpha: float = 0.5, min_window: float = 1.0) -> WindowSchedule:
    """Sizes ``n/2, alpha*n/2, ...`` down to the last one ``>= min_window``.

    ``min_window=1`` runs until the window drops below 1.  Larger values stop
    early, trading total dislocation for fewer comparisons.
    """
    if n < 2:
        raise ValueError("window schedule needs n >= 2")
    _check_alpha(alpha)
    if min_window < 1:
        raise ValueError("min_window must be >= 1")
    sizes = []
    w = n / 2
    while w >= min_window:
        sizes.append(w)
        w *= alpha
    return WindowSchedule(alpha, tuple(sizes))


# --------------------------------------------------------------------------
# position-indexed kernels
# --------------------------------------------------------------------------

@njit(cache=True)
def _band_wins(outcomes, order, width):
    n = order.shape[0]
    wins = np.zeros(n, dtype=np.int64)
    pairs = 0
    for l in range(n):
        x = order[l]
        hi = min(n - 1, l + width)
        for m in range(l + 1, hi + 1):
            if outcomes[x, order[m]]:
                wins[l] += 1
            else:
                wins[m] += 1
        pairs += hi - l
    return wins, pairs


@njit(cache=True)
def _iterate(outcomes, order, width):
    wins, pairs = _band_wins(outcomes, order, width)
    ranks = np.maximum(np.arange(order.shape[0]) - width, 0) + wins
    return order[_counting_sort(ranks)], wins, ranks, pairs


@njit(cache=True)
def _run_schedule(outcomes, order, widths):
    pairs = 0
    for width in widths:
        order, _, _, k = _iterate(outcomes, order, width)
        pairs += k
    return order, pairs


def _wins_by_position(order: np.ndarray, table: ComparisonTable, width: int) -> np.ndarray:
    outcomes = table.outcome_matrix()
    if outcomes is None:
        return _wins_by_offset(order, table, width)
    wins, pairs = _band_wins(outcomes, order, width)
    table.tally(pairs)
    return wins


def _wins_by_offset(order: np.ndarray, table: ComparisonTable, width: int) -> np.ndarray:
    # one vectorized query per offset; used when no outcome matrix fits
    n = len(order)
    wins = np.zeros(n, dtype=np.int64)
    for d in range(1, min(width, n - 1) + 1):
        left_wins = table._greater(order[: n - d], order[d:])
        wins[: n - d] += left_wins
        wins[d:] += ~left_wins
    return wins


def _ranks_by_position(wins_pos: np.ndarray, width: int) -> np.ndarray:
    return np.maximum(np.arange(len(wins_pos)) - width, 0) + wins_pos


@njit(cache=True)
def _counting_sort(keys):
    """Stable counting sort; returns the source index for each output slot."""
    counts = np.zeros(keys.max() + 2, dtype=np.int64)
    for k in keys:
        counts[k + 1] += 1
    for k in range(1, counts.shape[0]):
        counts[k] += counts[k - 1]
    out = np.empty(keys.shape[0], dtype=np.int64)
    for i in range(keys.shape[0]):
        out[counts[keys[i]]] = i
        counts[keys[i]] += 1
    return out


# --------------------------------------------------------------------------
# element-indexed public steps
# --------------------------------------------------------------------------

def compute_wins(sigma, table: ComparisonTable, w: float) -> np.ndarray:
    """Per-element in-window win counts for one iteration with window ``w``."""
    order = as_permutation(sigma)
    wins = np.empty(len(order), dtype=np.int64)
    wins[order] = _wins_by_position(order, table, int(np.floor(2 * w)))
    return wins


def compute_ranks(sigma, wins, w: float) -> np.ndarray:
    order = as_permutation(sigma)
    wins = np.asarray(wins, dtype=np.int64)
    ranks = np.empty(len(order), dtype=np.int64)
    ranks[order] = _ranks_by_position(wins[order], int(np.floor(2 * w)))
    return ranks


def place_by_rank(sigma, ranks) -> np.ndarray:
    """Order elements by computed rank, ties kept in current position order."""
    order = as_permutation(sigma)
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.shape != order.shape:
        raise ValueError("need one rank per element")
    return order[_counting_sort(ranks[order])]


def window_sort(sigma, table: ComparisonTable, alpha: float = 0.5,
                trace: TraceLevel | str = TraceLevel.OFF,
                check_invariants: bool = False, min_window: float = 1.0) -> SortTrace:
    order = as_permutation(sigma)
    n = len(order)
    if table.n != n:
        raise ValueError(f"table has n={table.n} but input has {n} elements")
    _check_alpha(alpha)
    full = TraceLevel(trace) is TraceLevel.FULL or check_invariants
    start = table.comparisons
    records = []
    sizes = window_schedule(n, alpha, min_window).sizes if n >= 2 else ()
    widths = np.array([int(np.floor(2 * w)) for w in sizes], dtype=np.int64)
    outcomes = table.outcome_matrix()
    if outcomes is not None and not full:
        order, pairs = _run_schedule(outcomes, order, widths)
        table.tally(pairs)
    for w, width in zip(sizes, widths) if (outcomes is None or full) else ():
        if outcomes is not None:
            new_order, wins_pos, ranks_pos, pairs = _iterate(outcomes, order, width)
            table.tally(pairs)
        else:
            wins_pos = _wins_by_offset(order, table, width)
            ranks_pos = _ranks_by_position(wins_pos, width)
            new_order = order[_counting_sort(ranks_pos)]
        if full:
            wins = np.empty(n, dtype=np.int64)
            wins[order] = wins_pos
            ranks = np.empty(n, dtype=np.int64)
            ranks[order] = ranks_pos
            records.append(IterationRecord(w, wins, ranks, order, new_order))
        order = new_order
    result = SortTrace(order, table.comparisons - start, alpha, records)
    if check_invariants:
        problems = trace_violations(result)
        if problems:
            raise InvariantViolation("; ".join(problems[:5]))
    if TraceLevel(trace) is TraceLevel.OFF:
        result.records = []
    return result


def trace_violations(trace: SortTrace) -> list[str]:
    """Check every per-iteration bound that holds for any comparison outcomes.

    Per record: wins within the window, computed rank within ``2w`` of the
    old position and of the new position, movement at most ``4w``.  Across
    records: an element never drifts more than ``4w / (1 - alpha)`` from its
    position at the start of the iteration with size ``w`` (``8w`` for
    halving).
    """
    problems = []
    records = trace.records
    if not records:
        return problems
    final_pos = positions(trace.final)
    n = len(trace.final)
    for i, rec in enumerate(records):
        w = rec.w
        before = positions(rec.sigma_before)
        after = positions(rec.sigma_after)
        cap = min(2 * rec.width, n - 1)
        if rec.wins.min() < 0 or rec.wins.max() > cap:
            problems.append(f"iter {i} (w={w}): wins outside [0, {cap}]")
        if np.abs(rec.computed_rank - before).max() > 2 * w:
            problems.append(f"iter {i} (w={w}): |computed_rank - old position| > 2w")
        if np.abs(rec.computed_rank - after).max() > 2 * w:
            problems.append(f"iter {i} (w={w}): |computed_rank - new position| > 2w")
        if np.abs(after - before).max() > 4 * w:
            problems.append(f"iter {i} (w={w}): moved more than 4w in one iteration")
        if np.abs(final_pos - before).max() > 4 * w / (1 - trace.alpha):
            problems.append(f"iter {i} (w={w}): moved more than 4w/(1-alpha) until the end")
        if i + 1 < len(records) and not np.array_equal(rec.sigma_after, records[i + 1].sigma_before):
            problems.append(f"iter {i}: trace is not contiguous")
    if not np.array_equal(records[-1].sigma_after, trace.final):
        problems.append("final permutation differs from last iteration output")
    return problems


def baseline_merge_sort_noisy(sigma, table: ComparisonTable) -> np.ndarray:
    """Top-down merge sort driven by the noisy comparator."""
    order = as_permutation(sigma).tolist()
    if table.n != len(order):
        raise ValueError(f"table has n={table.n} but input has {len(order)} elements")

    def merge_sort(items):
        if len(items) <= 1:
            return items
        mid = len(items) // 2
        left, right = merge_sort(items[:mid]), merge_sort(items[mid:])
        merged = []
        i = j = 0
        while i < len(left) and j < len(right):
            if table.compare(left[i], right[j]) is Outcome.X_GREATER:
                merged.append(right[j])
                j += 1
            else:
                merged.append(left[i])
                i += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged

    return np.array(merge_sort(order), dtype=np.int64)
