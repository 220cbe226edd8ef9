"""Dislocation statistics and the low-error diagnostic for traced runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import ComparisonTable, error_set_size
from .wsort import SortTrace, as_permutation, positions


@dataclass(frozen=True)
class DislocationReport:
    per_element: np.ndarray
    max: int
    total: int
    mean: float


def dislocation(perm) -> DislocationReport:
    order = as_permutation(perm)
    per = np.abs(positions(order) - np.arange(len(order)))
    total = int(per.sum())
    return DislocationReport(per, int(per.max(initial=0)), total, total / max(len(order), 1))


def check_star(perm, w: float) -> np.ndarray:
    """Per element: is its dislocation at most ``w``?"""
    return dislocation(perm).per_element <= w


def pair_inverted(perm, x: int, y: int) -> bool:
    if x >= y:
        raise ValueError(f"need x < y, got ({x}, {y})")
    pos = positions(as_permutation(perm))
    return bool(pos[x] > pos[y])


def inversion_count(perm) -> int:
    """Pairs appearing in the wrong relative order (merge-count, O(n log n))."""
    def count(a):
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, cl = count(a[:mid])
        right, cr = count(a[mid:])
        merged, inv, i, j = [], cl + cr, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                inv += len(left) - i
                j += 1
        merged += left[i:] + right[j:]
        return merged, inv

    return count(as_permutation(perm).tolist())[1]


# --------------------------------------------------------------------------
# low-error condition: |err(x, w)| <= w/4 for every x and every w >= 2 w*
# --------------------------------------------------------------------------

def _size_ok(table: ComparisonTable, w: float) -> bool:
    return all(error_set_size(table, x, w) <= w / 4 for x in range(table.n))


def low_error_condition(table: ComparisonTable, sizes, w_star: float) -> bool:
    """True when every scheduled ``w >= 2 * w_star`` has at most ``w/4`` errors around every element."""
    return all(_size_ok(table, w) for w in sizes if w >= 2 * w_star)


@dataclass(frozen=True)
class LowErrorCheck:
    w_star: float
    condition_holds: bool
    max_dislocation: int

    @property
    def bound(self) -> float:
        return 9 * self.w_star

    @property
    def violated(self) -> bool:
        # only meaningful when the hypothesis holds
        return self.condition_holds and self.max_dislocation > self.bound


def _sizes(trace: SortTrace) -> list[float]:
    if not trace.records:
        raise ValueError("low-error check needs a full trace")
    return [r.w for r in trace.records]


def check_low_error_bound(trace: SortTrace, table: ComparisonTable, w_star: float) -> LowErrorCheck:
    """If the low-error condition holds down to ``2 * w_star``, max dislocation must be <= ``9 * w_star``."""
    holds = low_error_condition(table, _sizes(trace), w_star)
    return LowErrorCheck(w_star, holds, dislocation(trace.final).max)


def default_w_star(sizes, floor: float = 8) -> float:
    """Smallest scheduled size that is at least ``floor``."""
    eligible = [w for w in sizes if w >= floor]
    if not eligible:
        raise ValueError(f"no scheduled window size >= {floor}")
    return min(eligible)


def tightest_low_error_check(trace: SortTrace, table: ComparisonTable) -> LowErrorCheck:
    """Check against the smallest scheduled ``w*`` for which the condition holds.

    The condition only gets easier as ``w*`` grows, so scan from the largest
    window down and stop at the first failure.
    """
    sizes = sorted(_sizes(trace), reverse=True)
    ok = {w: None for w in sizes}

    def holds(w_star):
        for w in sizes:
            if w < 2 * w_star:
                break
            if ok[w] is None:
                ok[w] = _size_ok(table, w)
            if not ok[w]:
                return False
        return True

    best = sizes[0]
    for w in sizes:
        if not holds(w):
            break
        best = w
    return check_low_error_bound(trace, table, best)
