"""Closed-form guarantees for Window Sort.

All logarithms in the dislocation bounds are base 2.  Branch boundaries are
closed on the smaller-``p`` side: ``p <= 1/64`` uses the middle branch of
``f`` and ``p <= 1/192`` the constant one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class OutOfGuaranteeRange(ValueError):
    """No closed-form guarantee exists for these parameters."""


QUADRATIC = "quadratic"
LOGARITHMIC = "logarithmic"
CONSTANT = "constant"
NO_GUARANTEE = "no guarantee"


def f_regime(p: float) -> str:
    if p < 0:
        raise ValueError(f"p={p!r} must be non-negative")
    if p >= 1 / 32:
        return NO_GUARANTEE
    if p > 1 / 64:
        return QUADRATIC
    if p > 1 / 192:
        return LOGARITHMIC
    return CONSTANT


def f_of_p(p: float) -> float:
    """Constant in the ``9 f(p) log n`` maximum-dislocation bound for halving windows."""
    regime = f_regime(p)
    if regime == NO_GUARANTEE:
        raise OutOfGuaranteeRange(f"p={p!r} >= 1/32: halving schedule has no guarantee")
    if regime == QUADRATIC:
        return 400 * p / (1 - 32 * p) ** 2
    if regime == LOGARITHMIC:
        return 4 / (math.log(1 / (32 * p)) - (1 - 32 * p))
    return 6.0


def g_regime(p: float, alpha: float) -> str:
    if not (0.5 <= alpha < 1):
        raise ValueError(f"alpha={alpha!r} outside [1/2, 1)")
    if p < 0:
        raise ValueError(f"p={p!r} must be non-negative")
    if p >= alpha / 16:
        return NO_GUARANTEE
    if p > alpha / 32:
        return QUADRATIC
    if p > alpha / 96:
        return LOGARITHMIC
    return CONSTANT


def g_of_p_alpha(p: float, alpha: float) -> float:
    """Analogue of :func:`f_of_p` when windows shrink by ``alpha`` per iteration."""
    regime = g_regime(p, alpha)
    if regime == NO_GUARANTEE:
        raise OutOfGuaranteeRange(f"p={p!r} >= alpha/16={alpha / 16!r}")
    if regime == QUADRATIC:
        return 100 * p / (alpha - 16 * p) ** 2
    if regime == LOGARITHMIC:
        return 4 / (math.log(alpha / (16 * p)) - (alpha - 16 * p))
    return 6.0


def pr_w_bound(w: float, p: float) -> float:
    """Chernoff upper bound on P(at least w/4 errors among 8w comparisons)."""
    if w <= 0:
        raise ValueError("window size must be positive")
    regime = f_regime(p)
    if regime == NO_GUARANTEE:
        raise OutOfGuaranteeRange(f"p={p!r} >= 1/32")
    if regime == QUADRATIC:
        return math.exp(-w * (1 - 32 * p) ** 2 / (384 * p))
    if regime == LOGARITHMIC:
        delta = (1 - 32 * p) / (32 * p)
        # (e^delta / (1+delta)^(1+delta))^(8wp), evaluated in log space
        return math.exp(8 * w * p * (delta - (1 + delta) * math.log(1 + delta)))
    return 2.0 ** (-w / 4)


def swap_probability_lower_bound(p: float, gap: int) -> float:
    """Lower bound on P(x and x+gap end up inverted), for any sorting algorithm."""
    if gap < 1:
        raise ValueError(f"gap must be >= 1, got {gap}")
    if not (0 <= p < 0.5):
        raise ValueError(f"p={p!r} outside [0, 1/2)")
    return 0.5 * (p / (1 - p)) ** (2 * gap - 1)


@dataclass(frozen=True)
class BoundReport:
    n: int
    p: float
    alpha: float
    f: float | None
    max_disl_bound: float | None
    total_disl_bound: float | None
    regime: str

    @property
    def per_element_bound(self) -> float | None:
        return None if self.total_disl_bound is None else self.total_disl_bound / self.n


def dislocation_bounds(n: int, p: float, alpha: float = 0.5) -> BoundReport:
    """Max-dislocation (w.p. 1-1/n) and expected total-dislocation bounds.

    For ``alpha == 1/2`` the constant is ``f(p)`` and the total bound is
    ``n * 60 f log f``; otherwise ``g(p, alpha)`` with
    ``n * (9 + 2/(1-alpha)) * 6 g log g``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if alpha == 0.5:
        regime = f_regime(p)
        if regime == NO_GUARANTEE:
            return BoundReport(n, p, alpha, None, None, None, regime)
        c = f_of_p(p)
        per_element = 60 * c * math.log2(c)
    else:
        regime = g_regime(p, alpha)
        if regime == NO_GUARANTEE:
            return BoundReport(n, p, alpha, None, None, None, regime)
        c = g_of_p_alpha(p, alpha)
        per_element = (9 + 2 / (1 - alpha)) * 6 * c * math.log2(c)
    return BoundReport(n, p, alpha, c, 9 * c * math.log2(n), n * per_element, regime)
