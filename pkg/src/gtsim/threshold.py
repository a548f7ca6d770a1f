"""Truncation: drop items whose prior is at or below a threshold.

Discarded items are declared non-defective without testing. The threshold
derived from a target error budget keeps the chance that any discarded item
is actually defective at or below half the budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .priors import Population, stats


@dataclass(frozen=True)
class TruncationResult:
    kept: np.ndarray       # 1-based item ids with p_i > theta, in index order
    discarded: np.ndarray  # 1-based item ids with p_i <= theta, in index order
    theta: float
    rho: float             # total prior mass discarded


def truncation_threshold(target_error: float, n: int, entropy_bits: float) -> float:
    """Threshold for a target error budget:

        -log2(theta) = min(log2(2n / P_e), 2H / P_e)

    Guarantees the discarded mass rho <= P_e/2 by combining the count bound
    rho <= n*theta with the entropy bound rho <= H / (-log2 theta).
    """
    if not 0.0 < target_error < 1.0:
        raise InvalidParameter(f"target error must be in (0, 1), got {target_error}")
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if entropy_bits < 0:
        raise InvalidParameter(f"entropy must be >= 0, got {entropy_bits}")
    neg_log = min(math.log2(2.0 * n / target_error), 2.0 * entropy_bits / target_error)
    return 2.0 ** (-neg_log)


def compute_theta(target_error: float, pop: Population) -> float:
    """Truncation threshold for this population at the given error budget."""
    return truncation_threshold(target_error, pop.n, stats(pop).entropy_bits)


def truncate(pop: Population, theta: float) -> TruncationResult:
    """Split items into kept (p_i > theta) and discarded (p_i <= theta)."""
    if not 0.0 <= theta < 1.0:
        raise InvalidParameter(f"theta must be in [0, 1), got {theta}")
    ids = np.arange(1, pop.n + 1, dtype=np.int64)
    low = pop.probs <= theta
    return TruncationResult(
        kept=ids[~low],
        discarded=ids[low],
        theta=float(theta),
        rho=float(np.sum(pop.probs[low])),
    )
