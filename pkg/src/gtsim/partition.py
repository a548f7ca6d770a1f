"""Geometric probability bins and greedy splitting into search sets.

Retained items are grouped by prior magnitude: bin 0 holds [1/2, 1], bin r >= 1
holds [1/(2*gamma^r), 1/(2*gamma^(r-1))). Every set drawn from a single bin
automatically satisfies the bounded-ratio condition max p_j / min p_i <= gamma.
Within a bin, items are packed in descending probability (ties by ascending id)
into successive sets, each closed as soon as its mass reaches the fullness
threshold, so at most one non-full set remains per bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, InvalidProbability
from .priors import Population

# Relative guard band for float ceilings so exact powers of the base do not
# round up spuriously.
CEIL_GUARD = 1e-12


def guarded_ceil(x: float) -> int:
    return math.ceil(x - CEIL_GUARD * max(1.0, abs(x)))


@dataclass(frozen=True)
class SearchSet:
    """Items from one bin to be searched together."""

    items: np.ndarray      # 1-based item ids, in packing order
    probs: np.ndarray      # aligned priors
    bin: int
    total_prob: float
    full: bool

    def __len__(self) -> int:
        return self.items.shape[0]


@dataclass(frozen=True)
class BinLayout:
    gamma: float
    bins: tuple[tuple[int, np.ndarray], ...]  # (bin index, item ids), non-empty bins only
    last_bin: int                             # largest non-empty bin index (0 if none)


@dataclass(frozen=True)
class PartitionResult:
    sets: tuple[SearchSet, ...]
    layout: BinLayout

    @property
    def g(self) -> int:
        return len(self.sets)


def optimal_gamma(mu: float, theta: float) -> float:
    """Ratio bound minimizing the binning/packing overhead:

        log2(gamma) = sqrt(-log2(2*theta) / mu)

    Diverges as mu -> 0 (a single bin below 1/2 is optimal); returns inf
    instead of overflowing.
    """
    if not mu > 0:
        raise InvalidParameter(f"mu must be > 0, got {mu}")
    if not 0.0 < theta < 0.5:
        raise InvalidParameter(f"theta must be in (0, 1/2), got {theta}")
    exponent = math.sqrt(-math.log2(2.0 * theta) / mu)
    return 2.0**exponent if exponent < 1020.0 else math.inf


def bracket_term(mu: float, theta: float, gamma: float) -> float:
    """Overhead term -log2(2*theta)/log2(gamma) + mu*log2(gamma); minimized at optimal_gamma."""
    if not gamma > 1.0:
        raise InvalidParameter(f"gamma must be > 1, got {gamma}")
    lg = math.log2(gamma)
    return -math.log2(2.0 * theta) / lg + mu * lg


def max_bin_index(theta: float, gamma: float) -> float:
    """Upper bound on the last admissible bin index: -log2(2*theta)/log2(gamma) + 1."""
    if not 0.0 < theta < 0.5:
        raise InvalidParameter(f"theta must be in (0, 1/2), got {theta}")
    if not gamma > 1.0:
        raise InvalidParameter(f"gamma must be > 1, got {gamma}")
    return -math.log2(2.0 * theta) / math.log2(gamma) + 1.0


def _bin_edge(r: int, gamma: float) -> float:
    # Lower edge of bin r: 1/(2*gamma^r). Bin 0's interval is [1/2, 1].
    return 0.5 / gamma**r


def bin_index(p: float, gamma: float) -> int:
    """Bin index of probability p: 0 if p >= 1/2, else the unique r >= 1 with
    p in [1/(2*gamma^r), 1/(2*gamma^(r-1)))."""
    if not p > 0.0:
        raise InvalidProbability(0, p)
    if p > 1.0:
        raise InvalidProbability(0, p)
    if p >= 0.5:
        return 0
    if not gamma > 1.0:
        raise InvalidParameter(f"gamma must be > 1 to bin p={p} < 1/2")
    r = max(1, guarded_ceil(math.log2(0.5 / p) / math.log2(gamma)))
    # Settle boundary cases against the edges actually used by the layout.
    while _bin_edge(r, gamma) > p:
        r += 1
    while r > 1 and _bin_edge(r - 1, gamma) <= p:
        r -= 1
    return r


def layout_bins(pop: Population, kept: np.ndarray, gamma: float) -> BinLayout:
    """Group retained item ids into probability bins."""
    kept = np.asarray(kept, dtype=np.int64)
    if kept.size == 0:
        return BinLayout(gamma=float(gamma), bins=(), last_bin=0)
    by_bin: dict[int, list[int]] = {}
    for item in kept:
        r = bin_index(pop.prob(int(item)), gamma)
        by_bin.setdefault(r, []).append(int(item))
    bins = tuple(
        (r, np.asarray(ids, dtype=np.int64)) for r, ids in sorted(by_bin.items())
    )
    return BinLayout(gamma=float(gamma), bins=bins, last_bin=max(by_bin))


def partition(
    pop: Population,
    kept: np.ndarray,
    gamma: float,
    fullness: float = 0.5,
) -> PartitionResult:
    """Split retained items into bounded-ratio search sets.

    Bin-0 items become singleton sets. Within each bin r >= 1, items are packed
    in descending probability (ascending id on ties) into successive sets; a set
    closes as soon as its mass reaches `fullness`, so only the last set of a bin
    can be non-full. An empty `kept` yields an empty partition.
    """
    if not 0.0 < fullness <= 0.5:
        raise InvalidParameter(f"fullness must be in (0, 1/2], got {fullness}")
    layout = layout_bins(pop, kept, gamma)
    sets: list[SearchSet] = []
    for r, ids in layout.bins:
        probs = pop.probs_for(ids)
        order = np.lexsort((ids, -probs))  # descending prob, ascending id
        ids, probs = ids[order], probs[order]
        if r == 0:
            for item, p in zip(ids, probs):
                sets.append(
                    SearchSet(
                        items=np.asarray([item], dtype=np.int64),
                        probs=np.asarray([p], dtype=np.float64),
                        bin=0,
                        total_prob=float(p),
                        full=bool(p >= fullness),
                    )
                )
            continue
        start = 0
        mass = 0.0
        for i, p in enumerate(probs):
            mass += float(p)
            if mass >= fullness:
                sets.append(
                    SearchSet(
                        items=ids[start : i + 1],
                        probs=probs[start : i + 1],
                        bin=r,
                        total_prob=mass,
                        full=True,
                    )
                )
                start, mass = i + 1, 0.0
        if start < len(ids):
            sets.append(
                SearchSet(
                    items=ids[start:],
                    probs=probs[start:],
                    bin=r,
                    total_prob=mass,
                    full=bool(mass >= fullness),
                )
            )
    return PartitionResult(sets=tuple(sets), layout=layout)
