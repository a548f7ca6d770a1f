"""Item populations with independent, non-identical defectivity priors.

Items are identified by 1-based indices 1..n; index identity is preserved
by every downstream stage (truncation, binning, search). All entropies are
in bits.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyPopulation, InvalidParameter, InvalidProbability
from .rng import SeedLike, generator

log = logging.getLogger(__name__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Population:
    """Ordered defectivity priors, one probability per item.

    probs[i-1] is the prior of item i. Immutable after construction;
    safe to share across threads.
    """

    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def __len__(self) -> int:
        return self.n

    def prob(self, item: int) -> float:
        """Prior of a single 1-based item index."""
        return float(self.probs[item - 1])

    def probs_for(self, items: np.ndarray) -> np.ndarray:
        """Priors for an array of 1-based item indices."""
        return self.probs[np.asarray(items, dtype=np.int64) - 1]


@dataclass(frozen=True)
class PopulationStats:
    mu: float            # expected number of defectives, sum of p_i
    entropy_bits: float  # sum of binary entropies h(p_i), in bits


@dataclass(frozen=True)
class DefectivityVector:
    """One defectivity realization: bits[i-1] == 1 iff item i is defective."""

    bits: np.ndarray
    seed: tuple[int, ...]
    defectives: frozenset[int] = field(repr=False, default=frozenset())

    def __len__(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return len(self.defectives)


def make_population(probs: Sequence[float] | np.ndarray) -> Population:
    """Validate raw probabilities into a Population.

    Raises EmptyPopulation for an empty list and InvalidProbability (with the
    1-based index) for any value outside [0, 1].
    """
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise EmptyPopulation("population requires at least one probability")
    bad = np.flatnonzero(~((arr >= 0.0) & (arr <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise InvalidProbability(i + 1, float(arr[i]) if np.isfinite(arr[i]) else arr[i])
    return Population(_frozen(arr.copy()))


def load_population(path) -> Population:
    """Read a one-probability-per-line text file (blank lines and # comments skipped)."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise InvalidProbability(lineno, text) from None
    return make_population(values)


def sample_dirichlet_priors(n: int, mu: float, alpha: float, seed: SeedLike) -> Population:
    """Draw priors from a scaled symmetric Dirichlet.

    Weights w ~ Dirichlet(alpha * 1_n) sum to one; priors are p_i = min(mu * w_i, 1),
    so sum(p_i) == mu exactly unless clipping occurs (clipped items are logged).
    Deterministic given the seed.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not mu > 0:
        raise InvalidParameter(f"mu must be > 0, got {mu}")
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be > 0, got {alpha}")
    rng = generator(seed)
    weights = rng.dirichlet(np.full(n, float(alpha)))
    scaled = mu * weights
    clipped = int(np.count_nonzero(scaled > 1.0))
    if clipped:
        log.info("dirichlet priors: clipped %d of %d items at 1.0", clipped, n)
    return Population(_frozen(np.minimum(scaled, 1.0)))


def binary_entropy(p) -> np.ndarray | float:
    """h(p) = -p*log2(p) - (1-p)*log2(1-p), with h(0) = h(1) = 0."""
    arr = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    q = arr[inner]
    out[inner] = -q * np.log2(q) - (1.0 - q) * np.log2(1.0 - q)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def stats(pop: Population) -> PopulationStats:
    """Effective sparsity (sum of p_i) and total entropy in bits."""
    return PopulationStats(
        mu=float(np.sum(pop.probs)),
        entropy_bits=float(np.sum(binary_entropy(pop.probs))),
    )


def sample_defectivity(pop: Population, seed: SeedLike) -> DefectivityVector:
    """Independent Bernoulli(p_i) draw per item; reproducible from the seed."""
    from .rng import as_key

    key = as_key(seed)
    bits = (generator(key).random(pop.n) < pop.probs).astype(np.uint8)
    defectives = frozenset(int(i) + 1 for i in np.flatnonzero(bits))
    return DefectivityVector(_frozen(bits), key, defectives)


def defectivity_from_items(n: int, defective_items: Iterable[int]) -> DefectivityVector:
    """Build a truth vector directly from a collection of 1-based defective ids."""
    ids = frozenset(int(i) for i in defective_items)
    bits = np.zeros(n, dtype=np.uint8)
    for i in ids:
        if not 1 <= i <= n:
            raise InvalidParameter(f"item id {i} outside 1..{n}")
        bits[i - 1] = 1
    return DefectivityVector(_frozen(bits), (), ids)
