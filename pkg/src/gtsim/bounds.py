"""Closed-form test-count and success-probability bounds.

Quantities computed here:

* per-set expected-test bound
      h(S) + P_S log2(gamma) + P_S log2(P_S) + P_S + 1
* global expected-test bound
      t_bd = (H + 3*mu + 1) + 2*sqrt(mu * (-log2(2*theta)))
* Bernstein tail parameters over the retained items
      L = sum l_j^2 p_j (1 - p_j),  M = -log2(theta) + 1,
      psi = (L / (4 M^2))^(-1/3),   t_nec = t_bd + psi * H
  with the stopping guarantee
      P(success) >= 1 - (1/2) sqrt(mu / H) - exp(-(L / (4 M^2))^(1/3))
* reference success-probability bounds for a fixed budget T:
  the entropy bound min(1, T / H), the counting bound min(1, 2^T / C(n, k)),
  and the both-sides-splitting baseline expectation 2H + 2*mu
* the sparsity coefficient under a generalized fullness threshold
      f(a, c) = log2(a + c) + 1 + 1/a + (1 - c) log2(1 - c)

All entropies are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .codetree import CodeTree, check_ratio
from .errors import DegeneratePartition, InvalidParameter
from .partition import PartitionResult, SearchSet, optimal_gamma
from .priors import Population, binary_entropy, stats


def set_test_bound(sset: SearchSet, gamma: float) -> float:
    """Expected-test bound for one bounded-ratio set."""
    check_ratio(sset, gamma)
    total = float(np.sum(sset.probs))
    raw_entropy = float(-np.sum(sset.probs * np.log2(sset.probs)))
    return raw_entropy + total * math.log2(gamma) + total * math.log2(total) + total + 1.0


@dataclass(frozen=True)
class GlobalTestBound:
    """Global expected-test bound with its two-term decomposition."""

    total: float    # base + bracket
    base: float     # H + 3*mu + 1
    bracket: float  # binning/packing overhead at the optimizing gamma
    gamma: float    # the optimizing ratio bound

    def __float__(self) -> float:
        return self.total


def global_test_bound(pop: Population, theta: float) -> GlobalTestBound:
    """Expected tests to recover all retained defectives, optimized over gamma."""
    if not 0.0 < theta < 0.5:
        raise InvalidParameter(f"theta must be in (0, 1/2), got {theta}")
    st = stats(pop)
    base = st.entropy_bits + 3.0 * st.mu + 1.0
    if st.mu > 0:
        gamma = optimal_gamma(st.mu, theta)
        bracket = 2.0 * math.sqrt(st.mu * (-math.log2(2.0 * theta)))
    else:
        gamma = 2.0
        bracket = 0.0
    return GlobalTestBound(total=base + bracket, base=base, bracket=bracket, gamma=gamma)


@dataclass(frozen=True)
class BoundsReport:
    """Bound bundle for one configuration (population, theta, realized depths)."""

    t_bd: float
    big_l: float           # Bernstein variance proxy, tests^2
    big_m: float           # uniform depth bound, tests
    psi: float
    t_nec: float
    success_lb: float      # may be vacuous (< 0); see valid
    laminar_bd: float
    capacity_ratio: float  # H / t_nec, bits per test
    entropy_bits: float
    mu: float
    theta: float
    valid: bool            # success_lb is positive and the variance proxy is non-degenerate

    def success_ub(self, budget: float) -> float:
        """Entropy upper bound on success probability at a test budget, clamped to [0, 1]."""
        if self.entropy_bits <= 0.0:
            return 1.0
        return min(1.0, max(0.0, budget / self.entropy_bits))


def _lengths_of(trees: Sequence[Union[CodeTree, np.ndarray, Sequence[int]]]) -> list[np.ndarray]:
    out = []
    for t in trees:
        arr = t.lengths if isinstance(t, CodeTree) else np.asarray(t, dtype=np.float64)
        out.append(np.asarray(arr, dtype=np.float64))
    return out


def bernstein_report(
    parts: PartitionResult,
    trees: Sequence[Union[CodeTree, np.ndarray, Sequence[int]]],
    pop: Population,
    theta: float,
) -> BoundsReport:
    """Tail-bound report from realized leaf depths.

    `trees` supplies one depth array per set (CodeTree objects or raw arrays,
    aligned with the partition's sets).
    """
    if not parts.sets:
        raise DegeneratePartition("no retained items: tail bounds are undefined")
    lengths = _lengths_of(trees)
    if len(lengths) != len(parts.sets):
        raise InvalidParameter("one depth array per search set is required")
    big_l = 0.0
    for sset, ell in zip(parts.sets, lengths):
        if ell.shape[0] != len(sset):
            raise InvalidParameter("depth array does not match its set size")
        big_l += float(np.sum(ell**2 * sset.probs * (1.0 - sset.probs)))
    big_m = -math.log2(theta) + 1.0
    st = stats(pop)
    tbd = global_test_bound(pop, theta)
    if big_l > 0.0:
        phi = big_l / (4.0 * big_m**2)
        psi = phi ** (-1.0 / 3.0)
        tail = math.exp(-(phi ** (1.0 / 3.0)))
    else:
        psi = math.inf
        tail = 1.0
    t_nec = tbd.total + psi * st.entropy_bits if math.isfinite(psi) else math.inf
    if st.entropy_bits > 0.0:
        success_lb = 1.0 - 0.5 * math.sqrt(st.mu / st.entropy_bits) - tail
    else:
        success_lb = -math.inf
    return BoundsReport(
        t_bd=tbd.total,
        big_l=big_l,
        big_m=big_m,
        psi=psi,
        t_nec=t_nec,
        success_lb=success_lb,
        laminar_bd=laminar_expected_tests(st.entropy_bits, st.mu),
        capacity_ratio=st.entropy_bits / t_nec if math.isfinite(t_nec) and t_nec > 0 else 0.0,
        entropy_bits=st.entropy_bits,
        mu=st.mu,
        theta=float(theta),
        valid=bool(big_l > 0.0 and success_lb > 0.0),
    )


def success_upper_bound(budget: float, entropy_bits: float) -> float:
    """min(1, T / H): no strategy beats the entropy rate of one bit per test."""
    if budget < 0:
        raise InvalidParameter(f"budget must be >= 0, got {budget}")
    if entropy_bits <= 0.0:
        return 1.0
    return min(1.0, budget / entropy_bits)


def counting_success_bound(budget: float, n: int, k: int) -> float:
    """min(1, 2^T / C(n, k)) for the fixed-size-defective-set reference model,
    evaluated in the log domain."""
    if k > n or k < 0 or n < 1:
        raise InvalidParameter(f"need 0 <= k <= n with n >= 1, got n={n}, k={k}")
    if budget < 0:
        raise InvalidParameter(f"budget must be >= 0, got {budget}")
    log2_comb = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    ) / math.log(2.0)
    return min(1.0, 2.0 ** (budget - log2_comb))


def laminar_expected_tests(entropy_bits: float, mu: float) -> float:
    """Expected-test guarantee of the both-sides-splitting baseline: 2H + 2*mu."""
    return 2.0 * entropy_bits + 2.0 * mu


def budget_lower_bound(entropy_bits: float, epsilon: float) -> float:
    """(1 - epsilon) * H: budget below which success probability 1 - epsilon
    is unreachable by the entropy bound."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidParameter(f"epsilon must be in [0, 1], got {epsilon}")
    return (1.0 - epsilon) * entropy_bits


@dataclass(frozen=True)
class ReferenceBounds:
    entropy_ub: float
    counting_ub: float
    laminar_bd: float


def reference_bounds(budget: float, entropy_bits: float, mu: float, n: int, k: int) -> ReferenceBounds:
    return ReferenceBounds(
        entropy_ub=success_upper_bound(budget, entropy_bits),
        counting_ub=counting_success_bound(budget, n, k),
        laminar_bd=laminar_expected_tests(entropy_bits, mu),
    )


def sparsity_coefficient(fullness: float, cap: float) -> float:
    """Coefficient of mu in the global bound when sets close at mass `fullness`
    and all priors are at most `cap`:

        f(a, c) = log2(a + c) + 1 + 1/a + (1 - c) * log2(1 - c)
    """
    if not 0.0 < cap <= 0.5:
        raise InvalidParameter(f"cap must be in (0, 1/2], got {cap}")
    if not 0.0 < fullness <= 1.0:
        raise InvalidParameter(f"fullness must be in (0, 1], got {fullness}")
    return (
        math.log2(fullness + cap)
        + 1.0
        + 1.0 / fullness
        + (1.0 - cap) * math.log2(1.0 - cap)
    )


def optimal_fullness(cap: float, resolution: float = 1e-5) -> tuple[float, float]:
    """Grid argmin of the sparsity coefficient over fullness in (0, 1]."""
    if not 0.0 < resolution < 1.0:
        raise InvalidParameter(f"resolution must be in (0, 1), got {resolution}")
    grid = np.arange(resolution, 1.0 + resolution / 2, resolution)
    values = np.log2(grid + cap) + 1.0 + 1.0 / grid + (1.0 - cap) * math.log2(1.0 - cap)
    best = int(np.argmin(values))
    return float(grid[best]), float(values[best])


def identical_prior_report(n: int, p: float) -> BoundsReport:
    """Closed-form report for n items with identical prior p.

    Mirrors the real pipeline without materializing a population: the error
    budget is sqrt(mu / H), the threshold follows from it, full sets hold
    ceil(1/(2p)) items, and every item's depth is the log-ceiling of its set
    size. Used to evaluate capacity trends at scales where building trees is
    impractical; cross-checked against the materialized pipeline in tests.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not 0.0 < p < 0.5:
        raise InvalidParameter(f"p must be in (0, 1/2), got {p}")
    mu = n * p
    h = float(binary_entropy(p))
    entropy_bits = n * h
    pe = math.sqrt(mu / entropy_bits)
    if not pe < 1.0:
        raise InvalidParameter(f"degenerate regime: sqrt(mu/H) = {pe} >= 1")
    neg_log_theta = min(math.log2(2.0 * n / pe), 2.0 * entropy_bits / pe)
    theta = 2.0 ** (-neg_log_theta)
    if not theta < p:
        raise InvalidParameter(f"threshold {theta} would discard the whole population")

    set_size = math.ceil(0.5 / p)
    full_sets, remainder = divmod(n, set_size)
    depth = math.ceil(math.log2(set_size)) if set_size > 1 else 0
    big_l = p * (1.0 - p) * full_sets * set_size * depth**2
    if remainder:
        tail_depth = math.ceil(math.log2(remainder)) if remainder > 1 else 0
        big_l += p * (1.0 - p) * remainder * tail_depth**2
    big_m = neg_log_theta + 1.0

    base = entropy_bits + 3.0 * mu + 1.0
    bracket = 2.0 * math.sqrt(mu * (-math.log2(2.0 * theta)))
    t_bd = base + bracket
    if big_l > 0.0:
        phi = big_l / (4.0 * big_m**2)
        psi = phi ** (-1.0 / 3.0)
        tail = math.exp(-(phi ** (1.0 / 3.0)))
    else:
        psi, tail = math.inf, 1.0
    t_nec = t_bd + psi * entropy_bits if math.isfinite(psi) else math.inf
    success_lb = 1.0 - 0.5 * math.sqrt(mu / entropy_bits) - tail
    return BoundsReport(
        t_bd=t_bd,
        big_l=big_l,
        big_m=big_m,
        psi=psi,
        t_nec=t_nec,
        success_lb=success_lb,
        laminar_bd=laminar_expected_tests(entropy_bits, mu),
        capacity_ratio=entropy_bits / t_nec if math.isfinite(t_nec) and t_nec > 0 else 0.0,
        entropy_bits=entropy_bits,
        mu=mu,
        theta=theta,
        valid=bool(big_l > 0.0 and success_lb > 0.0),
    )
