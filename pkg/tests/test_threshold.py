import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtsim import (
    InvalidParameter,
    compute_theta,
    make_population,
    sample_dirichlet_priors,
    stats,
    truncate,
)
from gtsim.threshold import truncation_threshold


def test_threshold_formula_count_branch():
    # n=500, H=20, Pe=0.5: count branch log2(2000) wins over 2H/Pe = 80
    theta = truncation_threshold(0.5, 500, 20.0)
    assert -math.log2(theta) == pytest.approx(10.965784284662087)
    assert theta == pytest.approx(1.0 / 2000.0)


def test_threshold_formula_entropy_branch():
    # tiny entropy forces the 2H/Pe branch
    theta = truncation_threshold(0.5, 500, 1.0)
    assert -math.log2(theta) == pytest.approx(4.0)
    assert theta == pytest.approx(2.0**-4)


def test_threshold_two_fair_coins():
    pop = make_population([0.5, 0.5])
    theta = compute_theta(0.5, pop)
    assert theta == pytest.approx(1.0 / 8.0)
    result = truncate(pop, theta)
    assert result.kept.tolist() == [1, 2]
    assert result.discarded.size == 0
    assert result.rho == 0.0


def test_threshold_rejects_bad_error_target():
    pop = make_population([0.5])
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidParameter):
            compute_theta(bad, pop)


def test_truncate_basic():
    result = truncate(make_population([0.5, 0.0001, 0.3]), 0.001)
    assert result.kept.tolist() == [1, 3]
    assert result.discarded.tolist() == [2]
    assert result.rho == pytest.approx(0.0001)


def test_truncate_zero_threshold_drops_only_zeros():
    result = truncate(make_population([0.0, 0.2, 0.0, 0.7]), 0.0)
    assert result.kept.tolist() == [2, 4]
    assert result.discarded.tolist() == [1, 3]
    assert result.rho == 0.0


def test_truncate_rejects_bad_theta():
    pop = make_population([0.5])
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(InvalidParameter):
            truncate(pop, bad)


def test_derived_threshold_keeps_discarded_mass_under_budget():
    # includes the near-1 error budget, where rho may approach but not pass 1/2
    pop = sample_dirichlet_priors(400, 6.0, 0.5, seed=11)
    for pe in (0.1, 0.3, 0.7, 0.99):
        theta = compute_theta(pe, pop)
        result = truncate(pop, theta)
        # brute-force mass oracle
        assert result.rho == pytest.approx(
            float(np.sum(pop.probs[pop.probs <= theta])), abs=1e-12
        )
        assert result.rho <= pe / 2 + 1e-12


@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=40),
    st.floats(min_value=1e-6, max_value=0.999),
)
@settings(max_examples=150)
def test_rho_bounded_by_count_and_entropy_arguments(probs, theta):
    pop = make_population(probs)
    result = truncate(pop, theta)
    assert result.rho <= pop.n * theta + 1e-9
    assert result.rho <= stats(pop).entropy_bits / (-math.log2(theta)) + 1e-9


@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=40),
    st.floats(min_value=0.0, max_value=0.99),
    st.floats(min_value=0.0, max_value=0.99),
)
@settings(max_examples=150)
def test_truncation_monotone_in_theta(probs, t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    pop = make_population(probs)
    kept_lo = set(truncate(pop, lo).kept.tolist())
    kept_hi = set(truncate(pop, hi).kept.tolist())
    assert kept_hi <= kept_lo


def test_discarded_defective_frequency_within_guarantee():
    # empirical frequency of "some discarded item is defective" stays under
    # Pe/2 plus sampling slack
    pe, trials = 0.4, 10_000
    pop = sample_dirichlet_priors(300, 5.0, 1.0, seed=21)
    theta = compute_theta(pe, pop)
    discarded = truncate(pop, theta).discarded
    probs = pop.probs_for(discarded)
    rng = np.random.default_rng(77)
    hits = (rng.random((trials, probs.size)) < probs).any(axis=1)
    assert hits.mean() <= pe / 2 + 3 * math.sqrt(pe / (2 * trials))
