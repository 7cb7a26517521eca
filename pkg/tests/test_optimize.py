import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paoicache.analytic import InfeasibleError, paoi, stability_thresholds
from paoicache.model import Catalog, PhyParams, TrafficParams
from paoicache.optimize import (
    kkt_marginals,
    mpc_policy,
    numeric_optimal_caching,
    optimal_caching,
    project_capped_simplex,
    uc_policy,
)

LAM = 3 / (250**2 * math.pi)
PHY = PhyParams.from_db(23, LAM, 4.5, 0.15, 0.0)
TRAFFIC = TrafficParams(0.05)


def brute_projection(y, lower, capacity, upper=1.0):
    """Bisection on tau for clip(y - tau) summing to capacity."""
    lo, hi = y.min() - upper - 1, y.max() - lower.min() + 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(y - mid, lower, upper).sum() > capacity:
            lo = mid
        else:
            hi = mid
    return np.clip(y - 0.5 * (lo + hi), lower, upper)


def test_baselines():
    cat = Catalog.zipf(5, 0.8, 2)
    np.testing.assert_array_equal(mpc_policy(cat).probs, [1, 1, 0, 0, 0])
    np.testing.assert_allclose(uc_policy(cat).probs, np.full(5, 0.4))


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=25),
    st.floats(0.0, 0.3),
    st.floats(0.0, 1.0),
)
def test_projection_matches_bisection(values, low, frac):
    y = np.array(values)
    lower = np.full(y.size, low)
    capacity = lower.sum() + frac * (y.size - lower.sum())
    x = project_capped_simplex(y, lower, capacity)
    assert x.sum() == pytest.approx(capacity, abs=1e-9)
    assert np.all(x >= lower - 1e-12) and np.all(x <= 1 + 1e-12)
    np.testing.assert_allclose(x, brute_projection(y, lower, capacity), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=15), st.floats(0.0, 1.0))
def test_projection_idempotent(values, frac):
    y = np.array(values)
    lower = np.zeros(y.size)
    capacity = frac * y.size
    x = project_capped_simplex(y, lower, capacity)
    np.testing.assert_allclose(project_capped_simplex(x, lower, capacity), x, atol=1e-12)


def test_projection_rejects_impossible_capacity():
    with pytest.raises(InfeasibleError):
        project_capped_simplex(np.zeros(3), np.zeros(3), 4.0)


def test_uniform_popularity_gives_uniform_policy():
    cat = Catalog(30, np.full(30, 1 / 30), 12)
    res = optimal_caching(cat, PHY, TRAFFIC)
    np.testing.assert_allclose(res.policy.probs, np.full(30, 0.4), atol=1e-9)


@pytest.mark.parametrize("cache_size", [10, 15, 22])
def test_square_root_rule_on_interior(cache_size):
    cat = Catalog.zipf(30, 0.8, cache_size)
    res = optimal_caching(cat, PHY, TRAFFIC)
    q = res.policy.probs
    q_c = float(stability_thresholds(PHY, TRAFFIC).critical_q[0])
    interior = [f for f in range(30) if f not in res.clamped_low and f not in res.clamped_high]
    assert len(interior) >= 2
    ratio = (q[interior] - q_c) / np.sqrt(cat.popularity[interior])
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)
    assert np.all(np.diff(q) <= 1e-12)
    assert q.sum() == pytest.approx(cache_size, abs=1e-9)


@pytest.mark.parametrize("cache_size", [10, 15, 22])
def test_kkt_equal_marginals(cache_size):
    cat = Catalog.zipf(30, 0.8, cache_size)
    res = optimal_caching(cat, PHY, TRAFFIC)
    grad = kkt_marginals(res.policy, cat, PHY, TRAFFIC)
    interior = [f for f in range(30) if f not in res.clamped_low and f not in res.clamped_high]
    np.testing.assert_allclose(grad[interior], grad[interior].mean(), rtol=1e-5)


@pytest.mark.parametrize("cache_size", [10, 20])
def test_closed_form_matches_numeric_on_its_objective(cache_size):
    cat = Catalog.zipf(30, 0.8, cache_size)
    closed = optimal_caching(cat, PHY, TRAFFIC).policy.probs
    numeric = numeric_optimal_caching(cat, PHY, TRAFFIC, "effective").policy.probs
    np.testing.assert_allclose(closed, numeric, atol=1e-6)


@pytest.mark.parametrize("cache_size", [10, 15, 25])
def test_optimal_dominates_uc(cache_size):
    cat = Catalog.zipf(30, 0.8, cache_size)
    opt = optimal_caching(cat, PHY, TRAFFIC)
    uc = paoi(uc_policy(cat), cat, PHY, TRAFFIC, "effective").weighted_paoi
    assert opt.objective <= uc + 1e-12


@pytest.mark.parametrize("objective", ["theorem1", "corollary1", "effective"])
def test_numeric_solver_beats_uc_on_its_objective(objective):
    cat = Catalog.zipf(30, 0.8, 15)
    res = numeric_optimal_caching(cat, PHY, TRAFFIC, objective)
    uc = paoi(uc_policy(cat), cat, PHY, TRAFFIC, objective).weighted_paoi
    assert res.objective <= uc + 1e-9
    assert res.policy.probs.sum() == pytest.approx(15, abs=1e-9)


def test_capacity_below_stability_floor_is_infeasible():
    cat = Catalog.zipf(30, 0.8, 5)
    with pytest.raises(InfeasibleError, match="capacity constraint binds"):
        optimal_caching(cat, PHY, TRAFFIC)
    with pytest.raises(InfeasibleError):
        numeric_optimal_caching(cat, PHY, TRAFFIC, "effective")


def test_full_cache_is_all_ones():
    cat = Catalog.zipf(30, 0.8, 30)
    np.testing.assert_allclose(optimal_caching(cat, PHY, TRAFFIC).policy.probs, 1.0)
