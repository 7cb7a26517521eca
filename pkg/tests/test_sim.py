import math

import numpy as np
import pytest
from scipy import stats

from paoicache.analytic import queue_peak_age
from paoicache.model import Catalog, PhyParams, TrafficParams, make_policy
from paoicache.optimize import uc_policy
from paoicache.sim import (
    SimConfig,
    SpatialRealization,
    assign_caches,
    attempt_outcomes,
    build_realization,
    conditional_link_rates,
    estimate,
    run_temporal,
    sample_ppp,
    simulate_stp,
)

LAM = 3 / (250**2 * math.pi)


def isolated(beta):
    """One BS at 10 m, no interferers: service succeeds w.p. beta."""
    phy = PhyParams.from_db(23, LAM, 4.0, beta, 0.0)
    real = SpatialRealization(np.array([[10.0, 0.0]]), np.zeros((1, 1), dtype=int), {0: 0})
    return real, phy


def naive_queue(zeta, mu, slots, rng):
    """Slot-by-slot FIFO reference: arrival, then one service attempt."""
    queue, peaks, last_gen = [], [], None
    for t in range(slots):
        if rng.random() < zeta:
            queue.append(t)
        if queue and rng.random() < mu:
            gen = queue.pop(0)
            if last_gen is not None:
                peaks.append(t - last_gen + 1)
            last_gen = gen
    return np.mean(peaks)


def test_ppp_count_is_poisson():
    rng = np.random.default_rng(1)
    radius = 1000.0
    counts = np.array([sample_ppp(LAM, radius, rng).shape[0] for _ in range(2000)])
    mean = LAM * math.pi * radius**2
    assert abs(counts.mean() - mean) < 4 * math.sqrt(mean / counts.size)
    assert counts.var() == pytest.approx(mean, rel=0.15)


def test_ppp_radial_law():
    pts = sample_ppp(LAM, 2000.0, np.random.default_rng(2))
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert stats.kstest(r, lambda x: (x / 2000.0) ** 2).pvalue > 0.01


def test_cache_assignment_marginals_and_distinct():
    q = np.array([0.9, 0.6, 0.3, 0.15, 0.05])
    policy = make_policy(q, 2)
    cache = assign_caches(policy, 50_000, np.random.default_rng(3))
    assert all(len(set(row)) == 2 for row in cache[:1000])
    freq = np.array([(cache == f).any(axis=1).mean() for f in range(5)])
    np.testing.assert_allclose(freq, q, atol=0.01)


def test_mpc_caches_are_deterministic():
    cache = assign_caches(make_policy([1, 1, 0, 0], 2), 100, np.random.default_rng(4))
    assert np.all(np.sort(cache, axis=1) == [0, 1])


@pytest.mark.parametrize("q", [0.2, 0.5, 1.0])
def test_serving_distance_law(q):
    cat = Catalog(10, np.full(10, 0.1), int(round(10 * q)))
    policy = uc_policy(cat)
    rng = np.random.default_rng(5)
    dists = []
    for _ in range(800):
        real = build_realization(policy, PhyParams.from_db(23, LAM, 4, 0.5, 0), 1500.0, rng, [0])
        dists.append(real.distances[real.serving_bs[0]])
    cdf = lambda r: 1 - np.exp(-math.pi * LAM * q * r**2)
    assert stats.kstest(dists, cdf).pvalue > 0.01


def test_attempt_success_rate_isolated():
    flags = attempt_outcomes(10.0, np.empty(0), PhyParams.from_db(23, LAM, 4, 0.6, 0), 200_000, np.random.default_rng(6))
    assert flags.mean() == pytest.approx(0.6, abs=0.005)


def test_attempt_success_matches_product_formula():
    phy = PhyParams.from_db(23, LAM, 4.0, 0.7, 2.0)
    others = np.array([150.0, 220.0, 400.0])
    r = 100.0
    exact = phy.active_prob * np.prod(
        1 - phy.active_prob * phy.sinr_threshold / (phy.sinr_threshold + (others / r) ** phy.pathloss_exp)
    )
    flags = attempt_outcomes(r, others, phy, 400_000, np.random.default_rng(7))
    assert flags.mean() == pytest.approx(exact, abs=4 * math.sqrt(exact * (1 - exact) / flags.size))


@pytest.mark.parametrize("zeta,mu", [(0.1, 0.6), (0.3, 0.4)])
def test_isolated_queue_matches_closed_form(zeta, mu):
    real, phy = isolated(mu)
    cfg = SimConfig(region_radius=2000.0, num_realizations=1, slots_per_realization=400_000, warmup_slots=1000)
    tr = run_temporal(real, 0, phy, TrafficParams(zeta), cfg, np.random.default_rng(8))
    assert tr.peak_ages.mean() == pytest.approx(queue_peak_age(zeta, mu), rel=0.02)
    assert tr.stp == pytest.approx(mu, rel=0.01)


def test_vectorized_queue_matches_naive_loop():
    zeta, mu = 0.2, 0.5
    real, phy = isolated(mu)
    cfg = SimConfig(region_radius=2000.0, num_realizations=1, slots_per_realization=200_000, warmup_slots=0)
    fast = run_temporal(real, 0, phy, TrafficParams(zeta), cfg, np.random.default_rng(9)).peak_ages.mean()
    slow = naive_queue(zeta, mu, 200_000, np.random.default_rng(10))
    assert fast == pytest.approx(slow, rel=0.03)


def test_delivery_in_arrival_slot_gives_age_one():
    # zeta, mu close to 1: almost every packet is delivered in its own slot
    real, phy = isolated(0.999999)
    cfg = SimConfig(region_radius=2000.0, num_realizations=1, slots_per_realization=20_000, warmup_slots=0)
    tr = run_temporal(real, 0, phy, TrafficParams(0.999999), cfg, np.random.default_rng(11))
    assert np.median(tr.peak_ages) == 2


def test_conservation_and_guard():
    real, phy = isolated(0.3)
    cfg = SimConfig(region_radius=2000.0, num_realizations=1, slots_per_realization=50_000, queue_guard=50)
    tr = run_temporal(real, 0, phy, TrafficParams(0.5), cfg, np.random.default_rng(12))
    assert tr.arrivals == tr.departures + tr.backlog
    assert tr.unstable
    assert tr.attempts <= cfg.slots_per_realization


def test_density_guard():
    with pytest.raises(ValueError, match="enlarge region_radius"):
        SimConfig(region_radius=100.0, num_realizations=1).check_density(LAM)


def small_run(workers, seed=0, lam=LAM):
    cat = Catalog.zipf(30, 0.8, 27)
    phy = PhyParams.from_db(23, lam, 4.5, 0.15, 0.0)
    cfg = SimConfig(region_radius=1800.0, num_realizations=8, slots_per_realization=4000, warmup_slots=400, rng_seed=seed, track_files=(0, 5))
    return estimate(uc_policy(cat), cat, phy, TrafficParams(0.05), cfg, workers=workers)


def test_estimate_independent_of_worker_count():
    a, b = small_run(1), small_run(2)
    assert a.per_file_peak_age == b.per_file_peak_age
    assert small_run(1, seed=1).per_file_peak_age != a.per_file_peak_age


def test_link_rate_sampler_mean_matches_attempts():
    phy = PhyParams.from_db(23, LAM, 4.5, 0.5, 0.0)
    mus = conditional_link_rates(0.5, phy, 1500.0, 20_000, seed=3)
    direct = simulate_stp(0.5, phy, 1500.0, 400, 400, seed=4)
    assert mus.mean() == pytest.approx(direct.mean, abs=direct.half_width + 0.01)
    assert np.all((mus > 0) & (mus <= 0.5))
