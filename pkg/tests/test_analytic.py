import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from paoicache.analytic import (
    InfeasibleError,
    critical_theta,
    effective_service_rate,
    file_paoi,
    interference_coefficients,
    inverse_stp_moment,
    mean_stp,
    paoi,
    queue_peak_age,
    stability_thresholds,
)
from paoicache.model import Catalog, PhyParams, TrafficParams, make_policy
from paoicache.optimize import uc_policy

LAM = 3 / (250**2 * math.pi)


def phy_of(beta=0.5, theta_db=0.0, alpha=4.5, lam=LAM, power=23.0):
    return PhyParams.from_db(power, lam, alpha, beta, theta_db)


def pgfl_exponent(k, phy, lower):
    """int_lower^inf 2y [(1 - b th/(th + y^a))^-k - 1] dy by quadrature."""
    b, th, a = phy.active_prob, phy.sinr_threshold, phy.pathloss_exp
    f = lambda y: 2 * y * math.expm1(-k * math.log1p(-b * th / (th + y**a)))
    total = 0.0
    edges = [lower, 1.0, 10.0, math.inf] if lower < 1 else [lower, 10.0, math.inf]
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-10, limit=400)[0]
    return total


# --- oracles ----------------------------------------------------------------


def test_queue_peak_age_closed_form():
    assert queue_peak_age(0.1, 1.0) == pytest.approx(11.0)
    assert queue_peak_age(0.2, 0.5) == pytest.approx(5 + 0.8 / 0.3)
    assert math.isinf(queue_peak_age(0.5, 0.5))


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("theta_db", [-5.0, 0.0, 5.0])
@pytest.mark.parametrize("k", [1, 2, 4])
def test_coefficients_match_pgfl_quadrature(beta, theta_db, k):
    phy = phy_of(beta, theta_db)
    g, e = interference_coefficients(k, phy)
    assert g == pytest.approx(pgfl_exponent(k, phy, 1.0), rel=1e-7)
    assert e == pytest.approx(pgfl_exponent(k, phy, 0.0), rel=1e-7)


def test_unmuted_variant_differs_from_quadrature():
    phy = phy_of(0.5, 3.0)
    g_rejected, _ = interference_coefficients(1, phy, "unmuted-w")
    assert abs(g_rejected - pgfl_exponent(1, phy, 1.0)) > 1e-3


def test_uncached_term_infinite_without_muting():
    _, e = interference_coefficients(1, phy_of(beta=1.0))
    assert math.isinf(e)
    assert math.isinf(inverse_stp_moment(1, 0.5, phy_of(beta=1.0)))
    assert math.isfinite(inverse_stp_moment(1, 1.0, phy_of(beta=1.0)))


def test_mean_stp_matches_quadrature():
    # q = 1: E[mu] = beta / (1 + int_1^inf 2y beta th/(th + y^a) dy)
    phy = phy_of(0.5, 2.0)
    b, th, a = phy.active_prob, phy.sinr_threshold, phy.pathloss_exp
    integral = integrate.quad(lambda y: 2 * y * b * th / (th + y**a), 1, math.inf, epsrel=1e-12)[0]
    assert mean_stp(1.0, phy) == pytest.approx(b / (1 + integral), rel=1e-10)


def test_mean_stp_isolated_limit():
    assert mean_stp(1.0, phy_of(1.0, -60.0)) == pytest.approx(1.0, abs=1e-5)


# --- properties -------------------------------------------------------------

betas = st.floats(0.1, 1.0)
thetas = st.floats(-10.0, 10.0)
qs = st.floats(0.05, 1.0)
zetas = st.floats(0.002, 0.1)


@settings(max_examples=60, deadline=None)
@given(betas, thetas, qs, zetas, st.floats(0.05, 3.0))
def test_paoi_monotone_in_theta(beta, theta_db, q, zeta, step):
    traffic = TrafficParams(zeta)
    lo = file_paoi(q, phy_of(beta, theta_db), traffic)[0]
    hi = file_paoi(q, phy_of(beta, theta_db + step), traffic)[0]
    assert hi >= lo * (1 - 1e-12)


@settings(max_examples=60, deadline=None)
@given(betas, thetas, qs, zetas, st.floats(0.01, 0.5))
def test_paoi_monotone_in_q(beta, theta_db, q, zeta, step):
    traffic = TrafficParams(zeta)
    phy = phy_of(beta, theta_db)
    q2 = min(1.0, q + step)
    assert file_paoi(q2, phy, traffic)[0] <= file_paoi(q, phy, traffic)[0] * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(betas, thetas, qs, zetas)
def test_theorem1_above_effective_rate_bound(beta, theta_db, q, zeta):
    # 1/(mu - zeta) is convex in 1/mu, so Jensen puts the effective-rate model below
    traffic, phy = TrafficParams(zeta), phy_of(beta, theta_db)
    eff = file_paoi(q, phy, traffic, "effective")[0]
    thm = file_paoi(q, phy, traffic, "theorem1")[0]
    assert thm >= eff * (1 - 1e-12) or math.isinf(thm)
    assert math.isinf(thm) == math.isinf(eff)


@settings(max_examples=40, deadline=None)
@given(betas, thetas, qs, st.floats(1e-3, 0.1))
def test_density_and_power_invariance_bitwise(beta, theta_db, q, zeta):
    traffic = TrafficParams(zeta)
    a = file_paoi(q, phy_of(beta, theta_db), traffic)[0]
    b = file_paoi(q, phy_of(beta, theta_db, lam=7 * LAM, power=40.0), traffic)[0]
    assert a == b or (math.isinf(a) and math.isinf(b))


def test_small_arrival_limit():
    phy = phy_of(0.5, 0.0)
    zeta = 1e-6
    m1 = inverse_stp_moment(1, 1.0, phy)
    assert file_paoi(1.0, phy, TrafficParams(zeta))[0] == pytest.approx(1 / zeta + m1, rel=1e-9)


def test_interference_free_limit():
    value = file_paoi(1.0, phy_of(1.0, -60.0), TrafficParams(0.1))[0]
    assert value == pytest.approx(11.0, rel=1e-5)


def test_missigned_control_is_lower():
    phy, traffic = phy_of(0.3, 0.0), TrafficParams(0.05)
    assert file_paoi(0.8, phy, traffic, "missigned")[0] < file_paoi(0.8, phy, traffic)[0]


@pytest.mark.parametrize("beta,theta_db,zeta", [(0.5, 0.0, 0.05), (0.3, 3.0, 0.02), (0.15, -3.0, 0.01)])
def test_stability_flip_at_critical_q(beta, theta_db, zeta):
    phy, traffic = phy_of(beta, theta_db), TrafficParams(zeta)
    q_c = float(stability_thresholds(phy, traffic).critical_q[0])
    assert math.isinf(file_paoi(q_c * (1 - 1e-9), phy, traffic)[0])
    assert math.isfinite(file_paoi(min(1.0, q_c * (1 + 1e-9)), phy, traffic)[0])
    assert effective_service_rate(q_c, phy) == pytest.approx(zeta, rel=1e-9)


def test_critical_theta_flip():
    phy, traffic = phy_of(0.5, 0.0), TrafficParams(0.05)
    th_c = critical_theta(phy, traffic)
    below = phy.replace(sinr_threshold=th_c * (1 - 1e-9))
    above = phy.replace(sinr_threshold=th_c * (1 + 1e-9))
    assert math.isfinite(file_paoi(1.0, below, traffic)[0])
    assert math.isinf(file_paoi(1.0, above, traffic)[0])


def test_critical_theta_decreases_with_arrival_rate():
    phy = phy_of(0.5, 0.0)
    values = [critical_theta(phy, TrafficParams(z)) for z in (0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_no_stable_q_raises():
    with pytest.raises(InfeasibleError):
        stability_thresholds(phy_of(0.7, 3.0), TrafficParams(0.05))


def test_report_conventions():
    phy, traffic = phy_of(0.15, 0.0), TrafficParams(0.05)
    cat = Catalog.zipf(4, 0.8, 2)
    report = paoi(make_policy([1, 1, 0, 0], 2), cat, phy, traffic)
    assert list(report.per_file_feasible) == [True, True, False, False]
    assert math.isinf(report.per_file_paoi[3])
    excess = report.per_file_paoi[0] - 20.0
    assert report.weighted_paoi == pytest.approx(20 + cat.popularity[:2].sum() * excess)
    assert report.weighted_paoi_cached == pytest.approx(report.per_file_paoi[0])


def test_uc_weighted_equals_per_file():
    phy, traffic = phy_of(0.15, 0.0), TrafficParams(0.05)
    cat = Catalog.zipf(30, 0.8, 27)
    report = paoi(uc_policy(cat), cat, phy, traffic)
    assert report.weighted_paoi == pytest.approx(report.per_file_paoi[0], rel=1e-12)
    assert report.converged
