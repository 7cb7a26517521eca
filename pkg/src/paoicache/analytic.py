"""Closed-form PAoI engine for the cache-enabled Poisson network.

Conditioned on the BS layout, the serving link of a user asking for file f
succeeds in a slot with probability

    mu = beta * prod_i (1 - beta * theta / (theta + (|x_i| / r)**alpha)),

independently across slots, so the queue is Geo/Geo/1 with service rate mu
and peak age 1/zeta + (1 - zeta)/(mu - zeta). Expanding in zeta/mu gives

    PAoI_f = 1/zeta + (1 - zeta) * sum_n zeta**n * E[mu**-(n+1)],

and every inverse moment has a closed form through the PGFL of the PPP and
the serving-distance law 2 pi lam q r exp(-pi lam q r^2):

    E[mu**-k] = beta**-k * q / (q - q*G_k - (1 - q)*E_k),

with G_k the interference from caching BSs beyond the serving distance
(2F1 terms) and E_k the interference from non-caching BSs anywhere (Beta
terms). E[mu**-k] is infinite once that denominator is non-positive, which
always happens for large enough k: the expansion is asymptotic (the exact
layout average is infinite, since mu < zeta has positive probability). It
is summed through a ratio-capped envelope, see ``_moment_sum``.

Stability (finite PAoI) is judged against the effective service rate
1 / E[1/mu]; the same criterion gives the critical caching probability and
the critical SINR threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .model import CachingPolicy, Catalog, PhyParams, TrafficParams
from .specialfn import DEFAULT_CONTROL, SeriesControl, SeriesConvergenceError, beta, gauss_2f1

MODELS = ("theorem1", "corollary1", "effective", "printed", "missigned")
VARIANTS = ("derived", "unmuted-w", "printed", "missigned")


class InfeasibleError(ValueError):
    """No caching probability makes the queue stable."""


@dataclass(frozen=True)
class PaoiReport:
    """Per-file and popularity-weighted peak AoI, in slots.

    ``weighted_paoi`` keeps uncached files at the 1/zeta baseline;
    ``weighted_paoi_cached`` renormalizes the popularity over cached files.
    """

    per_file_paoi: np.ndarray
    weighted_paoi: float
    weighted_paoi_cached: float
    per_file_feasible: np.ndarray
    truncation_terms_used: int
    converged: bool
    model: str


@dataclass(frozen=True)
class StabilityThresholds:
    g_value: float
    e_value: float
    critical_q: np.ndarray
    critical_theta: float | None = None


def queue_peak_age(arrival_rate: float, service_prob: float) -> float:
    """Mean peak age of a Geo/Geo/1 FCFS queue (slots); inf when unstable."""
    if not 0 < arrival_rate < 1:
        raise ValueError(f"arrival_rate must lie in (0, 1), got {arrival_rate}")
    if not 0 < service_prob <= 1:
        raise ValueError(f"service_prob must lie in (0, 1], got {service_prob}")
    if service_prob <= arrival_rate:
        return math.inf
    return 1.0 / arrival_rate + (1.0 - arrival_rate) / (service_prob - arrival_rate)


def _hyp_w(m: int, delta: float, z: float, control: SeriesControl) -> float:
    return gauss_2f1(m, m - delta, m - delta + 1, z, control)


def w_term(m: int, phy: PhyParams, control: SeriesControl = DEFAULT_CONTROL) -> float:
    """2F1(m, m - delta; m - delta + 1; -(1 - beta) theta)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    z = -(1.0 - phy.active_prob) * phy.sinr_threshold
    return _hyp_w(m, phy.delta, z, control)


def v_term(m: int, phy: PhyParams) -> float:
    """B(delta, m - delta)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return beta(phy.delta, m - phy.delta)


def mean_stp(q_f: float, phy: PhyParams, control: SeriesControl = DEFAULT_CONTROL) -> float:
    """Spatially averaged per-slot success probability (muting included).

    Averages beta * L_cached(s) * L_uncached(s) over the serving distance;
    the per-interferer factor is 1 - beta*theta/(theta + y**alpha), so the
    hypergeometric argument here is -theta. Independent of density and power.
    """
    if not 0 < q_f <= 1:
        raise ValueError(f"q_f must lie in (0, 1], got {q_f}")
    d, b, th = phy.delta, phy.active_prob, phy.sinr_threshold
    cached = b * d * th / (1 - d) * _hyp_w(1, d, -th, control)
    uncached = b * d * th**d * beta(d, 1 - d)
    return b * q_f / (q_f * (1 + cached) + (1 - q_f) * uncached)


@lru_cache(maxsize=4096)
def _coefficients(
    k: int, delta: float, b: float, th: float, variant: str, control: SeriesControl
) -> tuple[float, float]:
    cached = 0.0
    uncached = 0.0
    z = -th if variant == "unmuted-w" else -(1.0 - b) * th
    for m in range(1, k + 1):
        binom = float(math.comb(k, m))
        try:
            cached += binom * (b * th) ** m / (m - delta) * _hyp_w(m, delta, z, control)
            if variant == "printed":
                uncached += binom * b**m * th**delta * beta(delta, m - delta)
            elif b < 1.0:
                uncached += (
                    binom * b**m * th**delta * (1.0 - b) ** (delta - m) * beta(delta, m - delta)
                )
            else:
                uncached = math.inf
        except OverflowError:
            return math.inf, math.inf
    return delta * cached, delta * uncached


def interference_coefficients(
    k: int,
    phy: PhyParams,
    variant: str = "derived",
    control: SeriesControl = DEFAULT_CONTROL,
) -> tuple[float, float]:
    """(G_k, E_k): normalized PGFL exponents of the k-th inverse STP moment.

    G_k comes from caching interferers beyond the serving distance, E_k from
    non-caching interferers over the whole plane. ``variant`` selects the
    formula: "derived" (default), "unmuted-w" (hypergeometric argument
    -theta instead of -(1 - beta) theta) or "printed" (Beta term without the
    (1 - beta)**(delta - m) factor). E_k is infinite when beta == 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if variant not in ("derived", "unmuted-w", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    return _coefficients(
        k, phy.delta, phy.active_prob, phy.sinr_threshold, variant, control
    )


def _denominator(q: float, g: float, e: float, sign: float = -1.0) -> float:
    if q >= 1.0:
        return 1.0 + sign * g
    return q + sign * (q * g + (1.0 - q) * e)


def inverse_stp_moment(
    k: int,
    q_f: float,
    phy: PhyParams,
    variant: str = "derived",
    control: SeriesControl = DEFAULT_CONTROL,
) -> float:
    """E[mu**-k] over layouts, mu the conditional per-slot success probability.

    ``variant="missigned"`` flips the sign of the interference exponent, a
    deliberately wrong control for the validation harness.
    """
    if not 0 < q_f <= 1:
        raise ValueError(f"q_f must lie in (0, 1], got {q_f}")
    sign = -1.0
    if variant == "missigned":
        variant, sign = "derived", 1.0
    g, e = interference_coefficients(k, phy, variant, control)
    den = _denominator(q_f, g, e, sign)
    if not den > 0 or not math.isfinite(den):
        return math.inf
    return phy.active_prob ** (-k) * q_f / den


def effective_service_rate(
    q_f: float, phy: PhyParams, control: SeriesControl = DEFAULT_CONTROL
) -> float:
    """Harmonic-mean service rate 1 / E[1/mu]; 0 when E[1/mu] diverges."""
    m1 = inverse_stp_moment(1, q_f, phy, "derived", control)
    return 0.0 if math.isinf(m1) else 1.0 / m1


def _moment_sum(
    q_f: float, phy: PhyParams, zeta: float, variant: str, control: SeriesControl
) -> tuple[float, int, bool]:
    """Sum zeta**n E[mu**-(n+1)] with a geometric cap on the term ratio.

    The raw terms t_n eventually grow (and turn infinite), so the series is
    summed through the envelope t~_n = min(t_n, rho * t~_(n-1)) with
    rho = sqrt(zeta * E[1/mu]) < 1. Inverse moments are log-convex in their
    order, so the ratio t_n / t_(n-1) never decreases and is never below
    zeta * E[1/mu]: once the cap binds it binds for good, and the rest of
    the envelope is a geometric tail summed in closed form. Each envelope
    term is a minimum of functions increasing in theta and decreasing in
    q_f, which keeps the PAoI monotone in both.

    Returns (sum, raw terms used, converged); converged is False only when
    max_terms raw terms were used without the sum settling.
    """
    m1 = inverse_stp_moment(1, q_f, phy, variant, control)
    rho = math.sqrt(zeta * m1)
    total = prev = m1
    for n in range(1, control.max_terms):
        term = zeta**n * inverse_stp_moment(n + 1, q_f, phy, variant, control)
        if not term < rho * prev:
            return total + prev * rho / (1.0 - rho), n, True
        total += term
        prev = term
        if term <= control.rel_tol * total:
            return total, n + 1, True
    return total, control.max_terms, False


def _printed_series(
    q_f: float, phy: PhyParams, zeta: float, control: SeriesControl
) -> tuple[float, int]:
    inner = 0.0
    b = phy.active_prob
    for n in range(control.max_terms):
        g, e = interference_coefficients(n + 1, phy, "printed", control)
        term = zeta**n * b ** (-n - 1) * (q_f * g + (1.0 - q_f) * e)
        if not math.isfinite(term):
            return math.inf, n
        inner += term
        if abs(term) <= control.rel_tol * abs(inner):
            return inner, n + 1
    raise SeriesConvergenceError("printed Theorem-1 series not converged", inner, control.max_terms)


def file_paoi(
    q_f: float,
    phy: PhyParams,
    traffic: TrafficParams,
    model: str = "theorem1",
    control: SeriesControl = DEFAULT_CONTROL,
) -> tuple[float, int, bool]:
    """Peak AoI of one file cached with probability q_f.

    Returns (paoi, terms_used, converged). ``model`` is one of
    "theorem1" (capped moment series), "corollary1" (its two leading
    terms), "effective" (Geo/Geo/1 at the effective service rate),
    "printed" (the formula exactly as typeset, kept as a control) or
    "missigned" (interference entering with the wrong sign, a control).
    """
    zeta = traffic.arrival_rate
    if q_f <= 0:
        return math.inf, 0, True
    if model == "printed":
        try:
            inner, terms = _printed_series(q_f, phy, zeta, control)
        except SeriesConvergenceError:
            return math.inf, control.max_terms, False
        den = q_f - inner
        if not den > 0:
            return math.inf, terms, True
        return 1.0 / zeta + (1.0 - zeta) * q_f / den, terms, True

    variant = "missigned" if model == "missigned" else "derived"
    m1 = inverse_stp_moment(1, q_f, phy, variant, control)
    if not zeta * m1 < 1.0:
        return math.inf, 1, True
    if model == "effective":
        return 1.0 / zeta + (1.0 - zeta) * m1 / (1.0 - zeta * m1), 1, True
    if model in ("theorem1", "missigned"):
        total, terms, converged = _moment_sum(q_f, phy, zeta, variant, control)
    elif model == "corollary1":
        m2 = inverse_stp_moment(2, q_f, phy, "derived", control)
        total, terms, converged = m1 + zeta * m2, 2, True
    else:
        raise ValueError(f"unknown model {model!r}")
    return 1.0 / zeta + (1.0 - zeta) * total, terms, converged


def paoi(
    policy: CachingPolicy,
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    model: str = "theorem1",
    control: SeriesControl = DEFAULT_CONTROL,
) -> PaoiReport:
    """Popularity-weighted PAoI of a caching policy under the chosen model."""
    if policy.num_files != catalog.num_files:
        raise ValueError("policy and catalog disagree on the number of files")
    zeta = traffic.arrival_rate
    values = np.empty(catalog.num_files)
    terms_used = 0
    converged = True
    for f, q in enumerate(policy.probs):
        values[f], terms, conv = file_paoi(float(q), phy, traffic, model, control)
        terms_used = max(terms_used, terms)
        converged &= conv
    feasible = np.isfinite(values)
    cached = policy.probs > 0
    p = catalog.popularity
    if np.any(cached & ~feasible):
        weighted = weighted_cached = math.inf
    else:
        excess = p[cached] * (values[cached] - 1.0 / zeta)
        weighted = 1.0 / zeta + float(excess.sum())
        weighted_cached = 1.0 / zeta + float(excess.sum() / p[cached].sum())
    values.setflags(write=False)
    feasible.setflags(write=False)
    return PaoiReport(values, weighted, weighted_cached, feasible, terms_used, bool(converged), model)


def paoi_theorem1(policy, catalog, phy, traffic, control: SeriesControl = DEFAULT_CONTROL):
    return paoi(policy, catalog, phy, traffic, "theorem1", control)


def paoi_corollary1(policy, catalog, phy, traffic, control: SeriesControl = DEFAULT_CONTROL):
    return paoi(policy, catalog, phy, traffic, "corollary1", control)


def _printed_thresholds(phy, traffic, control):
    zeta, b = traffic.arrival_rate, phy.active_prob
    g_sum = e_sum = 0.0
    for n in range(control.max_terms):
        g, e = interference_coefficients(n + 1, phy, "printed", control)
        scale = zeta**n * b ** (-n - 1)
        dg, de = scale * g, scale * e
        g_sum += dg
        e_sum += de
        if not (math.isfinite(g_sum) and math.isfinite(e_sum)):
            raise InfeasibleError("printed G/E series diverge")
        if dg <= control.rel_tol * g_sum and de <= control.rel_tol * e_sum:
            return g_sum, e_sum
    raise SeriesConvergenceError("printed G/E series not converged", g_sum, control.max_terms)


def critical_theta(
    phy: PhyParams, traffic: TrafficParams, control: SeriesControl = DEFAULT_CONTROL
) -> float:
    """Largest SINR threshold (linear) keeping a fully cached file stable.

    Solves effective_service_rate(1, theta) == zeta; the rate falls
    monotonically from beta at theta -> 0.
    """
    zeta = traffic.arrival_rate
    if zeta >= phy.active_prob:
        raise InfeasibleError(f"arrival rate {zeta} is not below the activity {phy.active_prob}")

    def excess(log_theta: float) -> float:
        trial = phy.replace(sinr_threshold=math.exp(log_theta))
        g, _ = interference_coefficients(1, trial, "derived", control)
        return phy.active_prob * (1.0 - g) - zeta

    lo, hi = math.log(1e-12), 0.0
    while excess(hi) > 0:
        hi += 2.0
        if hi > 200:
            raise InfeasibleError("no finite critical SINR threshold")
    return math.exp(brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500))


def stability_thresholds(
    phy: PhyParams,
    traffic: TrafficParams,
    control: SeriesControl = DEFAULT_CONTROL,
    num_files: int = 1,
    with_critical_theta: bool = False,
    variant: str = "derived",
) -> StabilityThresholds:
    """G, E and the critical caching probability q_c = E / (1 - G + E).

    With the derived model G = G_1 + zeta/beta and E = E_1, so that
    q > q_c exactly when zeta * E[1/mu] < 1.
    """
    if variant == "printed":
        g, e = _printed_thresholds(phy, traffic, control)
    elif variant == "derived":
        g1, e = interference_coefficients(1, phy, "derived", control)
        g = g1 + traffic.arrival_rate / phy.active_prob
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if not 1.0 - g > 0:
        raise InfeasibleError(
            f"1 - G = {1.0 - g:.6g} <= 0: no caching probability gives a finite PAoI"
        )
    q_c = 1.0 if math.isinf(e) else e / (1.0 - g + e)
    theta_c = critical_theta(phy, traffic, control) if with_critical_theta else None
    critical = np.full(num_files, q_c)
    critical.setflags(write=False)
    return StabilityThresholds(g, e, critical, theta_c)
