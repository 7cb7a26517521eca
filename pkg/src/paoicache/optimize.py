"""Caching-probability optimization and the MPC / UC baselines.

The per-file PAoI in the effective-rate form is

    1/zeta + (1 - zeta)/beta * q / (A q - E),   A = 1 - G + E,

with G = G_1 + zeta/beta and E = E_1 (see ``analytic.stability_thresholds``).
It is convex and decreasing in q on (q_c, 1] with q_c = E/A, and the KKT
conditions of the popularity-weighted sum under sum(q) = C give the square
root water-filling

    q_f(eta) = clamp(q_c + a * sqrt(p_f * E / eta), q_c, 1),
    a = sqrt((1 - zeta)/beta) / A.

The projected-gradient solver minimizes any analytic objective directly and
serves as the cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import InfeasibleError, file_paoi, paoi, stability_thresholds
from .model import CAPACITY_TOL, Catalog, CachingPolicy, PhyParams, TrafficParams, make_policy
from .specialfn import DEFAULT_CONTROL, SeriesControl

OBJECTIVES = ("theorem1", "corollary1", "effective")
CAPACITY_BISECTION_TOL = 1e-10
FD_MARGIN = 1e-9  # keeps the projected-gradient iterates off the singular floor
STALL_TOL = 1e-6
MAX_HALVINGS = 80
FLAT_WINDOW = 5
FLAT_RTOL = 1e-10


class OptimizationError(ArithmeticError):
    """The solver failed to converge; ``trace`` holds its history."""

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class OptimizationResult:
    policy: CachingPolicy
    multiplier: float
    objective: float
    clamped_low: frozenset
    clamped_high: frozenset
    iterations: int
    model: str


def mpc_policy(catalog: Catalog) -> CachingPolicy:
    """Most popular caching: every BS stores files 1..C."""
    q = np.zeros(catalog.num_files)
    q[: catalog.cache_size] = 1.0
    return make_policy(q, catalog.cache_size)


def uc_policy(catalog: Catalog) -> CachingPolicy:
    """Uniform caching: q_f = C/F."""
    q = np.full(catalog.num_files, catalog.cache_size / catalog.num_files)
    return make_policy(q, catalog.cache_size)


def project_capped_simplex(y, lower, capacity: float, upper=1.0) -> np.ndarray:
    """Euclidean projection of y onto {lower <= x <= upper, sum(x) = capacity}.

    The solution is clip(y - tau, lower, upper); sum(x) is piecewise linear
    and non-increasing in tau, so tau is found exactly between breakpoints.
    """
    y = np.asarray(y, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), y.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), y.shape)
    if np.any(lower > upper) or not lower.sum() - 1e-12 <= capacity <= upper.sum() + 1e-12:
        raise InfeasibleError(
            f"capacity {capacity} outside [{lower.sum():.12g}, {upper.sum():.12g}]"
        )

    def total(tau):
        return np.clip(y - tau, lower, upper).sum()

    points = np.unique(np.concatenate([y - lower, y - upper]))
    sums = np.array([total(t) for t in points])
    # sums is non-increasing in tau; find the segment holding the capacity
    idx = np.searchsorted(-sums, -capacity, side="left")
    if idx == 0:
        tau = points[0]
    elif idx == points.size:
        tau = points[-1]
    else:
        t0, t1 = points[idx - 1], points[idx]
        s0, s1 = sums[idx - 1], sums[idx]
        tau = t0 if s0 == s1 else t0 + (s0 - capacity) * (t1 - t0) / (s0 - s1)
    x = np.clip(y - tau, lower, upper)
    # remove the last rounding residue on a free coordinate
    free = np.flatnonzero((x > lower) & (x < upper))
    if free.size:
        x[free] += (capacity - x.sum()) / free.size
        x = np.clip(x, lower, upper)
    return x


def _lemma_coefficients(phy, traffic, coefficients, control):
    zeta, b = traffic.arrival_rate, phy.active_prob
    th = stability_thresholds(phy, traffic, control, variant=coefficients)
    g, e = th.g_value, th.e_value
    q_c = float(th.critical_q[0])
    if math.isinf(e):
        return math.inf, q_c, q_c, e
    denom = 1.0 - g + e
    if coefficients == "printed":
        a = (1.0 - zeta) / (b * denom)
        offset = (1.0 - zeta) * e / (b * denom)
    else:
        a = math.sqrt((1.0 - zeta) / b) / denom
        offset = q_c
    return a, offset, q_c, e


def _check_capacity(catalog: Catalog, q_c: float):
    need = catalog.num_files * q_c
    if need > catalog.cache_size + CAPACITY_TOL:
        raise InfeasibleError(
            f"capacity constraint binds: F * q_c = {need:.6g} exceeds cache size "
            f"C = {catalog.cache_size} (q_c = {q_c:.6g})"
        )


def _clamp_sets(q: np.ndarray, low: float) -> tuple[frozenset, frozenset]:
    at_low = frozenset(int(i) for i in np.flatnonzero(np.abs(q - low) <= 1e-12))
    at_high = frozenset(int(i) for i in np.flatnonzero(q >= 1.0 - 1e-12))
    return at_low, at_high


def optimal_caching(
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    coefficients: str = "derived",
    control: SeriesControl = DEFAULT_CONTROL,
) -> OptimizationResult:
    """Closed-form square-root water-filling with bisection on the multiplier.

    ``coefficients="derived"`` uses the exact KKT coefficients of the
    effective-rate objective; ``"printed"`` uses a = (1-zeta)/(beta A) and
    b = (1-zeta) E/(beta A) with the literal G/E series, kept so the two can
    be compared against the numeric solver.
    """
    if coefficients not in ("derived", "printed"):
        raise ValueError(f"unknown coefficients {coefficients!r}")
    a, offset, q_c, e = _lemma_coefficients(phy, traffic, coefficients, control)
    _check_capacity(catalog, q_c)
    p = catalog.popularity
    C = catalog.cache_size
    if catalog.num_files * max(offset, q_c) > C + CAPACITY_TOL:
        raise InfeasibleError(
            f"capacity constraint binds: the {coefficients} offset b = {offset:.6g} "
            f"gives F * b > C = {C}"
        )

    if math.isinf(a) or e == 0.0:
        # nothing to trade off: either every file needs q = 1, or the objective is flat
        q = np.ones(catalog.num_files) if math.isinf(a) else np.full(catalog.num_files, C / catalog.num_files)
        return _finish(q, catalog, phy, traffic, math.nan, 0, q_c, "effective", control)

    def q_of(eta: float) -> np.ndarray:
        return np.clip(offset + a * np.sqrt(p * e / eta), q_c, 1.0)

    def excess(eta: float) -> float:
        return q_of(eta).sum() - C

    lo = hi = 1.0
    for _ in range(400):
        if excess(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise OptimizationError("could not bracket the multiplier from above")
    for _ in range(400):
        if excess(lo) >= 0:
            break
        lo /= 2.0
    else:
        raise OptimizationError("could not bracket the multiplier from below")

    iterations = 0
    s_lo, s_hi = q_of(lo).sum(), q_of(hi).sum()
    while iterations < 500:
        iterations += 1
        mid = math.sqrt(lo * hi)
        s = q_of(mid).sum()
        if not s_hi - 1e-12 <= s <= s_lo + 1e-12:
            raise OptimizationError(f"sum of q*(eta) not monotone at eta={mid!r}")
        if abs(s - C) <= CAPACITY_BISECTION_TOL or hi / lo - 1.0 < 1e-15:
            break
        if s > C:
            lo, s_lo = mid, s
        else:
            hi, s_hi = mid, s
    q = q_of(mid)
    if abs(q.sum() - C) > CAPACITY_BISECTION_TOL:
        free = np.flatnonzero((q > q_c) & (q < 1.0))
        if not free.size:
            raise OptimizationError(f"bisection ended with sum {q.sum()!r} != {C}")
        q[free] += (C - q.sum()) / free.size
    return _finish(q, catalog, phy, traffic, mid, iterations, q_c, "effective", control)


def _finish(q, catalog, phy, traffic, eta, iterations, q_c, model, control):
    policy = make_policy(q, catalog.cache_size)
    report = paoi(policy, catalog, phy, traffic, model, control)
    low, high = _clamp_sets(policy.probs, q_c)
    return OptimizationResult(policy, eta, report.weighted_paoi, low, high, iterations, model)


def per_file_objective(
    q_f: float,
    p_f: float,
    phy: PhyParams,
    traffic: TrafficParams,
    objective: str,
    control: SeriesControl = DEFAULT_CONTROL,
) -> float:
    """p_f times the excess of the file's PAoI over the 1/zeta baseline."""
    value, _, _ = file_paoi(q_f, phy, traffic, objective, control)
    return p_f * (value - 1.0 / traffic.arrival_rate)


def objective_gradient(
    q: np.ndarray,
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    objective: str,
    floor: float,
    control: SeriesControl = DEFAULT_CONTROL,
    rel_step: float = 1e-6,
) -> np.ndarray:
    """Central finite differences of the weighted PAoI.

    The objective is a sum over files, so each coordinate only re-evaluates
    its own term. Every objective blows up like 1/(q - floor) at the
    stability floor, so the step is relative to that distance; a step
    relative to q itself would leave O(1e-5) truncation error close to it.
    Near q = 1 the stencil is shifted to stay inside the box.
    """
    grad = np.empty_like(q)
    for f, (qf, pf) in enumerate(zip(q, catalog.popularity)):
        h = rel_step * (qf - floor)
        up, down = min(qf + h, 1.0), qf - h
        if not h > 0:
            grad[f] = -math.inf
            continue
        grad[f] = (
            per_file_objective(up, pf, phy, traffic, objective, control)
            - per_file_objective(down, pf, phy, traffic, objective, control)
        ) / (up - down)
    return grad


def _total(q, catalog, phy, traffic, objective, control) -> float:
    return sum(
        per_file_objective(qf, pf, phy, traffic, objective, control)
        for qf, pf in zip(q, catalog.popularity)
    )


def objective_floor(
    phy: PhyParams,
    traffic: TrafficParams,
    objective: str,
    control: SeriesControl = DEFAULT_CONTROL,
) -> float:
    """Smallest caching probability at which the per-file objective is finite.

    This is q_c for the theorem1 and effective objectives; the two-term
    corollary also needs E[mu**-2] finite, which can push it higher.
    """
    q_c = float(stability_thresholds(phy, traffic, control).critical_q[0])
    if q_c >= 1.0 or math.isfinite(file_paoi(min(q_c * (1 + 1e-12) + 1e-15, 1.0), phy, traffic, objective, control)[0]):
        return q_c
    lo, hi = q_c, 1.0
    if not math.isfinite(file_paoi(1.0, phy, traffic, objective, control)[0]):
        raise InfeasibleError(f"the {objective} objective is infinite even at q = 1")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.isfinite(file_paoi(mid, phy, traffic, objective, control)[0]):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15:
            break
    return hi


def numeric_optimal_caching(
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    objective_choice: str = "corollary1",
    control: SeriesControl = DEFAULT_CONTROL,
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> OptimizationResult:
    """Projected gradient descent on {floor <= q <= 1, sum q = C}.

    ``floor`` is where the chosen objective turns infinite (q_c, or higher
    for the corollary). Steps follow Barzilai-Borwein with Armijo
    backtracking. The stopping rule is ||q - P(q - g/|g|_inf)|| < tol: the
    gradient is normalized because finite differences near the floor carry
    roundoff of about 1e-9 relative to |g|, which can be large in absolute
    terms. If the line search can no longer move while that norm is below
    ``STALL_TOL`` the roundoff floor has been reached and the iterate is
    returned; the same holds when the objective has not moved by more than
    ``FLAT_RTOL`` over the last ``FLAT_WINDOW`` iterations.
    """
    if objective_choice not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective_choice!r}")
    q_c = float(stability_thresholds(phy, traffic, control).critical_q[0])
    _check_capacity(catalog, q_c)
    floor = objective_floor(phy, traffic, objective_choice, control)
    C = catalog.cache_size
    F = catalog.num_files
    if F * floor > C + CAPACITY_TOL:
        raise InfeasibleError(
            f"capacity constraint binds: the {objective_choice} objective needs "
            f"q >= {floor:.6g} for every file, F * q = {F * floor:.6g} > C = {C}"
        )
    if floor >= 1.0 or C / F - floor <= FD_MARGIN:
        # the feasible set is (numerically) a single point
        q = np.full(F, C / F)
        return _finish(q, catalog, phy, traffic, math.nan, 0, floor, objective_choice, control)

    # the objective is infinite on the floor itself; stay just inside
    lower = np.full(F, floor + FD_MARGIN)
    slack = (C - lower.sum()) / (1.0 - lower).sum()
    q = lower + slack * (1.0 - lower)

    def fun(x):
        return _total(x, catalog, phy, traffic, objective_choice, control)

    def grad(x):
        return objective_gradient(x, catalog, phy, traffic, objective_choice, floor, control)

    def pg_norm(x, g):
        scale = max(float(np.abs(g).max()), 1e-300)
        return float(np.linalg.norm(x - project_capped_simplex(x - g / scale, lower, C)))

    value = fun(q)
    if not math.isfinite(value):
        raise OptimizationError(f"objective is infinite at the starting point {q.tolist()}")
    g = grad(q)
    step = 1.0 / max(np.abs(g).max(), 1e-12)
    trace = []
    for it in range(1, max_iter + 1):
        norm = pg_norm(q, g)
        trace.append((value, norm, step))
        if norm < tol:
            break
        stalled = False
        for _ in range(MAX_HALVINGS):
            trial = project_capped_simplex(q - step * g, lower, C)
            # the projection's residue fix can move a point by an ulp, so
            # "no progress" is judged with a tolerance, not bit equality
            if np.max(np.abs(trial - q)) <= 1e-15:
                stalled = True
                break
            trial_value = fun(trial)
            if math.isfinite(trial_value) and trial_value <= value + 1e-4 * g @ (trial - q):
                break
            step *= 0.5
        else:
            stalled = True
        if stalled:
            # either the projected-gradient norm is at the finite-difference
            # noise floor, or the objective has stopped changing at double
            # precision; both mean no further progress is resolvable
            flat = len(trace) > FLAT_WINDOW and abs(trace[-FLAT_WINDOW - 1][0] - value) <= FLAT_RTOL * abs(value)
            if norm < STALL_TOL or flat:
                break
            raise OptimizationError(f"line search stalled with gradient norm {norm:.3g}", trace[-20:])
        new_g = grad(trial)
        s, y = trial - q, new_g - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else step * 2.0
        q, g, value = trial, new_g, trial_value
    else:
        raise OptimizationError(f"no convergence in {max_iter} iterations", trace[-20:])
    # at interior files d(objective)/dq_f = -eta, the capacity multiplier
    interior = (q > lower + 1e-9) & (q < 1.0 - 1e-9)
    eta = float(-g[interior].mean()) if interior.any() else math.nan
    return _finish(q, catalog, phy, traffic, eta, it, lower[0], objective_choice, control)


def kkt_marginals(
    policy: CachingPolicy,
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    objective: str = "effective",
    control: SeriesControl = DEFAULT_CONTROL,
) -> np.ndarray:
    """Finite-difference marginal cost dObjective/dq_f at the policy."""
    q_c = float(stability_thresholds(phy, traffic, control).critical_q[0])
    return objective_gradient(np.array(policy.probs), catalog, phy, traffic, objective, q_c, control)


def cross_check(
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    objective: str = "corollary1",
    control: SeriesControl = DEFAULT_CONTROL,
) -> tuple[OptimizationResult, OptimizationResult, float]:
    """Closed form against the projected-gradient arbiter.

    Returns (closed, numeric, max per-coordinate gap). A gap above 1e-4
    means the closed form does not minimize ``objective``; the numeric
    solution is then the one to trust for that objective.
    """
    closed = optimal_caching(catalog, phy, traffic, control=control)
    numeric = numeric_optimal_caching(catalog, phy, traffic, objective, control)
    gap = float(np.max(np.abs(closed.policy.probs - numeric.policy.probs)))
    return closed, numeric, gap
