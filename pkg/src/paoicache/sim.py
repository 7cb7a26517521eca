"""Spatial-temporal Monte Carlo of the cache-enabled Poisson network.

Each realization draws a PPP of BSs in a disc around the typical user at the
origin, fills every cache with exactly C files, and follows one file's
update queue at its serving BS slot by slot.

Given the layout, the slot outcomes of the serving link (serving BS active,
all interferers independently active, fresh Rayleigh fades) are i.i.d., so
the temporal loop is written as a stream of attempt outcomes consumed only
in busy slots plus the FIFO recursion

    D_k = max(D_(k-1), A_k - 1) + S_k,

with A_k the arrival slot and S_k the number of attempts the k-th packet
needs. A packet can be delivered in its arrival slot, so its system time is
D_k - A_k + 1, and the age right after delivery k is D_k - A_k + 1; the
peak just before it is D_k - A_(k-1) + 1.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import Catalog, CachingPolicy, PhyParams, TrafficParams

WORKERS_ENV = "PAOICACHE_WORKERS"
MIN_EXPECTED_BS = 100
_BLOCK = 2048


class EmptyEstimateError(RuntimeError):
    """No tracked file produced a single peak-age sample."""


@dataclass(frozen=True)
class SimConfig:
    region_radius: float
    num_realizations: int
    slots_per_realization: int = 20_000
    warmup_slots: int = 2_000
    rng_seed: int = 0
    track_files: tuple[int, ...] | str = "all"
    queue_guard: int = 10**6

    def __post_init__(self):
        if not self.region_radius > 0:
            raise ValueError(f"region_radius must be positive, got {self.region_radius}")
        if self.num_realizations < 1:
            raise ValueError(f"num_realizations must be >= 1, got {self.num_realizations}")
        if not 0 <= self.warmup_slots < self.slots_per_realization:
            raise ValueError(
                f"need 0 <= warmup_slots < slots_per_realization, got "
                f"{self.warmup_slots} and {self.slots_per_realization}"
            )
        if self.queue_guard < 1:
            raise ValueError(f"queue_guard must be >= 1, got {self.queue_guard}")
        if self.track_files != "all":
            object.__setattr__(self, "track_files", tuple(int(f) for f in self.track_files))
            if not self.track_files or min(self.track_files) < 0:
                raise ValueError("track_files must be 'all' or non-empty 0-based indices")

    def check_density(self, density: float) -> None:
        expected = density * math.pi * self.region_radius**2
        if expected < MIN_EXPECTED_BS:
            raise ValueError(
                f"expected BS count {expected:.1f} < {MIN_EXPECTED_BS}; enlarge region_radius"
            )

    def files(self, num_files: int) -> tuple[int, ...]:
        if self.track_files == "all":
            return tuple(range(num_files))
        if max(self.track_files) >= num_files:
            raise ValueError(f"track_files {self.track_files} out of range for F={num_files}")
        return self.track_files


@dataclass(frozen=True)
class SpatialRealization:
    bs_positions: np.ndarray  # (n, 2) metres
    bs_cache: np.ndarray  # (n, C) file indices
    serving_bs: dict = field(default_factory=dict)  # file -> BS index, files with coverage only

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(self.bs_positions[:, 0], self.bs_positions[:, 1])


@dataclass(frozen=True)
class TraceStats:
    """One file's temporal trace at one layout."""

    arrivals: int
    departures: int
    backlog: int
    attempts: int
    peak_ages: np.ndarray
    age_area: float
    age_slots: int
    unstable: bool

    @property
    def stp(self) -> float:
        return self.departures / self.attempts if self.attempts else 0.0


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float  # 95% CI half-width, nan with fewer than 2 samples
    count: int


@dataclass(frozen=True)
class SimResult:
    per_file_stp: dict
    per_file_peak_age: dict
    per_file_mean_age: dict
    unstable_files: frozenset
    sample_counts: dict
    uncovered_counts: dict

    def weighted_peak_age(self, catalog: Catalog) -> Estimate:
        """Popularity-weighted peak age over tracked, stable files.

        The weights are renormalized over the files that carry an estimate;
        per-file CIs are combined as if independent.
        """
        files = [f for f, e in self.per_file_peak_age.items() if e is not None]
        if not files:
            raise EmptyEstimateError("no file carries a peak-age estimate")
        w = catalog.popularity[files] / catalog.popularity[files].sum()
        means = np.array([self.per_file_peak_age[f].mean for f in files])
        hws = np.array([self.per_file_peak_age[f].half_width for f in files])
        counts = sum(self.per_file_peak_age[f].count for f in files)
        return Estimate(float(w @ means), float(np.sqrt(np.sum((w * hws) ** 2))), counts)


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the disc of the given radius, as an (n, 2) array."""
    if not (density > 0 and radius > 0):
        raise ValueError(f"density and radius must be positive, got {density}, {radius}")
    n = rng.poisson(density * math.pi * radius**2)
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def assign_caches(policy: CachingPolicy, num_bs: int, rng: np.random.Generator) -> np.ndarray:
    """Interval-partition placement: exactly C distinct files per BS.

    The q_f tile [0, C) back to back; one uniform u per BS selects the files
    whose intervals contain u, u + 1, ..., u + C - 1. Since q_f <= 1 no
    interval holds two of these points, and file f is picked with
    probability exactly q_f.
    """
    q = policy.probs
    C = policy.cache_size
    edges = np.concatenate([[0.0], np.cumsum(q)])
    points = rng.random(num_bs)[:, None] + np.arange(C)[None, :]
    idx = np.searchsorted(edges, points, side="right") - 1
    last = int(np.flatnonzero(q > 0)[-1])
    return np.minimum(idx, last)


def associate(realization: SpatialRealization, file: int) -> int | None:
    """Nearest BS whose cache holds the file (equal powers: max received power)."""
    holds = np.any(realization.bs_cache == file, axis=1)
    if not holds.any():
        return None
    d = np.where(holds, realization.distances, np.inf)
    return int(np.argmin(d))


def build_realization(
    policy: CachingPolicy, phy: PhyParams, radius: float, rng: np.random.Generator, files
) -> SpatialRealization:
    pos = sample_ppp(phy.bs_density, radius, rng)
    cache = assign_caches(policy, pos.shape[0], rng)
    real = SpatialRealization(pos, cache)
    for f in files:
        s = associate(real, f)
        if s is not None:
            real.serving_bs[f] = s
    return real


def attempt_outcomes(
    serving_dist: float,
    interferer_dists: np.ndarray,
    phy: PhyParams,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Success flags of ``count`` independent transmission attempts.

    Success needs the serving BS to be active and SIR > theta, with every
    interferer independently active and all fades Exp(1).
    """
    gains = interferer_dists ** (-phy.pathloss_exp)
    signal = serving_dist ** (-phy.pathloss_exp)
    out = np.empty(count, dtype=bool)
    for start in range(0, count, _BLOCK):
        b = min(_BLOCK, count - start)
        if gains.size:
            active = rng.random((b, gains.size)) < phy.active_prob
            fades = rng.exponential(size=(b, gains.size))
            interference = (active * fades) @ gains
        else:
            interference = np.zeros(b)
        own_active = rng.random(b) < phy.active_prob
        own_fade = rng.exponential(size=b)
        out[start : start + b] = own_active & (own_fade * signal > phy.sinr_threshold * interference)
    return out


def run_temporal(
    realization: SpatialRealization,
    file: int,
    phy: PhyParams,
    traffic: TrafficParams,
    config: SimConfig,
    rng: np.random.Generator,
) -> TraceStats:
    """FIFO update queue of one file at its serving BS over the configured slots."""
    serving = realization.serving_bs.get(file)
    if serving is None:
        raise ValueError(f"file {file} has no serving BS in this realization")
    T = config.slots_per_realization
    dist = realization.distances
    others = np.delete(dist, serving)

    arrivals = np.flatnonzero(rng.random(T) < traffic.arrival_rate)
    n = arrivals.size
    # draw attempt outcomes until every arrival is served or T attempts exist
    successes: list[np.ndarray] = []
    found = drawn = 0
    while found < n and drawn < T:
        b = min(max(4 * (n - found), _BLOCK), T - drawn)
        flags = attempt_outcomes(dist[serving], others, phy, b, rng)
        hits = np.flatnonzero(flags) + drawn
        successes.append(hits)
        found += hits.size
        drawn += b
    success_at = np.concatenate(successes)[:n] if successes else np.empty(0, dtype=np.int64)
    k = success_at.size

    # S_k attempts for packet k; Lindley form of the FIFO recursion
    service = np.diff(np.concatenate([[-1], success_at]))
    cum = np.cumsum(service)
    before = np.concatenate([[0], cum[:-1]])
    # running idle offset; starts from D_0 = -1 (empty system before slot 0)
    idle = np.maximum.accumulate(arrivals[:k] - 1 - before) if k else np.empty(0, dtype=np.int64)
    depart = cum + idle
    delivered = depart < T
    depart = depart[delivered]
    m = depart.size
    gen = arrivals[:m]

    # attempts actually consumed inside the horizon: busy slots
    busy_until = T - 1
    attempts = int(service[:m].sum())
    if m < n:
        start_next = max(depart[-1] if m else -1, arrivals[m] - 1) + 1
        attempts += max(0, busy_until - start_next + 1)

    backlog = int(n - m)
    in_system = np.searchsorted(arrivals, depart, side="right") - np.arange(1, m + 1)
    unstable = bool((in_system.size and in_system.max() > config.queue_guard) or backlog > config.queue_guard)

    peaks = depart[1:] - gen[:-1] + 1
    keep = depart[1:] >= config.warmup_slots
    peaks = peaks[keep]

    # time-average age over whole inter-delivery segments after warmup
    if m >= 2:
        seg_start = depart[:-1]
        seg_len = np.diff(depart)
        age0 = depart[:-1] - gen[:-1] + 1
        sel = seg_start >= config.warmup_slots
        area = float(np.sum(seg_len[sel] * age0[sel] + seg_len[sel] * (seg_len[sel] - 1) / 2))
        slots = int(seg_len[sel].sum())
    else:
        area, slots = 0.0, 0
    return TraceStats(n, m, backlog, attempts, peaks, area, slots, unstable)


def _ci(values: list[float]) -> Estimate | None:
    if not values:
        return None
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return Estimate(float(x.mean()), math.nan, int(x.size))
    return Estimate(float(x.mean()), float(1.96 * x.std(ddof=1) / math.sqrt(x.size)), int(x.size))


def _child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _one_realization(args):
    index, policy, phy, traffic, config, files = args
    rng = _child_rng(config.rng_seed, index)
    real = build_realization(policy, phy, config.region_radius, rng, files)
    out = {}
    for f in files:
        if f not in real.serving_bs:
            out[f] = None
            continue
        out[f] = run_temporal(real, f, phy, traffic, config, rng)
    return out


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    value = int(raw)
    if value < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1, got {raw!r}")
    return value


def estimate(
    policy: CachingPolicy,
    catalog: Catalog,
    phy: PhyParams,
    traffic: TrafficParams,
    config: SimConfig,
    workers: int | None = None,
) -> SimResult:
    """Pool per-realization statistics of every tracked file.

    Peak and mean age are layout averages: each realization contributes the
    mean of its own samples, so the estimate targets E over layouts of the
    conditional mean, the quantity the analytic formulas describe. Each
    realization has its own child RNG stream, so the result does not depend
    on the number of workers.
    """
    if policy.num_files != catalog.num_files:
        raise ValueError("policy and catalog disagree on the number of files")
    config.check_density(phy.bs_density)
    files = config.files(catalog.num_files)
    jobs = [(i, policy, phy, traffic, config, files) for i in range(config.num_realizations)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_realization, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_one_realization(j) for j in jobs]

    stp, peak, age = {}, {}, {}
    unstable, counts, uncovered = set(), {}, {}
    for f in files:
        stp_vals, peak_vals, age_vals = [], [], []
        n_samples = n_uncovered = 0
        for res in results:
            tr = res[f]
            if tr is None:
                n_uncovered += 1
                continue
            if tr.unstable:
                unstable.add(f)
            stp_vals.append(tr.stp)
            if tr.peak_ages.size:
                peak_vals.append(float(tr.peak_ages.mean()))
                n_samples += int(tr.peak_ages.size)
            if tr.age_slots:
                age_vals.append(tr.age_area / tr.age_slots)
        stp[f] = _ci(stp_vals)
        peak[f] = None if f in unstable else _ci(peak_vals)
        age[f] = None if f in unstable else _ci(age_vals)
        counts[f] = n_samples
        uncovered[f] = n_uncovered
    if all(peak[f] is None for f in files):
        raise EmptyEstimateError("every tracked file is unstable or has no samples")
    return SimResult(stp, peak, age, frozenset(unstable), counts, uncovered)


# ---------------------------------------------------------------------------
# link-level estimators used by the arbitration checks


def _serving_layout(q_f: float, phy: PhyParams, radius: float, rng):
    """Serving distance and interferer distances for a file cached w.p. q_f
    (independent per-BS caching; only the marginal matters for one file)."""
    pos = sample_ppp(phy.bs_density, radius, rng)
    dist = np.hypot(pos[:, 0], pos[:, 1])
    holds = rng.random(dist.size) < q_f
    if not holds.any():
        return None, None
    s = int(np.argmin(np.where(holds, dist, np.inf)))
    return dist[s], np.delete(dist, s)


def simulate_stp(
    q_f: float,
    phy: PhyParams,
    radius: float,
    num_realizations: int,
    attempts_per_realization: int,
    seed: int,
) -> Estimate:
    """Mean per-slot success probability over layouts, by direct attempts."""
    values = []
    for i in range(num_realizations):
        rng = _child_rng(seed, i)
        r0, others = _serving_layout(q_f, phy, radius, rng)
        if r0 is None:
            values.append(0.0)
            continue
        values.append(float(attempt_outcomes(r0, others, phy, attempts_per_realization, rng).mean()))
    return _ci(values)


def simulate_inverse_rate(
    q_f: float,
    phy: PhyParams,
    radius: float,
    num_realizations: int,
    waits_per_realization: int,
    seed: int,
    max_wait: int = 10**6,
) -> Estimate:
    """E[1/mu] from waiting times to the first success.

    Given the layout the number of attempts up to and including the first
    success is geometric with mean 1/mu, so averaging it over attempts and
    layouts estimates the first inverse moment without using the formula.
    """
    values = []
    for i in range(num_realizations):
        rng = _child_rng(seed, i)
        r0, others = _serving_layout(q_f, phy, radius, rng)
        if r0 is None:
            continue
        waits = []
        for _ in range(waits_per_realization):
            used = 0
            while True:
                flags = attempt_outcomes(r0, others, phy, 64, rng)
                hit = np.flatnonzero(flags)
                if hit.size:
                    waits.append(used + int(hit[0]) + 1)
                    break
                used += 64
                if used >= max_wait:
                    waits.append(used)
                    break
        values.append(float(np.mean(waits)))
    return _ci(values)


def conditional_link_rates(
    q_f: float,
    phy: PhyParams,
    radius: float,
    num_layouts: int,
    seed: int,
    batch: int = 4000,
) -> np.ndarray:
    """Per-layout success probability mu of the serving link.

    Given the layout, Rayleigh fades and independent activity give
    mu = beta * prod_i (1 - beta*theta / (theta + (x_i / r)**alpha)) exactly,
    so this samples the layout distribution of mu without attempt noise.
    Layouts in which no BS holds the file are dropped. The first inverse
    moment of the result is a low-variance estimate of E[1/mu] whenever the
    second one is finite.
    """
    mean_count = phy.bs_density * math.pi * radius**2
    width = int(mean_count + 8.0 * math.sqrt(mean_count)) + 1
    theta, beta, alpha = phy.sinr_threshold, phy.active_prob, phy.pathloss_exp
    out = []
    for b, start in enumerate(range(0, num_layouts, batch)):
        rng = _child_rng(seed, b)
        n = min(batch, num_layouts - start)
        counts = rng.poisson(mean_count, n)
        if counts.max() > width:
            raise RuntimeError("PPP count exceeded the padded width; raise the padding")
        dist = radius * np.sqrt(rng.random((n, width)))
        present = np.arange(width)[None, :] < counts[:, None]
        holds = present & (rng.random((n, width)) < q_f)
        covered = holds.any(axis=1)
        serving = np.argmin(np.where(holds, dist, np.inf), axis=1)
        r0 = dist[np.arange(n), serving][:, None]
        with np.errstate(divide="ignore", over="ignore"):
            log_fac = np.log1p(-beta * theta / (theta + (dist / r0) ** alpha))
        log_fac[~present] = 0.0
        log_fac[np.arange(n), serving] = 0.0
        out.append(beta * np.exp(log_fac.sum(axis=1))[covered])
    return np.concatenate(out)
