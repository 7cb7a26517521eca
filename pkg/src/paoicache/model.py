"""Shared domain types: physical layer, traffic, file catalog, caching policy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PolicyError(ValueError):
    """A caching probability vector violates the placement constraints."""


class BoxConstraintError(PolicyError):
    pass


class CapacityError(PolicyError):
    pass


CAPACITY_TOL = 1e-9
POPULARITY_TOL = 1e-12


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PhyParams:
    """Physical layer of the single-tier network (interference limited).

    All fields are linear; use :meth:`from_db` to build from dBm / dB.
    """

    tx_power: float
    bs_density: float
    pathloss_exp: float
    active_prob: float
    sinr_threshold: float

    def __post_init__(self):
        if not self.pathloss_exp > 2:
            raise ValueError(f"pathloss_exp must exceed 2, got {self.pathloss_exp}")
        if not 0 < self.active_prob <= 1:
            raise ValueError(f"active_prob must lie in (0, 1], got {self.active_prob}")
        for name in ("bs_density", "sinr_threshold", "tx_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def delta(self) -> float:
        """2 / pathloss_exp."""
        return 2.0 / self.pathloss_exp

    @property
    def sinr_threshold_db(self) -> float:
        return float(linear_to_db(self.sinr_threshold))

    @classmethod
    def from_db(
        cls,
        tx_power_dbm: float,
        bs_density: float,
        pathloss_exp: float,
        active_prob: float,
        sinr_threshold_db: float,
    ) -> "PhyParams":
        return cls(
            tx_power=dbm_to_watts(tx_power_dbm),
            bs_density=bs_density,
            pathloss_exp=pathloss_exp,
            active_prob=active_prob,
            sinr_threshold=db_to_linear(sinr_threshold_db),
        )

    def replace(self, **changes) -> "PhyParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class TrafficParams:
    """Bernoulli update arrivals, one chance per slot."""

    arrival_rate: float

    def __post_init__(self):
        if not 0 < self.arrival_rate < 1:
            raise ValueError(f"arrival_rate must lie in (0, 1), got {self.arrival_rate}")


def zipf_popularity(num_files: int, skew: float) -> np.ndarray:
    """Zipf request probabilities p_f proportional to f**-skew, f = 1..num_files."""
    if num_files < 1:
        raise ValueError(f"num_files must be >= 1, got {num_files}")
    if skew < 0:
        raise ValueError(f"skew must be non-negative, got {skew}")
    weights = np.arange(1, num_files + 1, dtype=float) ** (-float(skew))
    return weights / weights.sum()


@dataclass(frozen=True)
class Catalog:
    num_files: int
    popularity: np.ndarray = field(repr=False)
    cache_size: int

    def __post_init__(self):
        p = np.asarray(self.popularity, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "popularity", p)
        if p.shape != (self.num_files,):
            raise ValueError(f"popularity has shape {p.shape}, expected ({self.num_files},)")
        if np.any(p < 0) or abs(p.sum() - 1.0) > POPULARITY_TOL:
            raise ValueError("popularity must be a probability vector summing to 1")
        if np.any(np.diff(p) > 0):
            raise ValueError("popularity must be non-increasing in the file index")
        if not 1 <= self.cache_size <= self.num_files:
            raise ValueError(
                f"cache_size must satisfy 1 <= C <= F, got C={self.cache_size}, F={self.num_files}"
            )

    @classmethod
    def zipf(cls, num_files: int, skew: float, cache_size: int) -> "Catalog":
        return cls(num_files, zipf_popularity(num_files, skew), cache_size)

    def with_cache_size(self, cache_size: int) -> "Catalog":
        return Catalog(self.num_files, self.popularity, cache_size)


@dataclass(frozen=True)
class CachingPolicy:
    """Marginal caching probabilities q_f, validated against box and capacity."""

    probs: np.ndarray
    cache_size: int

    def __post_init__(self):
        q = np.array(self.probs, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "probs", q)
        if q.ndim != 1 or q.size == 0:
            raise PolicyError("probs must be a non-empty vector")
        bad = np.flatnonzero((q < 0) | (q > 1) | ~np.isfinite(q))
        if bad.size:
            raise BoxConstraintError(
                f"caching probabilities outside [0, 1] at files {(bad + 1).tolist()}"
            )
        gap = abs(q.sum() - self.cache_size)
        if gap > CAPACITY_TOL:
            raise CapacityError(
                f"sum of caching probabilities is {q.sum():.12g}, cache size is {self.cache_size}"
            )

    @property
    def num_files(self) -> int:
        return self.probs.size


def make_policy(probs, cache_size: int) -> CachingPolicy:
    return CachingPolicy(np.asarray(probs, dtype=float), int(cache_size))
