"""Peak age of information in cache-enabled Poisson cellular networks."""

from .analytic import (
    InfeasibleError,
    PaoiReport,
    StabilityThresholds,
    file_paoi,
    mean_stp,
    paoi,
    paoi_corollary1,
    paoi_theorem1,
    queue_peak_age,
    stability_thresholds,
)
from .model import Catalog, CachingPolicy, PhyParams, TrafficParams, make_policy, zipf_popularity

__all__ = [
    "CachingPolicy",
    "Catalog",
    "InfeasibleError",
    "PaoiReport",
    "PhyParams",
    "StabilityThresholds",
    "TrafficParams",
    "file_paoi",
    "make_policy",
    "mean_stp",
    "paoi",
    "paoi_corollary1",
    "paoi_theorem1",
    "queue_peak_age",
    "stability_thresholds",
    "zipf_popularity",
]
