"""Weighted PAoI against the cache size for the optimal, MPC and UC strategies.

    python3 scripts/cache_sweep.py --out cache.csv
"""

import argparse

from paoicache.cli import config_from_dict, sweep_cache_rows, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cmin", type=int, default=9)
    ap.add_argument("--cmax", type=int, default=30)
    ap.add_argument("--theta-db", type=float, default=0.0)
    ap.add_argument("--zeta", type=float, default=0.05)
    ap.add_argument("--active-prob", type=float, default=0.15)
    ap.add_argument("--model", default="theorem1")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = config_from_dict(
        {
            "phy": {"sinr_threshold_db": args.theta_db, "active_prob": args.active_prob},
            "traffic": {"arrival_rate": args.zeta},
            "catalog": {"cache_size": list(range(args.cmin, args.cmax + 1))},
            "strategy": ["optimal", "mpc", "uc"],
            "model": args.model,
        }
    )
    write_csv(["cache_size", "strategy", "paoi_weighted"], sweep_cache_rows(cfg), args.out)


if __name__ == "__main__":
    main()
