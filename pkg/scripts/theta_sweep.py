"""Weighted PAoI against the SINR threshold for several arrival rates.

Writes a CSV (theta_db, zeta, paoi_weighted, feasible) and prints, per
arrival rate, the last feasible grid point next to the critical threshold.

    python3 scripts/theta_sweep.py --out theta.csv
"""

import argparse
import math

from paoicache.analytic import critical_theta
from paoicache.cli import config_from_dict, sweep_theta_rows, write_csv
from paoicache.model import TrafficParams, linear_to_db


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--zeta", type=float, nargs="+", default=[0.01, 0.02, 0.05, 0.1])
    ap.add_argument("--theta-min", type=float, default=-10.0)
    ap.add_argument("--theta-max", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=0.5)
    ap.add_argument("--active-prob", type=float, default=0.15)
    ap.add_argument("--cache-size", type=int, default=30)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    n = int(round((args.theta_max - args.theta_min) / args.step)) + 1
    grid = [round(args.theta_min + i * args.step, 10) for i in range(n)]
    cfg = config_from_dict(
        {
            "phy": {"sinr_threshold_db": grid, "active_prob": args.active_prob},
            "traffic": {"arrival_rate": sorted(args.zeta)},
            "catalog": {"cache_size": args.cache_size},
            "strategy": "uc",
        }
    )
    rows = sweep_theta_rows(cfg)
    write_csv(["theta_db", "zeta", "paoi_weighted", "feasible"], rows, args.out)
    phy = cfg.phy_at(0.0)
    for zeta in sorted(args.zeta):
        feasible = [float(r[0]) for r in rows if float(r[1]) == zeta and r[3] == "1"]
        last = max(feasible) if feasible else math.nan
        th_c = linear_to_db(critical_theta(phy, TrafficParams(zeta)))
        print(f"# zeta={zeta}: last feasible theta {last} dB, critical theta {th_c:.3f} dB (q=1)")


if __name__ == "__main__":
    main()
