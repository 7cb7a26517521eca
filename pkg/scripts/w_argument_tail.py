"""Layout Monte Carlo of 1/mu against both hypergeometric-argument forms.

For each configuration prints the sample mean of 1/mu with its 95% CI, the
adopted and the rejected closed forms of E[1/mu], and the interference
exponents G_1, G_2. When G_2 >= 1 the second moment is infinite: 1/mu then
has a power-law tail with index below 2, the sample mean converges slowly
from below, and no CI-based verdict is meaningful.

    python3 scripts/w_argument_tail.py --layouts 400000
"""

import argparse
import math

import numpy as np

from paoicache.analytic import interference_coefficients, inverse_stp_moment
from paoicache.model import PhyParams
from paoicache.sim import conditional_link_rates

LAM = 3 / (250**2 * math.pi)
CONFIGS = [  # (beta, alpha, theta_db, q)
    (0.5, 4.5, -5.0, 1.0),
    (0.5, 4.5, 0.0, 1.0),
    (0.7, 4.5, -3.0, 1.0),
    (0.9, 4.5, -3.0, 1.0),
    (0.5, 3.5, -5.0, 1.0),
    (0.5, 4.5, 5.0, 1.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--layouts", type=int, default=200_000)
    ap.add_argument("--radius", type=float, default=2000.0)
    ap.add_argument("--seed", type=int, default=13)
    args = ap.parse_args()
    print("beta,alpha,theta_db,q,G1,G2,mc_mean,mc_hw,derived,unmuted_w,q999")
    for b, a, t, q in CONFIGS:
        phy = PhyParams.from_db(23, LAM, a, b, t)
        g1 = interference_coefficients(1, phy)[0]
        g2 = interference_coefficients(2, phy)[0]
        inv = 1 / conditional_link_rates(q, phy, args.radius, args.layouts, args.seed)
        hw = 1.96 * inv.std(ddof=1) / math.sqrt(inv.size)
        d = inverse_stp_moment(1, q, phy, "derived")
        u = inverse_stp_moment(1, q, phy, "unmuted-w")
        print(f"{b},{a},{t},{q},{g1:.4f},{g2:.4f},{inv.mean():.4f},{hw:.4f},{d:.4f},{u:.4f},{np.quantile(inv, 0.999):.1f}")


if __name__ == "__main__":
    main()
