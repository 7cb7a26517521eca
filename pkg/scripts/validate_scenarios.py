"""Analytic PAoI against the spatial-temporal simulation on three scenarios.

1. near interference-free: beta = 1, theta = -40 dB, every file everywhere
2. default network, UC caching, zeta = 0.05, theta = 0 dB
3. the same network judged with the wrong-sign interference formula
   (negative control, expected to fail)

    python3 scripts/validate_scenarios.py --realizations 300
"""

import argparse

from click.testing import CliRunner

from paoicache.cli import main as cli

SCENARIOS = {
    "isolated": ["--preset", "isolated", "--region-radius", "1500"],
    "default": [],
    "missigned control": ["--model", "missigned"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--realizations", type=int, default=200)
    ap.add_argument("--slots", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    common = ["--realizations", str(args.realizations), "--slots", str(args.slots), "--seed", str(args.seed)]
    runner = CliRunner()
    for name, extra in SCENARIOS.items():
        result = runner.invoke(cli, ["validate", *extra, *common])
        print(f"== {name} (exit {result.exit_code})")
        print(result.stdout, end="")
        print(result.stderr, end="")


if __name__ == "__main__":
    main()
