"""Flat-ground walking run: prints the summary, optionally writes the CSV log.

Usage: python3 scripts/run_flat.py [--vx 0.3] [--duration 10] [--out log.csv]
"""

import argparse

from slipwalk.cli import write_csv
from slipwalk.simulate import flat_scenario, run_scenario, summarize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vx", type=float, default=0.3)
    parser.add_argument("--duration", type=float, default=10.0)
    parser.add_argument("--out", help="CSV log path")
    args = parser.parse_args()

    scenario = flat_scenario(velocity=(args.vx, 0.0), duration=args.duration)
    log = run_scenario(scenario)
    if args.out:
        write_csv(log, args.out)
    for key, value in summarize(log, scenario).items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    main()
