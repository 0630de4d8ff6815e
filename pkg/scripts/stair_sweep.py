"""Single-riser height sweep at 0.6 m/s: finds the tallest blind-walkable
rise (taller risers end in a toe-stub fall).

Usage: python3 scripts/stair_sweep.py [--rises 0.01 0.02 ... ]
"""

import argparse

from slipwalk.simulate import flat_scenario, run_scenario
from slipwalk.terrain import Stairs, build_profile


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--rises", type=float, nargs="+", default=[0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08]
    )
    parser.add_argument("--duration", type=float, default=5.0)
    args = parser.parse_args()

    tallest = None
    for rise in args.rises:
        terrain = build_profile(
            [Stairs(rises=(rise,), tread=5.0, x_start=0.95)], extent=(-10.0, 60.0)
        )
        log = run_scenario(
            flat_scenario(terrain=terrain, velocity=(0.6, 0.0), duration=args.duration)
        )
        stub = "toe_stub" in [name for _, name in log.events]
        print(f"rise {100 * rise:4.1f} cm  outcome={log.outcome:9s} toe_stub={stub}")
        if log.outcome == "completed":
            tallest = rise
    if tallest is not None:
        print(f"tallest walkable rise: {100 * tallest:.1f} cm")


if __name__ == "__main__":
    main()
