"""Blind-walking terrain suite: flat, 15 degree slope, (15,10,5) degree wave
field, and the eight-rise stair sequence.  Prints one summary line per run.

Usage: python3 scripts/terrain_suite.py [--duration 10]
"""

import argparse
import math

from slipwalk.simulate import flat_scenario, run_scenario, summarize
from slipwalk.terrain import Slope, Stairs, Wave, build_profile

EXTENT = (-10.0, 60.0)
STAIR_RISES = (0.02, 0.02, 0.03, 0.03, -0.02, -0.03, -0.02, -0.03)


def suite():
    slope = build_profile(
        [Slope(angle=math.radians(15.0), x_start=0.35, length=8.0)], extent=EXTENT
    )
    wave = build_profile(
        [Wave(sections=tuple((math.radians(a), 1.0) for a in (15.0, 10.0, 5.0)), x_start=0.35)],
        extent=EXTENT,
    )
    stairs = build_profile(
        [Stairs(rises=STAIR_RISES, tread=0.36, x_start=0.35)], extent=EXTENT
    )
    return [
        ("flat", build_profile([], extent=EXTENT), 0.3),
        ("slope15", slope, 0.3),
        ("wave", wave, 0.3),
        ("stairs", stairs, 0.6),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration", type=float, default=10.0)
    args = parser.parse_args()

    for name, terrain, vx in suite():
        scenario = flat_scenario(
            terrain=terrain, velocity=(vx, 0.0), duration=args.duration
        )
        log = run_scenario(scenario)
        s = summarize(log, scenario)
        print(
            f"{name:8s} vx={vx:.1f}  outcome={s['outcome']:9s} steps={s['steps']:3d} "
            f"mean_vx={s.get('mean_vx', float('nan')):+.3f} "
            f"max_z_err={s.get('max_z_err', float('nan')):.4f}"
        )


if __name__ == "__main__":
    main()
