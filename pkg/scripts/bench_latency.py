"""Planner latency benchmark: p50/p95/p99 of one full planning tick
(vertical QP plus both horizontal axis QPs), cold and warm-started.

Usage: python3 scripts/bench_latency.py [--iters 500]
"""

import argparse

from slipwalk.cli import bench_planner


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=500)
    args = parser.parse_args()
    for key, value in bench_planner(args.iters).items():
        print(f"{key}: {value:.4f}")


if __name__ == "__main__":
    main()
