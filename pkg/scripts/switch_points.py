"""Sweep gamma on the toy domain and print where the greedy first action changes."""

import argparse

import numpy as np

from mpirl.domains import build_toy
from mpirl.mdp import value_iteration


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--step", type=float, default=0.001)
    args = p.parse_args()
    mdp = build_toy()
    grid = np.round(np.arange(0.0, 1.0 + args.step / 2, args.step), 9)
    first = [int(value_iteration(mdp, g)[1][0]) for g in grid]
    for i in range(len(grid) - 1):
        if first[i] != first[i + 1]:
            print(f"gamma ~ {0.5 * (grid[i] + grid[i + 1]):.4f}: action {first[i]} -> {first[i + 1]}")


if __name__ == "__main__":
    main()
