"""Generalization error of every consistent two-expert reward on the toy lattice."""

import argparse
from pathlib import Path

import numpy as np

from mpirl import artifacts
from mpirl.domains import DomainSpec, Regime, build_toy, make_experts
from mpirl.identifiability import gen_error_heatmap


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--experts", type=float, nargs=2, default=[0.3, 0.5])
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--n-envs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out/heatmap.csv")
    args = p.parse_args()
    mdp = build_toy()
    experts = make_experts(mdp, args.experts, Regime.ENTROPY_REGULARIZED)
    rows = gen_error_heatmap(mdp, experts, args.step, args.n_envs, args.seed, DomainSpec("toy"))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    artifacts.write_csv(out, ["gamma_1", "gamma_2", "gen_error"], rows)
    frac = np.mean([r[2] > 0.5 for r in rows])
    print(f"{len(rows)} consistent rewards, {frac:.1%} with generalization error above 0.5")


if __name__ == "__main__":
    main()
