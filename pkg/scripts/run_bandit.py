"""Correct-action rate on the two-sided bandit: a sigma sweep and a k sweep for several learners."""

import argparse

import numpy as np

from addq.harness import ExperimentConfig, run_experiment
from addq.harness.config import AlgorithmConfig, EnvironmentConfig


def final_rate(alg: str, steps: int, seeds: int, **env) -> tuple[float, float]:
    cfg = ExperimentConfig(
        environment=EnvironmentConfig("bandit", env),
        algorithm=AlgorithmConfig(alg),
        total_steps=steps,
        seeds=list(range(seeds)),
    )
    rates = np.array([r.column("correct_action")[-1] for r in run_experiment(cfg)])
    return rates.mean(), rates.std(ddof=1) / np.sqrt(len(rates)) if len(rates) > 1 else 0.0


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--algs", nargs="+", default=["ql", "dql", "dist_ql", "dist_dql", "addq"])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--sigmas", nargs="+", type=float, default=[1.0, 2.0, 5.0, 8.0])
    p.add_argument("--ks", nargs="+", type=int, default=[5, 10, 15, 20])
    args = p.parse_args()

    print("sweep,value," + ",".join(args.algs))
    for sigma in args.sigmas:
        rates = [final_rate(a, args.steps, args.seeds, sigma1=sigma, k1=10) for a in args.algs]
        print(f"sigma1,{sigma}," + ",".join(f"{m:.2f}" for m, _ in rates))
    for k in args.ks:
        rates = [final_rate(a, args.steps, args.seeds, sigma1=5.0, k1=k) for a in args.algs]
        print(f"k1,{k}," + ",".join(f"{m:.2f}" for m, _ in rates))


if __name__ == "__main__":
    main()
