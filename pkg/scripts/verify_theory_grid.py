"""Run the variance-law and bias-bound Monte Carlo checks over a grid of (k, sigma, N)."""

import argparse

from addq.theory import verify_bias_bound, verify_variance_law


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--replicates", type=int, default=2000)
    p.add_argument("--ks", nargs="+", type=int, default=[2, 5, 10, 20])
    p.add_argument("--sigmas", nargs="+", type=float, default=[1.0, 5.0])
    p.add_argument("--ns", nargs="+", type=int, default=[10, 30, 100])
    p.add_argument("--gamma", type=float, default=0.9)
    args = p.parse_args()

    print("k,sigma,N,ks_p,variance_law,mean_bias,stderr,bound,bias_bound")
    seed = 0
    for k in args.ks:
        for sigma in args.sigmas:
            for n in args.ns:
                v = verify_variance_law(k, sigma, n, args.replicates, seed=seed, gamma=args.gamma)
                b = verify_bias_bound(args.gamma, sigma, k, n, args.replicates, seed=seed + 1)
                seed += 2
                print(
                    f"{k},{sigma},{n},{v.p_value:.4f},{'pass' if v.passed else 'fail'},"
                    f"{b.empirical_mean_bias:.4f},{b.stderr:.4f},{b.lower_bound:.4f},{'pass' if b.passed else 'fail'}"
                )


if __name__ == "__main__":
    main()
