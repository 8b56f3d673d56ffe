"""Null calibration of the rank-correlation tests on independent Gaussian pairs.

Prints the rejection rate at several levels for each method and sample size.
"""

import argparse

import numpy as np

from corrnet.rank_stats import TESTS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--draws", type=int, default=2000)
    ap.add_argument("--sizes", default="5,8,20,100")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    levels = (0.01, 0.05, 0.10)
    print("method     n     kind        " + "  ".join(f"p<{a:<5}" for a in levels))
    for method, test in TESTS.items():
        for n in map(int, args.sizes.split(",")):
            rng = np.random.default_rng(args.seed)
            ests = [test(rng.normal(size=n), rng.normal(size=n)) for _ in range(args.draws)]
            ps = np.array([e.p_two_sided for e in ests])
            kinds = sorted({e.p_kind for e in ests})
            rates = "  ".join(f"{np.mean(ps < a):<7.4f}" for a in levels)
            print(f"{method:<10} {n:<5} {','.join(kinds):<11} {rates}")


if __name__ == "__main__":
    main()
