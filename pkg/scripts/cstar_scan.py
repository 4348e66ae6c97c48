"""Empirical phase-bound constant c* over all Gamma(n) tuples, for several truncations and betas."""
import argparse
from fractions import Fraction

from nls3lab.resonance import best_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--beta", nargs="+", default=["0", "1", "21/10", "5/2"])
    args = ap.parse_args()
    print("beta,N,c_star")
    for b in args.beta:
        beta = Fraction(b)
        for N in args.N:
            print(f"{b},{N},{best_constant(N, beta):.6g}")


if __name__ == "__main__":
    main()
