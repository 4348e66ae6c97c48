"""Quantiles of the flow remainder norms over mu_s samples as the truncation grows."""
import argparse
import time

from nls3lab.measure import MeasureSpec, smoothing_diagnostic
from nls3lab.params import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--j", type=int, choices=(0, 1), default=1)
    ap.add_argument("--N", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--t", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    s, sigma = (0.8, 0.29) if args.j == 1 else (1.2, 0.6)
    params = ModelParams(beta=2.1, s=s, sigma=sigma, epsilon=0.05)
    t0 = time.perf_counter()
    rep = smoothing_diagnostic(args.j, args.t, params, args.N, MeasureSpec(s, args.N[0], args.seed, args.count))
    for name, target in rep.targets.items():
        q = rep.quantile(name)
        r = rep.ratio_quantiles()[name]
        print(f"{name} in H^{target:.3f}")
        for k, N in enumerate(args.N):
            print(f"  N={N:4d}  q95={q[k]:.4f}  ratio median={r[0.5][k]:.3e}  ratio max={r[1.0][k]:.3e}")
        print(f"  trend within 20%: {rep.trend_ok(name)}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
