"""Self-convergence of the time integrators against a fine reference step."""
import argparse

import numpy as np

from nls3lab.dynamics import EquationKind, integrate_array


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--beta", type=float, default=2.1)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--decay", type=float, default=3.0, help="coefficients ~ exp(-decay |n|)")
    ap.add_argument("--norm", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dt", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3])
    ap.add_argument("--ref", type=float, default=1.25e-4)
    args = ap.parse_args()

    N = args.N
    n = np.arange(-N, N + 1)
    rng = np.random.default_rng(args.seed)
    c = (rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)) * np.exp(-args.decay * np.abs(n))
    c *= args.norm / np.linalg.norm(c)
    print("kind," + ",".join(f"err_dt={dt:g}" for dt in args.dt) + ",slope")
    for kind in EquationKind:
        _, ref = integrate_array(kind, c, 0.0, args.t, args.ref, args.beta)
        errs = [np.linalg.norm(integrate_array(kind, c, 0.0, args.t, dt, args.beta)[1][-1] - ref[-1])
                for dt in args.dt]
        slope = np.polyfit(np.log(args.dt), np.log(errs), 1)[0]
        print(kind.value + "," + ",".join(f"{e:.3e}" for e in errs) + f",{slope:.3f}")


if __name__ == "__main__":
    main()
