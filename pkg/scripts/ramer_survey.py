"""Weighted Hilbert-Schmidt norms and smallest singular values of Id + DK_j at mu_s samples."""
import argparse

import numpy as np

from nls3lab.measure import MeasureSpec, ramer_survey, sample_mu
from nls3lab.params import ModelParams
from nls3lab.spectral import sobolev_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--t", type=float, default=0.2)
    ap.add_argument("--j", type=int, choices=(0, 1), default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    params = ModelParams(beta=2.1, s=0.8)
    spec = MeasureSpec(0.8, args.N[0], args.seed, args.count)
    survey = ramer_survey(spec, args.t, args.j, params, args.N)
    print("N,sample,mass,hs_norm,min_singular_value,richardson_defect")
    for N, reps in survey.items():
        for i, r in enumerate(reps):
            mass = sobolev_norm(sample_mu(MeasureSpec(0.8, N, args.seed, args.count), i), 0.0) ** 2
            print(f"{N},{i},{mass:.3f},{r.hs_norm:.5f},{r.min_singular_value:.5f},{r.richardson_defect:.2e}")
    for N, reps in survey.items():
        hs = np.array([r.hs_norm for r in reps])
        sv = np.array([r.min_singular_value for r in reps])
        print(f"# N={N}: mean HS {hs.mean():.4f}, min sv {sv.min():.4f}, median sv {np.median(sv):.4f}")


if __name__ == "__main__":
    main()
