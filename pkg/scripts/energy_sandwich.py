"""Monte Carlo ground-state energy of one particle against the closed-form bounds."""
import argparse

from nelson2d.bounds import BoundConstants, best_trial_s, lower_bound
from nelson2d.config import FSpec, GridSpec, SamplerSpec
from nelson2d.estimator import PotentialSpec, ground_energy
from nelson2d.kspace import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--g", type=float, default=0.3)
    ap.add_argument("--lam", type=float, default=5.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    p = ModelParams(N=1, m_p=1.0, m_b=1.0, g=args.g, lam=args.lam)
    rep = ground_energy(p, PotentialSpec(), [1, 2, 5, 10, 20], args.paths, FSpec("box", 200.0),
                        seed=6, sampler=SamplerSpec(eps=0.3, correction=True, correction_dt=0.1),
                        grid_spec=GridSpec(2, 8, 16), workers=args.workers)
    lo = lower_bound(p, BoundConstants(), "small-coupling")
    s, up = best_trial_s(p)
    print(f"lower bound {lo:.4f}   trial upper bound {up:.4f} (s={s:.2g})")
    for row in rep.rows():
        print(f"t={row['t']:5.1f}  E={row['energy']:.5f} +- {row['energy_err']:.5f}  "
              f"n_eff={row['n_eff']:.0f}")
    print(f"a + b/t extrapolation: {rep.extrapolated:.5f} +- {rep.extrapolated_err:.5f}")


if __name__ == "__main__":
    main()
