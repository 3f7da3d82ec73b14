"""KS test of sampled |X_t| against the closed-form radial law, for several masses."""
import argparse

from nelson2d.cli import density_ks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print(f"{'m_p':>6} {'KS':>10} {'crit(1%)':>10}")
    for m in (0.0, 0.5, 1.0, 3.0):
        d, crit = density_ks(m, args.t, args.n, args.seed)
        print(f"{m:6.2f} {d:10.5f} {crit:10.5f}  {'ok' if d < crit else 'REJECT'}")


if __name__ == "__main__":
    main()
