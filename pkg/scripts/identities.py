"""Pathwise identities: flow relations, generator residual under ladder refinement,
and the gap between the direct action and w - c + m as the jump threshold shrinks."""
import argparse

import numpy as np

from nelson2d.action import ActionEngine
from nelson2d.cli import generator_halving
from nelson2d.fock import flow_check
from nelson2d.kspace import ModelParams, PolarGrid, grid_for
from nelson2d.levy_paths import RngStream, constant_path, sample_jump_path


def flows(p, grid, n):
    worst = np.zeros(3)
    for i in range(n):
        rng = RngStream(20, i).generator()
        path = sample_jump_path(1.0, p.m_p, 0.1, p.N, rng)
        t = rng.uniform(0, 1)
        s = rng.uniform(0, 1 - t)
        worst = np.maximum(worst, flow_check(rng.normal(size=(p.N, 2)), path, s, t, p, grid))
    print("flow residuals (max r2, r3, r4):", " ".join(f"{v:.2e}" for v in worst))


def generator(p, n):
    q = p.with_(lam=3.0)
    grid = grid_for(q, n_panels=4, n_theta=48)
    for i in range(n):
        rng = RngStream(40, i).generator()
        path = constant_path(q.N, 1.0) if i % 2 == 0 else sample_jump_path(1.0, q.m_p, 0.3, q.N, rng)
        a, b = generator_halving(q, grid, path, rng.normal(size=(q.N, 2)), 1.0)
        print(f"generator path {i:2d} ({'frozen' if i % 2 == 0 else 'jump':6s}) "
              f"residual {a:.3e} -> {b:.3e}  ratio {a / b:.3f}")


def ito(p, grid, n):
    for eps in (0.3, 0.1, 0.03):
        eng = ActionEngine(p, grid, eps=eps)
        gap, drift = [], []
        for i in range(n):
            rng = RngStream(30, i).generator()
            path = sample_jump_path(1.0, p.m_p, eps, p.N, rng)
            a = eng.parts(rng.normal(size=(p.N, 2)), path, [1.0])[0]
            gap.append(abs(a.direct_u - a.u))
            drift.append(abs(a.direct_u - a.u - a.drift))
        print(f"eps={eps:5.2f}  mean gap {np.mean(gap):.4f}  max gap minus drift {np.max(drift):.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=100)
    args = ap.parse_args()
    p = ModelParams(N=2, m_p=1.0, m_b=1.0, g=1.0, lam=5.0)
    grid = PolarGrid.build(0.0, 5.0, 6, 8, 48)
    flows(p, grid, args.paths)
    generator(p, 6)
    ito(p, grid, args.paths)


if __name__ == "__main__":
    main()
