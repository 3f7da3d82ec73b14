"""Small-time scaling of the split transition density norm and the massless trial bound."""
import math

import numpy as np

from nelson2d.bounds import trial_upper_bound
from nelson2d.kspace import ModelParams
from nelson2d.special_functions import split_density_norm

ts = np.geomspace(1e-3, 1e-1, 9)
for p in (2, 3, 4):
    norms = [split_density_norm(p, t, 1.0) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    print(f"p={p}: fitted exponent {slope:.4f}, expected {-2 * (1 - 1 / p):.4f}")

prm = ModelParams(N=2, m_p=0.0, m_b=0.0, g=1.0, sigma=1e-6, lam=5.0)
for s in (0.25, 1.0, 4.0):
    sig = np.geomspace(1e-6, 1e-3, 7)
    vals = [trial_upper_bound(prm.with_(sigma=x), s) for x in sig]
    slope = np.polyfit(np.log(sig), vals, 1)[0]
    print(f"s={s}: ln(sigma) slope {slope:.5f}, 2 pi g^2 N^2 = {2 * math.pi * 4:.5f}")
