"""Per-path Greek estimators on one set of paths.

The conditional pathwise (CPW) estimator integrates the first normal out
analytically, which smooths the payoff's kink (or jump, for the binary
option) and makes pathwise differentiation valid.  The likelihood ratio
(LR) estimator is unbiased as well but much noisier.
"""

import math

import numpy as np

from qmcgreeks import MarketParams, ProductSpec
from qmcgreeks.products import cpw_greeks, discounted_payoff, lr_greeks, simulate_path
from qmcgreeks.rng import PseudoStream, StreamSpec

mp = MarketParams(s0=100, sigma=0.2, r=0.1, T=1.0)
d, n = 64, 2**15
z = PseudoStream(StreamSpec(7, "pseudo", d)).normals(0, 0, n).T
dW = math.sqrt(mp.T / d) * z
ps = simulate_path(mp, ProductSpec("arithmetic-asian", 100, d), z[:, 0], dW[:, 1:])

print(f"{'product':18s} {'greek':6s} {'CPW mean':>10s} {'LR mean':>10s} {'var ratio LR/CPW':>17s}")
for kind in ("arithmetic-asian", "binary-asian", "lookback"):
    spec = ProductSpec(kind, 100, d)
    cpw = cpw_greeks(ps, mp, spec)
    lr = lr_greeks(discounted_payoff(ps, mp, spec), z, mp, spec)
    for greek in ("delta", "vega", "gamma"):
        a, b = getattr(cpw, greek), getattr(lr, greek)
        print(f"{kind:18s} {greek:6s} {a.mean():10.4f} {b.mean():10.4f} {b.var() / a.var():17.1f}")
