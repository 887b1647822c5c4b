"""A small VRF table: every method against the LR baseline.

This is the ``tables`` subcommand in miniature, at d=64 and one strike,
with fewer runs than the desk default so it finishes in seconds.
"""

from qmcgreeks import MarketParams, MethodSpec, ProductSpec, run_methods
from qmcgreeks.engine import METHOD_LABELS, METHODS
from qmcgreeks.stats import aggregate, vrf

mp = MarketParams()
spec = ProductSpec("arithmetic-asian", 90, 64)
runs = {m: run_methods(mp, [spec], MethodSpec(m, 2**12, 20, seed=3))[spec] for m in METHODS}

print(f"{'greek':6s}" + "".join(f"{METHOD_LABELS[m]:>12s}" for m in METHODS))
for greek in ("delta", "vega", "gamma"):
    base = aggregate(r[greek] for r in runs["lr-mc"])[1]
    cells = [vrf(base, aggregate(r[greek] for r in runs[m])[1]) for m in METHODS]
    print(f"{greek:6s}" + "".join(f"{c:12.4g}" for c in cells))
