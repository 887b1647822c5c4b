"""Error against path count for MC-CPW and QMC+BB-CPW.

Plain Monte Carlo errors fall like P^(-1/2); randomised QMC with the
bridge does markedly better on the smooth CPW integrand.
"""

import numpy as np

from qmcgreeks import MarketParams, MethodSpec, ProductSpec, run_methods
from qmcgreeks.stats import aggregate

mp = MarketParams()
spec = ProductSpec("arithmetic-asian", 100, 64)
sweep = [2**k for k in range(10, 15)]
for method in ("mc-cpw", "qmc-bb-cpw"):
    errs = []
    for P in sweep:
        runs = run_methods(mp, [spec], MethodSpec(method, P, 20, seed=5))[spec]
        errs.append(aggregate(r["delta"] for r in runs)[1])
    slope = np.polyfit(np.log2(sweep), np.log2(errs), 1)[0]
    shown = " ".join(f"{e:.2e}" for e in errs)
    print(f"{method:11s} delta errors {shown}  slope {slope:.2f}")
