"""Left-to-right increments against the Brownian bridge.

Both give Brownian motion.  The bridge puts the terminal value on the first
normal and fills midpoints after it, so the leading (best distributed)
Sobol' coordinates carry most of the path's variance.
"""

import numpy as np

from qmcgreeks.bridge import BridgePlan, bridge_increments, standard_increments
from qmcgreeks.rng import PseudoStream, StreamSpec

d = 8
plan = BridgePlan(d)
z = PseudoStream(StreamSpec(1, "pseudo", d)).normals(0, 0, 50_000).T

w_std = np.cumsum(standard_increments(z, 1 / d), axis=1)
w_bb = np.cumsum(bridge_increments(z, plan), axis=1)
t = np.arange(1, d + 1) / d
print("max |cov - min(s,t)|, standard:", np.abs(w_std.T @ w_std / len(z) - np.minimum.outer(t, t)).max())
print("max |cov - min(s,t)|, bridge:  ", np.abs(w_bb.T @ w_bb / len(z) - np.minimum.outer(t, t)).max())

# The terminal value is the first normal, exactly.
print("W(T) == z_1:", np.allclose(w_bb[:, -1], z[:, 0], rtol=0, atol=1e-13))

# Share of the terminal variance explained by the first normal alone.
for name, w in (("standard", w_std), ("bridge", w_bb)):
    r = np.corrcoef(w[:, -1], z[:, 0])[0, 1]
    print(f"{name}: corr(W(T), z_1)^2 = {r * r:.3f}")
