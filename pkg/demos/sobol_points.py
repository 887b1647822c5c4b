"""Sobol' points, scrambling and the normal transform.

Run with ``python demos/sobol_points.py``.
"""

import numpy as np

from qmcgreeks.rng import SobolGenerator, scramble, sobol_point, uniform_to_normal

# The first dimension is the base-2 van der Corput sequence.
gen = SobolGenerator(8)
print("dim 1, k=0..7:", [sobol_point(gen, 0, k) for k in range(8)])

# Any aligned block of 2^m points puts exactly one point in each
# interval [i/2^m, (i+1)/2^m) of every coordinate.
m = 5
block = gen.points(0, 2**m)
cells = np.floor(block * 2**m).astype(int)
print("one point per cell in every dimension:", all(len(set(row)) == 2**m for row in cells))

# A linear scramble plus digital shift randomises the set but keeps that
# structure; each seed gives an independent replicate.
for seed in (1, 2):
    pts = scramble(gen, seed).points(0, 2**m)
    ok = all(len(set(np.floor(row * 2**m).astype(int))) == 2**m for row in pts)
    print(f"seed {seed}: first point {np.round(pts[:3, 0], 4)}, stratified={ok}")

# Uniforms become normals through the inverse CDF only.
print("Phi^-1(0.975) =", uniform_to_normal(0.975))
