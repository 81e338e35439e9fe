"""Anisotropic weights, the dyadic partition of unity and the two equivalent norms.

Run: python3 demos/01_weights_and_partition.py
"""
import math

import numpy as np

from anisofl import FrequencyLattice, build_partition
from anisofl.dyadic import dyadic_blocks
from anisofl.flnorm import norm_record
from anisofl.lattice import random_band_limited
from anisofl.mweight import anis_dilate, m_norm

M = (1, 2)

print("M-norm is exactly 1-homogeneous under the anisotropic dilation:")
xi = np.array([3.0, -2.0])
for t in (0.5, 2.0, 10.0):
    print(f"  t={t:5}: |t^(1/M) xi|_M / |xi|_M = {m_norm(M, anis_dilate(M, t, xi)) / m_norm(M, xi):.15f}")

lat = FrequencyLattice((64, 64))
part = build_partition(lat, M, K=2.0)
total = sum(part.phi(h) for h in part.shells)
print(f"\npartition on {lat.label()}: shells {part.shells[0]}..{part.shells[-1]}, overlap bound N0={part.N0}")
print(f"  max |sum_h phi_h - 1| = {np.max(np.abs(total - 1)):.3g}")

w = m_norm(M, lat.freq_grid())
print("\nwhere each shell lives (range of |xi|_M over its support):")
for h in part.shells[:6]:
    sup = part.phi(h) > 0
    print(f"  h={h:2d}: {w[sup].min():8.3f} .. {w[sup].max():8.3f}")

rng = np.random.default_rng(7)
u = random_band_limited(lat, rng, modes=12)
blocks = dyadic_blocks(u, part)
print(f"\n{len(blocks)} dyadic blocks reassemble u to {np.max(np.abs(sum(b.freq() for b in blocks) - u.freq())):.3g}")
for s, p in ((0, 1), (1, 2), (2, math.inf)):
    rec = norm_record(u, s, p, M, part)
    print(f"  s={s}, p={rec['p']}: FL norm {rec['value']:.5g}, dyadic norm {rec['dyadic_value']:.5g}, "
          f"ratio {rec['ratio']:.4f}")
