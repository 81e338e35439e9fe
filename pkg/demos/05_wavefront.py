"""Locating singularities in space and direction.

Run: python3 demos/05_wavefront.py
"""
import math

import numpy as np

from anisofl import FrequencyLattice, build_partition
from anisofl.cli import kink_function
from anisofl.lattice import physical
from anisofl.microlocal import local_scan, wavefront_scan

lat = FrequencyLattice((512,))
x = lat.x_axes()[0]
u = physical(lat, np.where(x == 0, 0.0, (math.pi - x) / 2))
part = build_partition(lat, (1,))
points = [(0.0,), (math.pi / 2,), (math.pi,)]
print("sawtooth with a jump at x = 0; probes at s = 1.5 (a jump sits at critical order 1 in FL^inf):")
# cutoffs of radius 0.4 pi around pi/2 and pi stay clear of the jump
radius = 0.4 * math.pi
table = wavefront_scan(u, points, np.array([[1.0], [-1.0]]), 1.5, math.inf, (1,), part, radius=radius)
for score, i, d, r in table.rows():
    print(f"  x0={points[i][0]:.3f} direction={table.directions[d][0]:+.0f}: critical order {score:6.2f} "
          f"{'flagged' if not r.member else ''}")
local = local_scan(u, points, 1.5, math.inf, (1,), part, radius=radius)
print("  singular support estimate:", [points[i][0] for i, r in local.items() if not r.member])

# M = (1, 2) probes x2 at squared frequencies, so x2 gets the finer axis
lat2 = FrequencyLattice((64, 256))
M = (1, 2)
kink = kink_function(lat2, axis=1)
part2 = build_partition(lat2, M)
dirs = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]])
table = wavefront_scan(kink, [(1.0, 0.0), (1.0, math.pi)], dirs, 2.0, math.inf, M, part2, radius=radius)
print("\ntriangle wave in x2 with kinks on x2 = 0; probes at s = 2 with M = (1, 2):")
for (i, d) in sorted(table.flagged()):
    print(f"  flagged at x0={table.x_points[i]} direction {dirs[d]}")
