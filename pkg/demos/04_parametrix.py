"""Approximate inverses of elliptic symbols by a truncated Neumann series.

Run: python3 demos/04_parametrix.py
"""
import math

import numpy as np

from anisofl import FrequencyLattice
from anisofl.cli import example_p_symbol, parametrix_test_symbol
from anisofl.lattice import unit_mode
from anisofl.microlocal import ConicSector, cutoff_function
from anisofl.parametrix import dense_residual, microlocal_parametrix, neumann_parametrix
from anisofl.quantize import kohn_nirenberg_apply

lat = FrequencyLattice((16,))
a = parametrix_test_symbol(lat)
print("a(x, xi) = (2 + sin x) <xi> on 16 modes; dense residual ||a(x,D) b(x,D) - I||:")
for calculus in ("lattice", "taylor"):
    res = [dense_residual(a, neumann_parametrix(a, lat, 1, N, 0.0, (1,), 1.0, 1.0, calculus=calculus), lat)
           for N in (1, 2, 3)]
    print(f"  {calculus:8s} composition calculus: " + ", ".join(f"N={N}: {v:.4f}" for N, v in zip((1, 2, 3), res)))

print("\nmicrolocal parametrix of P = i c(x) xi1 - xi1 + xi2^2 on a sector away from xi1 = xi2^2:")
lat2 = FrequencyLattice((32, 32))
M = (1, 2)
P = example_p_symbol(1, 1, 2.0, 2.0, lat2)
sector = ConicSector((0.0, 1.0), 0.25, 0.5)
phi = cutoff_function((math.pi, math.pi), 0.9 * math.pi, lat2)
inner = np.real(phi.phys()) == 1
b = microlocal_parametrix(P, lat2, 1, sector, phi, 1, M)
for k2 in (4, 8, 14):
    e = unit_mode(lat2, (2, k2))
    err = kohn_nirenberg_apply(P, kohn_nirenberg_apply(b, e)).phys() - e.phys()
    print(f"  mode (2, {k2:2d}): max |P b e - e| where the cutoff is 1: {np.max(np.abs(err[inner])):.3g}")
