"""Splitting a rough symbol into a smooth part and a lower-order remainder.

The coefficient c has finite Fourier-Lebesgue regularity; mollifying it at
the shell-dependent scale 2^(-h delta) gives a smooth symbol, and what is left
over costs delta * kappa orders.

Run: python3 demos/03_symbol_splitting.py
"""
import math

from anisofl import FrequencyLattice, build_partition
from anisofl.cli import example_p_coefficient, example_p_symbol
from anisofl.split import exact_kappa, taylor_split, verify_mollifier_bounds, verify_split_classes

M = (1, 2)
r, p, delta = 4, math.inf, 0.25

kap = exact_kappa(r, p, 2, M)
print(f"kappa = r - n/(mu_min q) = {kap} for r={r}, p=inf, M={M}")

print("\nlog-log slopes in eps of the smoothing multiplier norms, against the predicted exponents:")
c = example_p_coefficient(8, 14, 1.0, 1.0, FrequencyLattice((256, 64)))
for beta in ((1, 0), (0, 1)):
    rep = verify_mollifier_bounds(c, r, p, M, beta)
    pieces = ", ".join(f"{k}: {rep['operator_slopes'][k]:+.3f} (predicted {rep['predicted'][k]:+.3f})"
                       for k in ("i", "ii", "iii", "iii_tail"))
    print(f"  beta={beta}: {pieces}")

for size in (32, 64):
    lat = FrequencyLattice((size, size))
    part = build_partition(lat, M)
    res = taylor_split(example_p_symbol(8, 14, 1.0, 1.0, lat), delta, part, r, p)
    cls = verify_split_classes(res, 1.0)
    print(f"\n{lat.label()}: |a_sharp + a_natural - a| = {res.reconstruction_error():.3g}")
    print(f"  largest measured constant of the smooth part: {cls['a_sharp'].max_constant():.4g}")
    print(f"  largest measured constant of the remainder at order {cls['reduced_order']}: "
          f"{cls['a_natural'].max_constant():.4g}")
