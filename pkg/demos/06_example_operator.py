"""A first-order operator with a one-sided exponential coefficient.

c_hat(xi) = 1 / ((a1 + i xi1)^(k1+1) (a2 + i xi2)^(k2+1)); the weighted sup
<xi>_M^r |c_hat| tells how much Fourier-Lebesgue regularity c has.

Run: python3 demos/06_example_operator.py
"""
from anisofl import FrequencyLattice
from anisofl.cli import DEFAULTS, char_agreement, membership_growth

M = (1, 2)
for k in ((5, 9), (3, 7), (2, 5)):
    sups = membership_growth(*k, 1.0, 1.0, 4, ["64x64", "128x128", "256x256"], M)
    print(f"(k1, k2) = {k}: sup <xi>_M^4 |c_hat| on 64^2, 128^2, 256^2 = " + ", ".join(f"{v:.6g}" for v in sups))

frac, total, cs = char_agreement(DEFAULTS["example-p"])
print(f"\ncharacteristic set scan: {cs.flags.sum()} flagged of {cs.flags.size} (x, direction) pairs; "
      f"agreement with xi1 = xi2^2 outside the quadrant {frac:.3f} over {total} pairs")
lat = FrequencyLattice((64, 64))
print(f"directions scanned: {len(cs.directions)}; lattice {lat.label()}")
