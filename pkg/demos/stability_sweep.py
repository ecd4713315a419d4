"""Transmitted attenuation index across a kappa2 sweep, three ways.

The textbook route forms K**2 as a difference of nearly equal numbers and
loses every significant digit once kappa drops below about 1e-8. The stable
solver stays on the 50-digit reference across the whole sweep.

Run: python demos/stability_sweep.py [theta_deg]
"""

import math
import sys

import numpy as np

from npwray import solver
from npwray.errors import CancellationUnderflow
from npwray.field import ComplexRefractivity

theta = math.radians(float(sys.argv[1]) if len(sys.argv) > 1 else 45.0)
m1 = ComplexRefractivity(1.0001, 1e-8)
inc = solver.medium1_apparent(m1, theta, theta - math.radians(10))

print(f"{'kappa2':>10} {'reference K2':>14} {'stable rel err':>15} {'naive rel err':>14}")
for k2 in np.geomspace(1e-9, 1e-7, 11):
    m2 = ComplexRefractivity(1.0002, float(k2))
    ref = solver.medium2_oracle_hp(inc.Ns, inc.Ks, m2).K
    stable = solver.medium2_apparent_stable(inc.Ns, inc.Ks, m2).K
    try:
        naive = solver.medium2_apparent_naive(inc.Ns, inc.Ks, m2, "working").K
        naive_err = f"{abs(naive - ref) / ref:14.2e}"
    except CancellationUnderflow:
        naive_err = f"{'negative root':>14}"
    print(f"{k2:10.3e} {ref:14.6e} {abs(stable - ref) / ref:15.2e} {naive_err}")
