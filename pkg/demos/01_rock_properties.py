"""Sweep the cementation stiffness model and the permeability laws.

Shows how precipitation (falling porosity) stiffens the frame in two
regimes: grain-contact cementation between the critical and well-sorted
porosities, then pore-filling interpolated toward the mineral point.

Run:  python3 demos/01_rock_properties.py
"""

import numpy as np

from faultseal.rockphysics import (AnchoredPowerLaw, CementModelParams,
                                   biot_from_moduli, constant_cement_moduli,
                                   permeability)

params = CementModelParams(k_grain=38e9, g_grain=44e9, k_cement=98e9,
                           g_cement=35e9, phi_c=0.48, phi_b=0.42, n_coord=9.0)

print(f"{'phi':>6} {'K [GPa]':>9} {'G [GPa]':>9} {'E [GPa]':>9} "
      f"{'nu':>7} {'biot':>6}")
for phi in np.linspace(0.0, params.phi_c, 13):
    m = constant_cement_moduli(params, phi)
    alpha = biot_from_moduli(m.k, params.k_grain)
    print(f"{phi:6.3f} {m.k/1e9:9.2f} {m.g/1e9:9.2f} {m.e/1e9:9.2f} "
          f"{m.nu:7.3f} {alpha:6.3f}")

print("\nsealing a fault from porosity 0.15:")
law = AnchoredPowerLaw(k_ref=1.9e-13, phi_ref=0.15, exponent=3.0)
for phi in (0.15, 0.07, 0.05):
    print(f"  phi={phi:5.2f}  k = {permeability(law, phi):.3g} m^2")
