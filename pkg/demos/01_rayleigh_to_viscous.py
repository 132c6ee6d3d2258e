"""
From an inviscid mode to a viscous one
======================================

An inflection-point profile is unstable without viscosity. We find its
Rayleigh mode, then add viscosity back order by order and watch the phase
speed settle.
"""

import numpy as np

from shearstab.cascade import viscous_mode_from_rayleigh
from shearstab.chebyshev import rayleigh_spectrum
from shearstab.profile import inflection_profile
from shearstab.rayleigh import find_rayleigh_mode

profile = inflection_profile()
alpha = 0.5

# The matrix method gives a rough guess, shooting polishes it.
guess = rayleigh_spectrum(profile, alpha)[0]
mode = find_rayleigh_mode(profile, alpha, guess)
print(f"Rayleigh phase speed at alpha = {alpha}: c = {mode.c:.10f}")

# Each order adds a nu^(1/2) correction to c and a thinner wall layer.
print()
print(f"{'nu':>8} {'c_Orr (order 2)':>34} {'|c_Orr - c_Ray| / nu^1/2':>26} {'residual o1':>12} {'residual o2':>12}")
for nu in (1e-4, 1e-5, 1e-6):
    ex = viscous_mode_from_rayleigh(mode, profile, nu)
    c = ex.c_orr()
    print(f"{nu:8.0e} {c:34.10f} {abs(c - ex.c_ray) / nu**0.5:26.6f} "
          f"{ex.orr_residual(1):12.3e} {ex.orr_residual(2):12.3e}")

# The wall layer puts back the no-slip condition the Rayleigh mode violates.
ex = viscous_mode_from_rayleigh(mode, profile, 1e-5)
value, slope = ex.wall_values()
print()
print(f"wall values of the assembled mode: psi(0) = {abs(value):.1e}, psi'(0) = {abs(slope):.1e}")
print(f"boundary-layer rate mu = {ex.mu:.6f} (Re mu > 0: {ex.mu.real > 0})")
print(f"interior slip cancelled: {np.isclose(ex.eps * ex.boundary_layer(1, np.array([0.0]), 1)[0], -ex.orders[0][3])}")
