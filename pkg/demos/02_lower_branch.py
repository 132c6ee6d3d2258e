"""
The viscous lower branch
========================

The exponential profile 1 - exp(-y) has no inflection point, so it is stable
without viscosity. Viscosity destabilizes a band of long waves. Here we map
that band and its most unstable wave for a few viscosities.
"""

from shearstab.orrsolver import eigenmode, most_unstable, unstable_band
from shearstab.profile import exponential_profile

profile = exponential_profile()

print(f"{'nu':>8} {'alpha_-':>10} {'alpha_+':>10} {'alpha0~':>8} {'Re lambda~':>11} {'c':>24}")
for nu in (1e-5, 1e-6, 1e-7):
    band = unstable_band(profile, nu)
    top = most_unstable(profile, nu, band=band)
    print(f"{nu:8.0e} {band.alpha_minus:10.5f} {band.alpha_plus:10.5f} {top.alpha_tilde:8.4f} "
          f"{top.lambda_tilde.real:11.5f} {top.c:24.6f}")

# Rescaled by nu^(1/4), the wavenumber hardly moves, while the growth rate
# in units of nu^(1/2) still creeps up: the asymptotic regime is slow to set in.

# The mode itself lives on three heights: nu^(-1/4), 1 and nu^(1/4).
nu = 1e-6
top = most_unstable(profile, nu)
fit = eigenmode(top, profile).scale_fit
print()
print("decay lengths (outer, middle, critical):", ", ".join(f"{v:.4g}" for v in fit.lengths))
print("nu^(-1/4), 1, nu^(1/4):               ", ", ".join(f"{v:.4g}" for v in (nu**-0.25, 1.0, nu**0.25)))
print("vorticity weight on the outer scale:", f"{fit.omega_amplitudes[0]:.2e}")
