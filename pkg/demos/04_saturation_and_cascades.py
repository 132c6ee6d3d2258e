"""
Saturation, escape and cascades of scales
=========================================

Whether the instability stops at a small amplitude depends on the sign of
the real part of the cubic Landau coefficient. When it does not stop, the
new thin layers can themselves go unstable.
"""

from shearstab.amplitude import LandauModel, classify_saturation, instability_time
from shearstab.cascade import SCENARIOS, named_scenario

nu = 1e-6
rate = nu**0.5

for A in (-1.0, 1.0, 0.0):
    verdict = classify_saturation(LandauModel(rate, A, nu**3))
    print(f"Re A = {A:+.0f}: {verdict}")
print(f"nu^(1/4) = {nu**0.25:.6f}")

# How long a seed of size nu^N needs to reach nu^(1/4):
print()
for N in (1, 2, 3):
    it = instability_time(nu, N, 0.0, 1.0)
    print(f"N = {N}: T = {it.T:.4e}, T nu^(1/2) / log(1/nu) = {it.ratio:.4f} (limit {it.limit_ratio:.4f})")

# Exact bookkeeping of the length scales nu^q produced by each cascade.
print()
for name in SCENARIOS:
    led = named_scenario(name)
    print(f"{name}: scales {', '.join(str(q) for q in led.sorted_scales()):28s} time ~ nu^{led.time_exponent} log(1/nu)")
