"""Monte-Carlo view of the two-sided observability estimate for the mixed series.

Run:  python demos/ingham_constants.py
"""
import numpy as np

from wavebeam import ingham
from wavebeam.spectrum import ModelParams, solve_spectrum

p = ModelParams()
br = solve_spectrum(p, 16)

# Lower constant: windowed energy on [0, T] over the coefficient norm. Random draws
# rarely approach the worst direction, so the sampled minimum sits well above the exact one.
for T in (7.0, 9.0, 12.0):
    c1 = ingham.estimate_inverse_constant(br, 300, T, seed=0, params=p)
    print(f"T={T:4.1f}  sampled c1={c1.value:9.4f}   exact minimum={c1.exact:9.4f}")

# Upper constant on [-T, T]: the sampled maximum stays below the exact one.
c2 = ingham.estimate_direct_constant(br, 300, 7.0, seed=0, params=p)
print(f"\nupper constant on [-T, T]: sampled {c2.value:.4g}, exact maximum {c2.exact:.4g}")

# Kernel sums for the tail, with the smallest admissible starting mode.
rep = ingham.kernel_sum_bounds(br, 7.0, 0.1, 1.0)
print(f"\nkernel sums hold from mode {rep.n0_hat}; smallest margin {np.min(rep.margins()):.4f}")

# Boundary-term constant: Cauchy-Schwarz value against random draws.
C = ingham.calD_bound_constant(br, p)
print(f"\nboundary-term constant (Cauchy-Schwarz) = {C:.3f}")
