"""A walk through the modal spectrum of the coupled wave-beam system.

Run:  python demos/spectrum_tour.py
"""
import numpy as np

from wavebeam.spectrum import ModelParams, solve_spectrum, validate_hypotheses

p = ModelParams()
print(f"parameters: beta={p.beta} eta={p.eta} A={p.A} B={p.B}")

branches = solve_spectrum(p, 64)

# Each mode carries five roots: one real memory root, a wave pair and a beam pair.
# Only the upper member of each pair is shown.
print("\n n   memory root    wave root                beam root")
for b in branches[:6]:
    _, w, _, q, _ = b.roots
    print(f"{b.n:2d}  {b.r: .6f}   {w.real: .6f}{w.imag:+.6f}i   {q.real: .6f}{q.imag:+.6f}i")

# The memory root settles at beta - eta, the beam root hugs i n^2.
n = np.array([b.n for b in branches], dtype=float)
mem = np.abs([b.r - (p.beta - p.eta) for b in branches])
beam = np.abs([b.beam_offset for b in branches])
sel = n >= 8
print("\nlog-log slope of |r - (beta - eta)| vs n^2:", np.polyfit(np.log(n[sel] ** 2), np.log(mem[sel]), 1)[0])
print("log-log slope of |beam root - i n^2| vs n^2:", np.polyfit(np.log(n[sel] ** 2), np.log(beam[sel]), 1)[0])

# Wave damping tends to a constant: half the memory strength.
print("\nwave damping -Re(Lambda) at n = 1, 8, 64:",
      [round(float(-branches[k].roots[1].real), 6) for k in (0, 7, 63)])

print("\nworst relative root residual:", max(max(b.residuals) for b in branches))
rep = validate_hypotheses(branches, p)
print("uniform gap gamma_hat:", rep.gamma_hat)
