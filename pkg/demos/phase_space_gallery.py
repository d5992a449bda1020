"""Quasi-probability distributions across the ordering family.

Samples Wigner functions on a grid, shows Fock-state negativity, walks an
ordering chain W -> Q by Gaussian convolution, evaluates a legitimate
P-function (thermal) and demonstrates why nonclassical states refuse one.
Grids are written as plot-ready CSV files under demo_output/.
"""

import math
from pathlib import Path

import numpy as np

from fockspace import hilbert as H
from fockspace import phase_space as PH
from fockspace.errors import SingularPError

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

grid = PH.PhaseGrid(4.0, 128)
mesh = grid.mesh()

print("Wigner functions on a 128x128 grid, half-width 4:")
for name, st in [("vacuum", H.make_fock(0, 20)),
                 ("fock1", H.make_fock(1, 20)),
                 ("coherent", H.make_coherent(1.0, 30)),
                 ("squeezed", H.make_squeezed_vacuum(0.5, 60))]:
    w = PH.quasi_prob_fft(st, grid, 0.0)
    PH.save_quasi_prob(w, OUT / f"wigner_{name}.csv", OUT / f"wigner_{name}.json",
                       H.state_digest(st))
    print(f"  {name:<9} mass={w.riemann_mass():+.6f} "
          f"min={w.values.min():+.4f} max={w.values.max():+.4f}")

print(f"\nfock1 Wigner at the origin: {PH.wigner_direct(H.make_fock(1, 40), 0.0):+.6f}"
      f" = -2/pi (negativity witnesses nonclassicality)")

# Ordering chain: convolving the Wigner function with the Gaussian kernel of
# width (p - q)/2 lands exactly on the Husimi Q-function.
fock1 = H.make_fock(1, 20)
w1 = PH.quasi_prob_fft(fock1, grid, 0.0)
q_via_conv = PH.ordering_convolution(w1, -1.0)
q_direct = PH.q_function(fock1, mesh)
print(f"\nW -> Q convolution against direct Q: "
      f"max dev {np.max(np.abs(q_via_conv.values - q_direct)):.2e}")
print(f"Q stays nonnegative: min = {q_via_conv.values.min():+.2e}")

# P-functions exist as ordinary functions only for classical-Gaussian
# states.  The thermal P is a Gaussian; the squeezed-vacuum chi(lambda, 1)
# explodes and the request is refused.
thermal = H.make_thermal(1.0, 100)
p_grid = PH.PhaseGrid(4.0, 24)
p = PH.quasi_prob_fft(thermal, p_grid, 1.0)
expected = np.exp(-np.abs(p_grid.mesh()) ** 2) / math.pi
print(f"\nthermal P-function vs e^(-|a|^2)/pi: "
      f"max dev {np.max(np.abs(p.values - expected)):.2e}")
try:
    PH.quasi_prob_fft(H.make_squeezed_vacuum(0.5, 60), PH.PhaseGrid(5.0, 128), 1.0)
except SingularPError as exc:
    print(f"squeezed P-function refused: {exc}")

# Characteristic-function boundedness marks the same frontier.
flag = PH.char_fn_squeezed_closed_form(0.5, 1.0, p=0.5)
print(f"\nsqueezed chi(lambda, p=0.5) unbounded? {flag.unbounded} "
      f"(threshold p = e^(-2r) = {math.exp(-1.0):.4f})")

# Trace rules evaluate overlaps from phase space alone.
w_t = PH.quasi_prob_fft(thermal, PH.PhaseGrid(5.0, 128), 0.0)
print(f"thermal purity via the Wigner trace rule: "
      f"{PH.trace_rule_wigner(w_t, w_t):.6f} (exact 1/3)")

# Marginals of the Wigner function are the homodyne pdfs.
sq = H.make_squeezed_vacuum(0.5, 40)
w_sq = PH.quasi_prob_fft(sq, PH.PhaseGrid(6.0, 512), 0.0)
for theta, label in ((0.0, "anti-squeezed"), (np.pi / 2, "squeezed")):
    m = PH.marginal(w_sq, theta)
    var = np.trapezoid(m.xs ** 2 * m.density, m.xs)
    print(f"marginal variance at theta={theta:.3f}: {var:.4f} ({label})")
print(f"\ngrids written to {OUT}/")
