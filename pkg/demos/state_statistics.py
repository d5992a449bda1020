"""Tour of the state families and their photon-counting statistics.

Builds the four workhorse states at equal mean photon number, compares
their number distributions, generating functions and classicality
diagnostics, then pushes each through a lossy detector.
"""

import math

import numpy as np

from fockspace import hilbert as H
from fockspace import photon_stats as PS

MEAN_PHOTONS = 2.0

states = {
    "fock |2>": H.make_fock(2, 40),
    "coherent": H.make_coherent(math.sqrt(MEAN_PHOTONS), 60),
    "thermal": H.make_thermal(MEAN_PHOTONS, 120),
    "squeezed": H.make_squeezed_vacuum(math.asinh(math.sqrt(MEAN_PHOTONS)), 120),
}

print(f"all states prepared with <n> = {MEAN_PHOTONS}\n")
print(f"{'state':<10} {'<n>':>8} {'var n':>8} {'Fano':>8} {'Mandel Q':>9} "
      f"{'g2(0)':>8}")
for name, st in states.items():
    dist = PS.photon_distribution(st)
    print(f"{name:<10} {dist.moment(1):8.4f} "
          f"{dist.moment(2) - dist.moment(1)**2:8.4f} "
          f"{PS.fano(dist):8.4f} {PS.mandel_q(dist):9.4f} "
          f"{PS.g2_zero(dist):8.4f}")

# The moment generating function M(mu) = sum (1-mu)^n p(n) has closed forms
# for every family; the truncated sums reproduce them to near machine level.
mus = np.linspace(0.0, 2.0, 5)
closed = {
    "coherent": np.exp(-MEAN_PHOTONS * mus),
    "thermal": 1.0 / (1.0 + MEAN_PHOTONS * mus),
    "squeezed": 1.0 / np.sqrt(1.0 + 2 * mus * MEAN_PHOTONS
                              - mus ** 2 * MEAN_PHOTONS),
}
print("\nMGF against closed forms (max abs deviation):")
for name, expected in closed.items():
    dist = PS.photon_distribution(states[name])
    err = np.max(np.abs(PS.mgf(dist, mus) - expected))
    print(f"  {name:<10} {err:.2e}")

sq_dist = PS.photon_distribution(states["squeezed"])
print(f"\nsqueezed M(2) = {PS.mgf(sq_dist, 2.0):.10f} "
      "(even-photon parity: all odd probabilities vanish)")

# A detector of efficiency eta acts as a Bernoulli filter: the detected
# distribution is a binomial mixture and the MGF picks up mu -> eta*mu.
eta = 0.7
print(f"\ndetected statistics at eta = {eta}:")
for name in ("coherent", "thermal", "squeezed"):
    dist = PS.photon_distribution(states[name])
    detected = PS.bernoulli_loss(dist, eta)
    law = np.max(np.abs(PS.mgf(detected, mus) - PS.mgf(dist, eta * mus)))
    print(f"  {name:<10} detected <n> = {detected.moment(1):.6f}   "
          f"substitution-law dev = {law:.1e}")

# Operator orderings of the number operator differ by half-quanta.
coh = states["coherent"]
print("\nnumber-operator orderings for the coherent state:")
for ordering in ("normal", "antinormal", "symmetric"):
    val = PS.ordered_number_expectation(coh, ordering)
    print(f"  {ordering:<11} <n> = {val:.4f}")
