"""Photon-number statistics: distributions, generating functions, loss.

The moment generating function is M(mu) = sum_n (1-mu)^n p(n) on mu in
[0, 2].  Direct summation over the truncated distribution is the production
path for moments and for recovering p(n); the derivative routes are kept as
finite-difference cross-checks (step 1e-3, one Richardson level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from . import hilbert
from .errors import DomainError, UndefinedStatisticError
from .hilbert import State

# Probabilities below this are treated as roundoff and clamped to zero;
# anything more negative is a bug in the caller.
NEGATIVITY_CLAMP = -1e-12

_FD_STEP = 1e-3


@dataclass(frozen=True)
class PhotonDistribution:
    """p(0..D-1) plus the probability mass beyond the cutoff."""

    probs: np.ndarray
    tail_deficit: float

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise DomainError("probs must be a one-dimensional vector")
        if np.min(probs) < NEGATIVITY_CLAMP:
            raise DomainError(
                f"probability {np.min(probs):.3e} below the roundoff clamp")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return self.probs.size

    def moment(self, m: int) -> float:
        """<n^m> by direct summation."""
        return float(np.sum(np.arange(self.dim, dtype=float) ** m * self.probs))


def photon_distribution(state: State) -> PhotonDistribution:
    """p(n) = <n|rho|n>; for two-mode states, the joint diagonal is flattened."""
    if hilbert.is_ket(state):
        probs = np.abs(state.amps) ** 2
    else:
        probs = np.diag(state.elems).real
    return PhotonDistribution(probs, 1.0 - float(np.sum(np.clip(probs, 0.0, None))))


def mgf(dist: PhotonDistribution, mu) -> float:
    """M(mu) = sum (1-mu)^n p(n), mu in [0, 2].  Accepts scalar or array mu."""
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0.0) or np.any(mu_arr > 2.0):
        raise DomainError("mgf requires 0 <= mu <= 2")
    n = np.arange(dist.dim)
    vals = (1.0 - np.atleast_1d(mu_arr)[:, None]) ** n @ dist.probs
    return float(vals[0]) if mu_arr.ndim == 0 else vals


@dataclass(frozen=True)
class MgfCurve:
    """Callable wrapper around the MGF of one distribution."""

    dist: PhotonDistribution

    def __call__(self, mu):
        # evaluation outside [0,2] is used internally by the finite-difference
        # stencils; the truncated sum is a polynomial, so it stays defined
        n = np.arange(self.dist.dim)
        mu_arr = np.asarray(mu, dtype=float)
        vals = (1.0 - np.atleast_1d(mu_arr)[:, None]) ** n @ self.dist.probs
        return float(vals[0]) if mu_arr.ndim == 0 else vals


def mgf_curve(dist: PhotonDistribution) -> MgfCurve:
    return MgfCurve(dist)


def mgf_moment(dist: PhotonDistribution, m: int) -> float:
    """<n^m>, production path: direct summation over the distribution."""
    if m < 0:
        raise DomainError("moment order must be >= 0")
    return dist.moment(m)


def _fd_derivative(f, x0: float, order: int, h: float) -> float:
    """Central finite-difference derivative with one Richardson level."""
    stencils = {
        1: ([-1, 1], [-0.5, 0.5], 1),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0], 2),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5], 3),
        4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0], 4),
    }
    offs, coefs, power = stencils[order]

    def estimate(step):
        return sum(c * f(x0 + o * step) for o, c in zip(offs, coefs)) / step ** power

    d_h, d_h2 = estimate(h), estimate(h / 2.0)
    return (4.0 * d_h2 - d_h) / 3.0


def mgf_moment_fd(dist: PhotonDistribution, m: int, h: float = _FD_STEP) -> float:
    """Cross-check of <n^m> via [(mu-1) d/dmu]^m M at mu = 0, m <= 4.

    Uses the expansion into falling-factorial moments: the k-th derivative of
    M at 0 is (-1)^k <n(n-1)...(n-k+1)>, and Stirling numbers assemble <n^m>.
    """
    if m == 0:
        return 1.0
    if m > 4:
        raise DomainError("finite-difference moments above order 4 are "
                          "dominated by noise and unsupported")
    curve = MgfCurve(dist)
    stirling = {1: [1], 2: [1, 1], 3: [1, 3, 1], 4: [1, 7, 6, 1]}
    total = 0.0
    for k in range(1, m + 1):
        deriv = _fd_derivative(curve, 0.0, k, h)
        total += stirling[m][k - 1] * (-1.0) ** k * deriv
    return total


def mgf_recover_pn(curve: MgfCurve, n: int, h: float = _FD_STEP) -> float:
    """p(n) = (-1)^n / n! d^n M / dmu^n at mu = 1, n <= 4 (cross-check route)."""
    if n == 0:
        return float(curve(1.0))
    if n > 4:
        raise DomainError("finite-difference derivatives above order 4 are "
                          "dominated by noise and unsupported")
    return (-1.0) ** n / math.factorial(n) * _fd_derivative(curve, 1.0, n, h)


def bernoulli_loss(dist: PhotonDistribution, eta: float) -> PhotonDistribution:
    """Detected statistics P(m) = sum_l C(l,m) eta^m (1-eta)^{l-m} p(l)."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError("efficiency must lie in [0, 1]")
    if eta == 1.0:
        return PhotonDistribution(dist.probs.copy(), dist.tail_deficit)
    d = dist.dim
    ls = np.arange(d)
    transfer = binom.pmf(ls[:, None], ls[None, :], eta)   # [m, l]
    return PhotonDistribution(transfer @ dist.probs, dist.tail_deficit)


def _mean_or_raise(dist: PhotonDistribution) -> float:
    mean = dist.moment(1)
    if mean <= 1e-12:
        raise UndefinedStatisticError(
            "statistic undefined for a (near-)vacuum distribution")
    return mean


def fano(dist: PhotonDistribution) -> float:
    """F = Delta^2(n) / <n>."""
    mean = _mean_or_raise(dist)
    return (dist.moment(2) - mean ** 2) / mean


def mandel_q(dist: PhotonDistribution) -> float:
    """Q = F - 1 = <n>[g2(0) - 1]."""
    return fano(dist) - 1.0


def g2_zero(dist: PhotonDistribution) -> float:
    """g2(0) = (<n^2> - <n>) / <n>^2."""
    mean = _mean_or_raise(dist)
    return (dist.moment(2) - mean) / mean ** 2


def ordered_number_expectation(state: State, ordering: str, power: int = 1) -> float:
    """Expectation of the number operator under a chosen operator ordering.

    ``ordering`` is one of 'normal', 'antinormal', 'symmetric'; power 1 or 2.
    Power 2 refers to the ordered product of two creation and two
    annihilation operators, e.g. <:n^2:> = <ad ad a a>.  The truncated
    operators are all diagonal in n, so exact operator identities are used:

        normal      n(n-1)            antinormal  (n+1)(n+2)
        symmetric   n^2 + n + 1/2     (power 2)

    and n, n+1, n+1/2 at power 1.
    """
    if power not in (1, 2):
        raise DomainError("power must be 1 or 2")
    dist = photon_distribution(state)
    n1, n2 = dist.moment(1), dist.moment(2)
    if ordering == "normal":
        return n1 if power == 1 else n2 - n1
    if ordering == "antinormal":
        return n1 + 1.0 if power == 1 else n2 + 3.0 * n1 + 2.0
    if ordering == "symmetric":
        return n1 + 0.5 if power == 1 else n2 + n1 + 0.5
    raise DomainError(f"unknown ordering {ordering!r}")


def save_distribution_csv(dist: PhotonDistribution, path) -> None:
    """CSV export, columns n,p, shortest-repr float formatting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,p\n")
        for n, p in enumerate(dist.probs):
            fh.write(f"{n},{float(p)!r}\n")
