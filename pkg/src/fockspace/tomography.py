"""Pattern-function estimation of operator expectations from homodyne data.

Every supported target reduces to a combination of normally ordered
monomials (a^dag)^n a^m, whose efficiency-corrected kernel is

    R_eta[(a^dag)^n a^m](x, theta)
        = e^{i(m-n) theta} H_{n+m}(sqrt(eta) x / sqrt(2))
          / ( sqrt((2 eta)^{n+m}) C(n+m, n) ).

The phase carries the annihilation-minus-creation count, which is what
makes the average over uniformly distributed theta in [0, pi) an unbiased
estimator of <(a^dag)^n a^m> (e.g. the kernel of a is e^{+i theta} x).
Hermite polynomials are evaluated by the plain three-term recurrence in
polynomial form; the degree cap n + m <= 4 covers the closed-form catalog
with one margin, beyond which the estimator variance at finite efficiency
diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataContractError, DomainError
from .homodyne import HomodyneDataset

MAX_DEGREE = 4


def hermite_polynomial(n: int, z):
    """Physicists' H_n(z) via H_{k+1} = 2 z H_k - 2 k H_{k-1}."""
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev
    h = 2.0 * z
    for k in range(1, n):
        h, h_prev = 2.0 * z * h - 2.0 * k * h_prev, h
    return h


@dataclass(frozen=True)
class Target:
    """Operator descriptor: sum of (n_dag, n_ann, coeff) monomials + constant."""

    name: str
    monomials: tuple
    constant: complex = 0.0
    hermitian: bool = False

    @property
    def degree(self) -> int:
        return max((n + m for n, m, _ in self.monomials), default=0)


def target_normal_ordered(n_dag: int, n_ann: int) -> Target:
    if n_dag < 0 or n_ann < 0 or n_dag + n_ann > MAX_DEGREE:
        raise DomainError(f"normally ordered targets need n + m <= {MAX_DEGREE}")
    return Target(f"ad^{n_dag} a^{n_ann}", ((n_dag, n_ann, 1.0 + 0j),),
                  hermitian=(n_dag == n_ann))


def target_a() -> Target:
    return Target("a", ((0, 1, 1.0 + 0j),))


def target_a2() -> Target:
    return Target("a^2", ((0, 2, 1.0 + 0j),))


def target_quadrature(phi: float = 0.0) -> Target:
    return Target(f"x_phi(phi={phi!r})",
                  ((0, 1, np.exp(-1j * phi)), (1, 0, np.exp(1j * phi))),
                  hermitian=True)


def target_quadrature_sq(phi: float = 0.0) -> Target:
    return Target(f"x_phi^2(phi={phi!r})",
                  ((0, 2, np.exp(-2j * phi)), (2, 0, np.exp(2j * phi)),
                   (1, 1, 2.0 + 0j)),
                  constant=1.0 + 0j, hermitian=True)


def target_number() -> Target:
    return Target("n", ((1, 1, 1.0 + 0j),), hermitian=True)


def target_number_sq() -> Target:
    # (a^dag a)^2 = a^dag^2 a^2 + a^dag a
    return Target("n^2", ((2, 2, 1.0 + 0j), (1, 1, 1.0 + 0j)), hermitian=True)


def parse_target(text: str) -> Target:
    """Parse a CLI-style target: a, a^2, n, n^2, x[:phi], x^2[:phi], nm:N,M."""
    name, _, arg = text.partition(":")
    name = name.strip()
    if name == "a":
        return target_a()
    if name == "a^2":
        return target_a2()
    if name == "n":
        return target_number()
    if name == "n^2":
        return target_number_sq()
    if name == "x":
        return target_quadrature(float(arg) if arg else 0.0)
    if name == "x^2":
        return target_quadrature_sq(float(arg) if arg else 0.0)
    if name == "nm":
        try:
            nd, na = (int(v) for v in arg.split(","))
        except ValueError as exc:
            raise DomainError(f"bad monomial spec {text!r}") from exc
        return target_normal_ordered(nd, na)
    raise DomainError(f"unknown estimation target {text!r}")


@dataclass(frozen=True)
class EstimatorKernel:
    """A target operator bound to the detection efficiency of its data."""

    target: Target
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise DomainError("efficiency must lie in (0, 1]")
        if self.target.degree > MAX_DEGREE:
            raise DomainError(f"kernel degree cap is {MAX_DEGREE}")


def _monomial_kernel(n_dag: int, n_ann: int, eta: float, x, theta):
    deg = n_dag + n_ann
    z = np.sqrt(eta / 2.0) * np.asarray(x, dtype=float)
    norm = math.sqrt((2.0 * eta) ** deg) * math.comb(deg, n_dag)
    phase = np.exp(1j * (n_ann - n_dag) * np.asarray(theta, dtype=float))
    return phase * hermite_polynomial(deg, z) / norm


def kernel_eval(kernel: EstimatorKernel, x, theta):
    """R_eta[target](x, theta); broadcasts over arrays of records."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    total = np.full(np.broadcast_shapes(x.shape, theta.shape),
                    kernel.target.constant, dtype=complex)
    for n_dag, n_ann, coeff in kernel.target.monomials:
        total = total + coeff * _monomial_kernel(n_dag, n_ann, kernel.eta, x, theta)
    return complex(total) if total.ndim == 0 else total


def kernel_catalog() -> list:
    """The closed-form catalog plus the generic monomial kernel."""
    return [
        {"target": "a", "kernel": "e^{i theta} x"},
        {"target": "a^2", "kernel": "e^{2 i theta} (x^2 - 1/eta)"},
        {"target": "x:phi", "kernel": "2 x cos(theta - phi)"},
        {"target": "x^2:phi",
         "kernel": "(x^2 - 1/eta) {1 + 2 cos[2(theta - phi)]} + 1"},
        {"target": "n", "kernel": "(x^2 - 1/eta) / 2"},
        {"target": "n^2",
         "kernel": "x^4/6 - (2 - eta)/(2 eta) x^2 + (1 - eta)/(2 eta^2)"},
        {"target": "nm:N,M",
         "kernel": "e^{i(M-N) theta} H_{N+M}(sqrt(eta) x/sqrt(2)) "
                   "/ (sqrt((2 eta)^{N+M}) C(N+M, N)), N+M <= 4"},
    ]


@dataclass(frozen=True)
class Estimate:
    """Sample-mean estimate with per-component 1-sigma standard errors.

    ``std_error`` combines the component errors in quadrature; for
    Hermitian targets the imaginary component vanishes sample-by-sample and
    the combined value reduces to the real-part standard error.
    """

    value: complex
    std_error: float
    std_error_re: float
    std_error_im: float
    m: int


def _estimate_from_samples(samples: np.ndarray) -> Estimate:
    m = samples.size
    value = complex(np.mean(samples))
    se_re = math.sqrt(np.var(samples.real, ddof=1) / m)
    se_im = math.sqrt(np.var(samples.imag, ddof=1) / m)
    return Estimate(value, math.hypot(se_re, se_im), se_re, se_im, m)


def estimate(dataset: HomodyneDataset, kernel: EstimatorKernel) -> Estimate:
    """Empirical average of the kernel over the dataset records."""
    if dataset.eta != kernel.eta:
        raise DataContractError(
            f"dataset efficiency {dataset.eta} does not match kernel "
            f"efficiency {kernel.eta}")
    if dataset.m < 2:
        raise DomainError("estimation needs at least 2 records")
    samples = kernel_eval(kernel, dataset.xs, dataset.thetas)
    return _estimate_from_samples(samples)


def convergence_scan(dataset: HomodyneDataset, kernel: EstimatorKernel,
                     checkpoints) -> list:
    """Estimates on dataset prefixes; returns [(M_i, Estimate), ...]."""
    checkpoints = [int(c) for c in checkpoints]
    if any(c2 <= c1 for c1, c2 in zip(checkpoints, checkpoints[1:])):
        raise DomainError("checkpoints must be strictly increasing")
    if checkpoints and checkpoints[-1] > dataset.m:
        raise DomainError("checkpoint exceeds the dataset size")
    if any(c < 2 for c in checkpoints):
        raise DomainError("estimation needs at least 2 records")
    if dataset.eta != kernel.eta:
        raise DataContractError("dataset/kernel efficiency mismatch")
    samples = kernel_eval(kernel, dataset.xs, dataset.thetas)
    out = []
    for c in checkpoints:
        out.append((c, _estimate_from_samples(samples[:c])))
    return out


def fit_error_slope(scan: list) -> float:
    """Fitted slope of log std_error versus log M over a convergence scan."""
    ms = np.array([float(c) for c, _ in scan])
    ses = np.array([est.std_error for _, est in scan])
    return float(np.polyfit(np.log(ms), np.log(ses), 1)[0])
