"""Quadrature statistics and Monte Carlo balanced homodyne detection.

Quadrature convention x = a + a^dag, so the oscillator eigenfunctions are
psi_n(x) = (2 pi)^{-1/4} (2^n n!)^{-1/2} H_n(x/sqrt(2)) e^{-x^2/4} and the
phase enters as p(x; theta) = sum_nm rho_nm e^{-i(n-m)theta} psi_n psi_m.
Non-unit detection efficiency eta smears the ideal pdf with a zero-mean
Gaussian of variance (1-eta)/eta.

Sampling draws each record from the eta-smeared pdf of its own phase via
inverse-CDF interpolation on a dense x grid (2^14 points).  The CDF is a
trigonometric polynomial of degree < D in theta, which lets one dataset mix
arbitrarily many phases at fixed cost.  Randomness comes from a single
seeded numpy PCG64 stream (rng_id "numpy-pcg64"); datasets are reproducible
byte-for-byte from (state digest, schedule, eta, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.signal import fftconvolve

from . import hilbert
from .errors import (DataContractError, DimensionMismatchError, DomainError,
                     GridError)
from .hilbert import State

RNG_ID = "numpy-pcg64"
SAMPLER_GRID_POINTS = 2 ** 14
MASS_ERROR_LIMIT = 1e-4


def hermite_functions(n_max: int, xs: np.ndarray) -> np.ndarray:
    """psi_0..psi_n_max on ``xs`` via the stable three-term recurrence.

    The recurrence acts on the normalized functions directly,
    psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1),
    so no factorials or raw Hermite polynomials ever overflow.
    """
    xs = np.asarray(xs, dtype=float)
    out = np.empty((n_max + 1, xs.size))
    out[0] = (2.0 * np.pi) ** -0.25 * np.exp(-(xs ** 2) / 4.0)
    if n_max >= 1:
        out[1] = xs * out[0]
    for n in range(1, n_max):
        out[n + 1] = (xs * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def efficiency_noise_variance(eta: float) -> float:
    """Gaussian smearing variance (1 - eta)/eta of an eta-efficient detector."""
    if not 0.0 < eta <= 1.0:
        raise DomainError("efficiency must lie in (0, 1]")
    return (1.0 - eta) / eta


@dataclass(frozen=True)
class QuadraturePdf:
    """Sampled probability density of x_theta outcomes."""

    theta: float
    xs: np.ndarray
    density: np.ndarray
    efficiency: float = 1.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if xs.shape != density.shape or xs.ndim != 1:
            raise DimensionMismatchError("xs and density must be equal-length vectors")
        if not 0.0 < self.efficiency <= 1.0:
            raise DomainError("efficiency must lie in (0, 1]")
        xs.setflags(write=False)
        density.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "density", density)

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.xs))

    def mean(self) -> float:
        return float(np.trapezoid(self.xs * self.density, self.xs))

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.xs - m) ** 2 * self.density, self.xs))

    def cdf(self) -> np.ndarray:
        dx = np.diff(self.xs)
        c = np.concatenate(
            [[0.0], np.cumsum(0.5 * dx * (self.density[1:] + self.density[:-1]))])
        return c


def _state_matrix(state: State) -> np.ndarray:
    if hilbert.is_two_mode(state):
        raise DimensionMismatchError("quadrature pdfs are single-mode")
    if hilbert.is_ket(state):
        return np.outer(state.amps, state.amps.conj())
    return state.elems


def default_axis(state: State, eta: float = 1.0,
                 points: int = SAMPLER_GRID_POINTS) -> np.ndarray:
    """Symmetric x grid wide enough for every phase of the smeared pdf."""
    rho = _state_matrix(state)
    d = rho.shape[0]
    ops = hilbert.ladder_matrices(d)
    mean_a = np.einsum("ij,ji->", rho, ops.annihilation)
    mean_n = float(np.einsum("ij,ji->", rho, ops.number).real)
    mean_a2 = np.einsum("ij,ji->", rho, ops.annihilation @ ops.annihilation)
    # max over theta of Delta^2 x_theta = 1 + 2<dn> + 2|<da^2>|
    var_max = abs(1.0 + 2.0 * (mean_n - abs(mean_a) ** 2)
                  + 2.0 * abs(mean_a2 - mean_a ** 2))
    var_max += efficiency_noise_variance(eta)
    half = 2.0 * abs(mean_a) + 8.0 * math.sqrt(var_max) + 2.0
    return np.linspace(-half, half, points)


def quadrature_pdf(state: State, theta: float, xs: np.ndarray) -> QuadraturePdf:
    """p(x; theta) of the ideal (eta = 1) quadrature measurement on ``xs``."""
    rho = _state_matrix(state)
    d = rho.shape[0]
    xs = np.asarray(xs, dtype=float)
    psi = hermite_functions(d - 1, xs)
    phases = np.exp(-1j * theta * np.arange(d))
    rho_rot = rho * np.outer(phases, phases.conj())
    density = np.einsum("nx,nm,mx->x", psi, rho_rot, psi).real
    pdf = QuadraturePdf(theta, xs, density, 1.0)
    deficit = abs(1.0 - pdf.mass() - state.tail_deficit)
    if deficit > MASS_ERROR_LIMIT:
        raise GridError(
            f"x axis loses probability mass {deficit:.3e}; widen the axis")
    return pdf


def _gaussian_kernel(dx: float, var: float) -> np.ndarray:
    half = int(math.ceil(8.0 * math.sqrt(var) / dx))
    ts = np.arange(-half, half + 1) * dx
    k = np.exp(-(ts ** 2) / (2.0 * var))
    return k / (np.sum(k) * dx)       # unit discrete mass by construction


def _smear_array(values: np.ndarray, dx: float, var: float) -> np.ndarray:
    if var == 0.0:
        return values.copy()
    kernel = _gaussian_kernel(dx, var)
    return fftconvolve(values, kernel, mode="same") * dx


def smear_efficiency(pdf: QuadraturePdf, eta: float) -> QuadraturePdf:
    """Convolve an ideal pdf with the eta detection noise Gaussian."""
    var = efficiency_noise_variance(eta)
    if pdf.efficiency != 1.0:
        raise DomainError("smear_efficiency expects an unsmeared (eta = 1) pdf")
    if eta == 1.0:
        return QuadraturePdf(pdf.theta, pdf.xs, pdf.density.copy(), 1.0)
    dx = float(pdf.xs[1] - pdf.xs[0])
    return QuadraturePdf(pdf.theta, pdf.xs,
                         _smear_array(pdf.density, dx, var), eta)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomodyneDataset:
    """Phase/outcome records with efficiency and RNG provenance."""

    thetas: np.ndarray
    xs: np.ndarray
    eta: float
    seed: int
    state_digest: str
    rng_id: str = RNG_ID
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        xs = np.asarray(self.xs, dtype=float)
        if thetas.shape != xs.shape or thetas.ndim != 1 or thetas.size < 1:
            raise DataContractError("records must be parallel non-empty vectors")
        if np.any(thetas < 0.0) or np.any(thetas >= np.pi):
            raise DataContractError("phases must lie in [0, pi)")
        thetas.setflags(write=False)
        xs.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "xs", xs)

    @property
    def m(self) -> int:
        return self.thetas.size

    def records(self):
        return zip(self.thetas, self.xs)


def _van_der_corput(count: int) -> np.ndarray:
    """Base-2 radical-inverse sequence on [0, 1); every prefix is uniform."""
    ks = np.arange(count, dtype=np.int64)
    out = np.zeros(count)
    scale = 0.5
    while np.any(ks):
        out += scale * (ks & 1)
        ks >>= 1
        scale *= 0.5
    return out


def _resolve_schedule(schedule) -> np.ndarray:
    if isinstance(schedule, (int, np.integer)):
        m = int(schedule)
        if m < 1:
            raise DomainError("sample count must be >= 1")
        # low-discrepancy order: prefixes of the dataset stay uniform over
        # [0, pi), which keeps convergence scans over prefixes unbiased
        return np.pi * _van_der_corput(m)
    thetas = np.asarray(schedule, dtype=float)
    if thetas.size < 1:
        raise DomainError("schedule must contain at least one phase")
    if np.any(thetas < 0.0) or np.any(thetas >= np.pi):
        raise DomainError("scheduled phases must lie in [0, pi)")
    return thetas


def sample_homodyne(state: State, schedule, eta: float = 1.0,
                    seed: int = 0) -> HomodyneDataset:
    """Draw one outcome of x_theta per scheduled phase.

    ``schedule`` is either an integer M (phases equispaced over [0, pi)) or
    an explicit sequence of phases.  Each outcome is an inverse-CDF draw from
    the eta-smeared pdf of its own phase; given the seed, the dataset is
    fully deterministic.
    """
    thetas = _resolve_schedule(schedule)
    var = efficiency_noise_variance(eta)
    rho = _state_matrix(state)
    d = rho.shape[0]
    xs = default_axis(state, eta)
    dx = float(xs[1] - xs[0])
    psi = hermite_functions(d - 1, xs)

    # Fourier coefficients in theta: p(x;theta) = F_0 + 2 Re sum_d e^{-i d th} F_d
    f_rows = np.empty((d, xs.size), dtype=complex)
    for k in range(d):
        diag = np.diagonal(rho, offset=-k)        # rho[n, n-k] for n >= k
        f_rows[k] = np.einsum("n,nx,nx->x", diag, psi[k:], psi[:d - k])
    if var > 0.0:
        kernel = _gaussian_kernel(dx, var)
        f_rows = fftconvolve(f_rows, kernel[None, :], mode="same", axes=1) * dx

    # cumulative trapezoid of each Fourier row gives the CDF coefficients
    seg = 0.5 * dx * (f_rows[:, 1:] + f_rows[:, :-1])
    g_rows = np.concatenate(
        [np.zeros((d, 1), dtype=complex), np.cumsum(seg, axis=1)], axis=1)
    weights = np.full(d, 2.0)
    weights[0] = 1.0
    g_rows *= weights[:, None]

    rng = np.random.Generator(np.random.PCG64(seed))
    unit = rng.random(thetas.size)

    samples = np.empty(thetas.size)
    n_grid = xs.size
    chunk = 32768
    ks = np.arange(d)
    for start in range(0, thetas.size, chunk):
        th = thetas[start:start + chunk]
        phases = np.exp(-1j * np.outer(th, ks))   # (m, d)

        def cdf_at(idx):
            return np.einsum("md,dm->m", phases, g_rows[:, idx]).real

        total = cdf_at(np.full(th.size, n_grid - 1, dtype=np.intp))
        u = unit[start:start + chunk] * total
        lo = np.zeros(th.size, dtype=np.intp)
        hi = np.full(th.size, n_grid - 1, dtype=np.intp)
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            cm = cdf_at(mid)
            take = cm <= u
            lo = np.where(take, mid, lo)
            hi = np.where(take, hi, mid)
        c_lo, c_hi = cdf_at(lo), cdf_at(hi)
        frac = np.where(c_hi > c_lo, (u - c_lo) / np.where(c_hi > c_lo, c_hi - c_lo, 1.0), 0.5)
        samples[start:start + chunk] = xs[lo] + np.clip(frac, 0.0, 1.0) * dx

    return HomodyneDataset(thetas, samples, float(eta), int(seed),
                           hilbert.state_digest(state))


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------

def save_dataset(ds: HomodyneDataset, path) -> None:
    """CSV with a comment-prefixed JSON header line, then theta,x records."""
    header = {"eta": ds.eta, "seed": ds.seed, "M": ds.m,
              "state_digest": ds.state_digest, "rng_id": ds.rng_id}
    header.update(ds.extras)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write("theta,x\n")
        for th, x in ds.records():
            fh.write(f"{float(th)!r},{float(x)!r}\n")


def load_dataset(path) -> HomodyneDataset:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise DataContractError("missing JSON header line")
        try:
            header = json.loads(first[2:])
        except json.JSONDecodeError as exc:
            raise DataContractError(f"bad JSON header: {exc}") from exc
        for key in ("eta", "seed", "M", "state_digest", "rng_id"):
            if key not in header:
                raise DataContractError(f"header missing required key {key!r}")
        if fh.readline().strip() != "theta,x":
            raise DataContractError("missing theta,x column header")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) != header["M"]:
        raise DataContractError(
            f"record count {len(rows)} disagrees with header M={header['M']}")
    try:
        thetas = np.array([float(r[0]) for r in rows])
        xs = np.array([float(r[1]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataContractError(f"malformed record: {exc}") from exc
    extras = {k: v for k, v in header.items()
              if k not in ("eta", "seed", "M", "state_digest", "rng_id")}
    return HomodyneDataset(thetas, xs, float(header["eta"]), int(header["seed"]),
                           header["state_digest"], header["rng_id"], extras)


# ---------------------------------------------------------------------------
# balanced detection with a finite local oscillator
# ---------------------------------------------------------------------------

class PhaseTraceSummary(NamedTuple):
    centers: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    counts: np.ndarray
    max_squeezing_db: float


def phase_trace_summary(ds: HomodyneDataset, bins: int = 50) -> PhaseTraceSummary:
    """Per-phase-bin means/variances plus the fitted maximum squeezing.

    The quadrature variance of any single-mode Gaussian-or-not state obeys
    V(theta) = a + b cos(2 theta) + c sin(2 theta) at the level of second
    moments, so the bin variances are fitted by weighted least squares
    (weights 1/V^2, uniform relative error) and the squeezing is reported
    as -10 log10 of the fitted minimum a - sqrt(b^2 + c^2).
    """
    if bins < 2:
        raise DomainError("need at least 2 phase bins")
    idx = np.minimum((ds.thetas / np.pi * bins).astype(int), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    if np.any(counts < 2):
        raise DomainError("every phase bin needs at least 2 records")
    sums = np.bincount(idx, weights=ds.xs, minlength=bins)
    sq_sums = np.bincount(idx, weights=ds.xs ** 2, minlength=bins)
    means = sums / counts
    variances = (sq_sums - counts * means ** 2) / (counts - 1)
    centers = (np.arange(bins) + 0.5) * np.pi / bins
    design = np.stack([np.ones(bins), np.cos(2 * centers),
                       np.sin(2 * centers)], axis=1)
    w = 1.0 / np.clip(variances, 1e-12, None)
    coef, *_ = np.linalg.lstsq(design * w[:, None], variances * w, rcond=None)
    vmin = coef[0] - math.hypot(coef[1], coef[2])
    db = -10.0 * math.log10(vmin) if vmin > 0.0 else math.inf
    return PhaseTraceSummary(centers, means, variances, counts, db)


def balanced_detector_moments(state: State, z: float, theta: float):
    """(<I>, <I^2>) of the normalized difference photocurrent.

    For a local oscillator of real amplitude z at phase theta,
    <I> = <x_theta> exactly and <I^2> = <x_theta^2> + <n>/z^2.
    """
    if z <= 0.0:
        raise DomainError("local oscillator amplitude must be positive")
    rho = _state_matrix(state)
    ops = hilbert.ladder_matrices(rho.shape[0])
    x_op = ops.quadrature(theta)
    mean_x = float(np.einsum("ij,ji->", rho, x_op).real)
    mean_x2 = float(np.einsum("ij,ji->", rho, x_op @ x_op).real)
    mean_n = float(np.einsum("ij,ji->", rho, ops.number).real)
    return mean_x, mean_x2 + mean_n / z ** 2
