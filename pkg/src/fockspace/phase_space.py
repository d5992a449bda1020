"""p-ordered characteristic functions and quasi-probability distributions.

Cartesian conventions, frozen package-wide (mixing them is the dominant bug
risk): lambda = u + i v on the conjugate plane, alpha = (x + i y)/2 on the
phase-space plane, so marginals of the p = 0 distribution are pdfs of the
x = a + a^dag quadrature.  A PhaseGrid with half-width L and N points per
axis pairs with the reciprocal lambda grid of half-width pi N / (4 L), which
makes the discrete Fourier pair exact.

chi(lambda, p) = Tr[rho D(lambda)] e^{p |lambda|^2 / 2}.  The trace against
the truncated displacement is evaluated in the position representation,

    chi(u, v) = integral dq <q - u| rho |q + u> e^{i v q},

with the oscillator eigenfunctions of the truncated basis.  Every factor is
bounded and Gaussian-suppressed, which keeps the evaluation absolutely
stable on arbitrarily large lambda grids (a Fock-ladder recurrence for
<m|D|n> loses all accuracy in the classically forbidden region).  The same
representation drives the direct (Cahill) series and the Glauber inversion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from . import hilbert
from .errors import (DimensionMismatchError, DomainError, GridError,
                     SingularPError)
from .hilbert import DensityMatrix, State
from .homodyne import hermite_functions

# A p > 0 quasi-probability is refused once |chi(lambda, p)| exceeds this on
# the grid: bounded chi marks the classical-Gaussian states, anything growing
# signals a P-function expressible only through derivatives of delta.
OVERFLOW_GUARD = 1e3

# Glauber inversion demands chi below this on the lambda-grid boundary.
GLAUBER_BOUNDARY_TOL = 1e-5

GRID_TOL = 1e-4


@dataclass(frozen=True)
class PhaseGrid:
    """Square rectangular grid, axis values (-L, ..., L - delta), N even."""

    half_width: float
    n: int

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise GridError("grid needs an even point count >= 16")
        if self.half_width <= 0.0:
            raise GridError("grid half-width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def reciprocal(self) -> "PhaseGrid":
        """Conjugate lambda grid: L_lam = pi N / (4 L), same point count."""
        return PhaseGrid(math.pi * self.n / (4.0 * self.half_width), self.n)

    def mesh(self) -> np.ndarray:
        ax = self.axis
        return ax[:, None] + 1j * ax[None, :]


@dataclass(frozen=True)
class CharGrid:
    """chi(lambda, p) sampled on a lambda-plane PhaseGrid."""

    values: np.ndarray
    grid: PhaseGrid
    ordering: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n, self.grid.n):
            raise DimensionMismatchError("values do not match the grid")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class QuasiProbGrid:
    """W(alpha, p) sampled on an alpha-plane PhaseGrid."""

    values: np.ndarray
    grid: PhaseGrid
    ordering: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise DimensionMismatchError("values do not match the grid")
        if not -1.0 <= self.ordering <= 1.0:
            raise DomainError("ordering parameter must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def riemann_mass(self) -> float:
        return float(np.sum(self.values) * self.grid.spacing ** 2)


def suggest_half_width(state: State) -> float:
    """Grid rule L >= 3 + 2 sqrt(<n>) for containing Gaussian tails."""
    if hilbert.is_two_mode(state):
        raise DimensionMismatchError("phase-space grids are single-mode")
    ops = hilbert.ladder_matrices(state.dim)
    mean_n = hilbert.expectation(state, ops.number)
    return 3.0 + 2.0 * math.sqrt(max(mean_n, 0.0))


# ---------------------------------------------------------------------------
# position-representation machinery
# ---------------------------------------------------------------------------

def _state_vectors(state: State):
    """(weights, vectors) with rho = sum_i w_i |vec_i><vec_i|."""
    if hilbert.is_two_mode(state):
        raise DimensionMismatchError("characteristic functions are single-mode")
    if hilbert.is_ket(state):
        return np.ones(1), state.amps[:, None]
    rho = state.elems
    off = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off)) < 1e-14:
        probs = np.clip(np.diag(rho).real, 0.0, None)
        keep = probs > 1e-16
        return probs[keep], np.eye(rho.shape[0], dtype=complex)[:, keep]
    evals, evecs = np.linalg.eigh(rho)
    keep = evals > 1e-15
    return evals[keep], evecs[:, keep]


def _q_spacing(dim: int) -> float:
    # resolve the fastest oscillation of psi_{dim-1}
    return min(0.35, math.pi / (2.0 * math.sqrt(2.0 * dim + 1.0)))


def _support_halfwidth(dim: int) -> float:
    return 2.0 * math.sqrt(2.0 * dim + 1.0) + 8.0


def _eigfun_rows(vectors: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Position wavefunctions of the columns of ``vectors`` on ``xs``."""
    base = hermite_functions(vectors.shape[0] - 1, xs)
    return vectors.T @ base


def char_fn(state: State, lam, p: float = 0.0):
    """chi(lambda, p) = Tr[rho D(lambda)] e^{p|lambda|^2/2}; scalar or array.

    Pointwise evaluation by quadrature over the position representation;
    defined for every lambda (truncated states have entire chi).
    """
    lam_arr = np.asarray(lam, dtype=complex)
    flat = lam_arr.ravel()
    weights, vectors = _state_vectors(state)
    dim = state.dim
    dq = _q_spacing(dim)
    half = _support_halfwidth(dim)
    qs = np.arange(-half, half + dq, dq)
    out = np.empty(flat.size, dtype=complex)
    for i, lam_i in enumerate(flat):
        u, v = lam_i.real, lam_i.imag
        minus = _eigfun_rows(vectors, qs - u)
        plus = _eigfun_rows(vectors, qs + u)
        f = (minus * plus.conj()).T @ weights
        out[i] = dq * np.sum(f * np.exp(1j * v * qs))
    out = _apply_ordering_factor(out, np.abs(flat), p)
    out = out.reshape(lam_arr.shape)
    return complex(out) if lam_arr.ndim == 0 else out


def _apply_ordering_factor(vals: np.ndarray, mags: np.ndarray, p: float):
    if p == 0.0:
        return vals
    if p < 0.0:
        return vals * np.exp(0.5 * p * mags ** 2)
    # log-space magnitude: vals can underflow to denormals exactly where the
    # ordering factor overflows, and the product is the conditioned quantity
    out = np.zeros_like(vals)
    mag = np.abs(vals)
    nz = mag > 0.0
    with np.errstate(over="ignore"):
        out[nz] = (vals[nz] / mag[nz]) * np.exp(
            np.log(mag[nz]) + 0.5 * p * mags[nz] ** 2)
    return out


class SqueezedCharValue(NamedTuple):
    value: Union[complex, np.ndarray]
    unbounded: bool


def char_fn_squeezed_closed_form(r: float, lam, p: float = 0.0) -> SqueezedCharValue:
    """Gaussian chi of the squeezed vacuum (real r), with boundedness flag.

    chi = exp[-(e^{-2r}-p) Re(lam)^2/2 - (e^{2r}-p) Im(lam)^2/2]: the wide
    x quadrature (variance e^{2r} for r > 0) couples to Im(lam) through
    e^{i v x}, so chi is narrow along the imaginary axis.  The flag marks
    p > e^{-2r}, where the Gaussian inverts and the P-side
    quasi-probabilities stop existing as functions.
    """
    lam_arr = np.asarray(lam, dtype=complex)
    cu = (math.exp(-2.0 * r) - p) / 2.0
    cv = (math.exp(2.0 * r) - p) / 2.0
    vals = np.exp(-cu * lam_arr.real ** 2 - cv * lam_arr.imag ** 2).astype(complex)
    value = complex(vals) if lam_arr.ndim == 0 else vals
    return SqueezedCharValue(value, p > math.exp(-2.0 * r))


def _reciprocal_q_axis(grid: PhaseGrid, dim: int):
    """q lattice whose DFT hits the grid's v axis at stride ``ov``.

    The natural window 2 pi / delta is doubled until it contains the basis
    support (otherwise wrapped position tails alias into chi), and the
    spacing is halved until it resolves the fastest basis oscillation.
    The grid's v values sit at every ``ov``-th DFT frequency.
    """
    delta = grid.spacing
    ov = 1
    while ov * 2.0 * math.pi / delta < 2.0 * _support_halfwidth(dim):
        ov *= 2
    window = ov * 2.0 * math.pi / delta
    x = grid.n * ov
    while window / x > _q_spacing(dim):
        x *= 2
    dq = window / x
    return (np.arange(x) - x // 2) * dq, dq, ov


def _row_transform(rows: np.ndarray, forward: bool) -> np.ndarray:
    """sum_j rows[..., j] e^{+-2 pi i (l - X/2)(j - X/2)/X} along the last axis."""
    x = rows.shape[-1]
    sgn = np.where(np.arange(x) % 2, -1.0, 1.0)
    phase = (1j) ** x if forward else (-1j) ** x
    t = rows * sgn
    t = np.fft.ifft(t, axis=-1) * x if forward else np.fft.fft(t, axis=-1)
    return t * sgn * phase


def _char0_rows(state: State, grid: PhaseGrid) -> np.ndarray:
    """Tr[rho D(lambda)] on the grid lattice, indexed [u, v]."""
    weights, vectors = _state_vectors(state)
    qs, dq, ov = _reciprocal_q_axis(grid, state.dim)
    x = qs.size
    n = grid.n
    rows = np.empty((n, x), dtype=complex)
    for k, u in enumerate(grid.axis):
        minus = _eigfun_rows(vectors, qs - u)
        plus = _eigfun_rows(vectors, qs + u)
        rows[k] = (minus * plus.conj()).T @ weights
    rows = _row_transform(rows, forward=True) * dq
    lo = x // 2 - ov * (n // 2)
    return rows[:, lo:lo + ov * n:ov]


def char_grid(state: State, grid: PhaseGrid, p: float = 0.0) -> CharGrid:
    """chi(lambda, p) sampled on a lambda-plane grid."""
    vals = _char0_rows(state, grid)
    vals = _apply_ordering_factor(vals, np.abs(grid.mesh()), p)
    return CharGrid(vals, grid, p)


# ---------------------------------------------------------------------------
# quasi-probabilities
# ---------------------------------------------------------------------------

def _fourier_chi_to_w(chi: np.ndarray, d_lam: float) -> np.ndarray:
    """(1/pi^2) integral chi(lam) e^{alpha lam* - alpha* lam} as a DFT.

    chi is indexed [k, l] over (Re lam, Im lam); the result is indexed
    [m, j] over (Re alpha, Im alpha).  Requires the reciprocity
    2 * d_alpha * d_lam = 2 pi / N, which PhaseGrid.reciprocal guarantees.
    """
    n = chi.shape[0]
    sgn = np.where(np.arange(n) % 2, -1.0, 1.0)
    t = chi * sgn[:, None]
    t = np.fft.ifft(t, axis=0) * n
    t *= sgn[:, None]
    t *= sgn[None, :]
    t = np.fft.fft(t, axis=1)
    t *= sgn[None, :]
    return (d_lam ** 2 / math.pi ** 2) * t.T


def quasi_prob_fft(state: State, grid: PhaseGrid, p: float = 0.0) -> QuasiProbGrid:
    """W(alpha, p) as the discrete Fourier transform of chi(lambda, p).

    The lambda grid is the reciprocal of ``grid``; the Riemann sum of the
    result times spacing^2 equals chi(0, p) = 1 - tail by construction.
    Raises :class:`SingularPError` when the ordering factor makes chi grow
    beyond OVERFLOW_GUARD on the grid (nonclassical states at p -> 1).
    """
    if not -1.0 <= p <= 1.0:
        raise DomainError("ordering parameter must lie in [-1, 1]")
    lam_grid = grid.reciprocal()
    chi = char_grid(state, lam_grid, p).values
    peak = np.max(np.abs(chi))
    if not np.isfinite(peak) or (p > 0.0 and peak > OVERFLOW_GUARD):
        raise SingularPError(
            f"chi(lambda, p={p}) reaches {peak:.3g} on the grid; the requested "
            "quasi-probability is singular (delta-derivative P-function)")
    w = _fourier_chi_to_w(chi, lam_grid.spacing)
    residue = float(np.max(np.abs(w.imag)))
    if residue > 1e-9:
        raise GridError(f"imaginary residue {residue:.3e} exceeds 1e-9; "
                        "chi samples are inconsistent")
    return QuasiProbGrid(w.real, grid, p)


def wigner_direct(state: State, alpha, p: float = 0.0):
    """W(alpha, p) from displaced number statistics (no Fourier transform).

    W = 2/(pi(1-p)) sum_n [-(1+p)/(1-p)]^n <n|D^dag(alpha) rho D(alpha)|n>,
    the series truncated at the cutoff.  Requires p < 1.
    """
    if p >= 1.0:
        raise DomainError("wigner_direct requires p < 1")
    alpha_arr = np.asarray(alpha, dtype=complex)
    flat = alpha_arr.ravel()
    weights, vectors = _state_vectors(state)
    dim = state.dim
    dq = _q_spacing(dim)
    half = _support_halfwidth(dim) + 2.0 * float(np.max(np.abs(flat.real), initial=0.0))
    qs = np.arange(-half, half + dq, dq)
    base = hermite_functions(dim - 1, qs)          # psi_n on the fixed grid
    t = -(1.0 + p) / (1.0 - p)
    tn = t ** np.arange(dim)
    out = np.empty(flat.size)
    for i, a in enumerate(flat):
        u, v = a.real, a.imag
        # <n|D(-alpha)|vec_i> = e^{-iuv} integral psi_n(x) e^{-ivx} vec_i(x + 2u) dx
        shifted = _eigfun_rows(vectors, qs + 2.0 * u)
        amps = (base * np.exp(-1j * v * qs)) @ shifted.T * dq
        q_n = (np.abs(amps) ** 2) @ weights
        out[i] = tn @ q_n
    out *= 2.0 / (math.pi * (1.0 - p))
    return float(out[0]) if alpha_arr.ndim == 0 else out.reshape(alpha_arr.shape)


def _coherent_rows(alphas: np.ndarray, dim: int) -> np.ndarray:
    """Row p holds the Fock amplitudes of |alpha_p>."""
    al = np.asarray(alphas, dtype=complex).ravel()
    rows = np.empty((al.size, dim), dtype=complex)
    rows[:, 0] = np.exp(-0.5 * np.abs(al) ** 2)
    for n in range(1, dim):
        rows[:, n] = rows[:, n - 1] * al / math.sqrt(n)
    return rows


def q_function(state: State, alpha):
    """Q(alpha) = <alpha|rho|alpha> / pi, nonnegative by construction."""
    alpha_arr = np.asarray(alpha, dtype=complex)
    weights, vectors = _state_vectors(state)
    rows = _coherent_rows(alpha_arr.ravel(), state.dim)
    vals = (np.abs(rows.conj() @ vectors) ** 2) @ weights / math.pi
    return float(vals[0]) if alpha_arr.ndim == 0 else vals.reshape(alpha_arr.shape)


def ordering_convolution(qpg: QuasiProbGrid, target_p: float) -> QuasiProbGrid:
    """Pass to a lower ordering q < p by Gaussian convolution on the grid,
    kernel 2/(pi (p-q)) exp[-2 |alpha - beta|^2 / (p-q)].

    The sampled kernel is renormalized to unit discrete mass, so the Riemann
    mass is conserved exactly and the q -> p delta-kernel limit degrades
    into the identity instead of an unresolved spike.
    """
    p, q = qpg.ordering, float(target_p)
    if q >= p:
        raise DomainError("target ordering must be strictly below the source")
    d = qpg.grid.spacing
    offs = (np.arange(2 * qpg.grid.n - 1) - (qpg.grid.n - 1)) * d
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    kernel = np.exp(-2.0 * (ox ** 2 + oy ** 2) / (p - q))
    kernel /= np.sum(kernel) * d ** 2
    out = fftconvolve(qpg.values, kernel, mode="same") * d ** 2
    return QuasiProbGrid(out, qpg.grid, q)


def glauber_reconstruct(chi: CharGrid, cutoff: int) -> DensityMatrix:
    """rho = (1/pi) integral chi(lambda) D^dag(lambda) d^2 lambda (Riemann).

    The lambda grid must contain the support of chi (boundary magnitude
    below GLAUBER_BOUNDARY_TOL).  The raw Riemann sum is projected back onto
    the physical set
    (Hermitian part, eigenvalues clipped at zero, unit trace) so the result
    satisfies the density-matrix invariants.
    """
    if chi.ordering != 0.0:
        raise DomainError("Glauber reconstruction takes the p = 0 function")
    vals = chi.values
    boundary = max(np.max(np.abs(vals[0, :])), np.max(np.abs(vals[-1, :])),
                   np.max(np.abs(vals[:, 0])), np.max(np.abs(vals[:, -1])))
    if boundary > GLAUBER_BOUNDARY_TOL:
        raise GridError(
            f"chi magnitude {boundary:.3e} at the grid boundary exceeds "
            f"{GLAUBER_BOUNDARY_TOL:.0e}; enlarge the lambda grid")
    d = int(cutoff)
    n = chi.grid.n
    qs, dq, ov = _reciprocal_q_axis(chi.grid, d)
    x = qs.size
    # g_u(q) = sum_v chi(u, v) e^{-i v q} dv, rows zero-padded to the q lattice
    padded = np.zeros((n, x), dtype=complex)
    lo = x // 2 - ov * (n // 2)
    padded[:, lo:lo + ov * n:ov] = vals
    g_rows = _row_transform(padded, forward=False) * chi.grid.spacing
    raw = np.zeros((d, d), dtype=complex)
    # <m|D^dag(lam)|n> = integral psi_m(q - u) psi_n(q + u) e^{-i v q} dq
    for k, u in enumerate(chi.grid.axis):
        minus = hermite_functions(d - 1, qs - u)
        plus = hermite_functions(d - 1, qs + u)
        raw += (minus * g_rows[k]) @ plus.T
    raw *= dq * chi.grid.spacing / math.pi
    raw = 0.5 * (raw + raw.conj().T)
    evals, evecs = np.linalg.eigh(raw)
    evals = np.clip(evals, 0.0, None)
    evals /= np.sum(evals)
    rho = (evecs * evals) @ evecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, d, 0.0)


# ---------------------------------------------------------------------------
# trace rules
# ---------------------------------------------------------------------------

IDENTITY = "identity"


def trace_rule_char(chi_a: CharGrid, chi_b) -> complex:
    """Tr[A B] = (1/pi) integral chi_A(lambda) chi_B(-lambda) d^2 lambda.

    ``chi_b`` may be the string ``"identity"``; the identity's chi is a
    delta at the origin, handled analytically as chi_A(0).
    """
    if isinstance(chi_b, str):
        if chi_b != IDENTITY:
            raise DomainError(f"unknown operator tag {chi_b!r}")
        h = chi_a.grid.n // 2
        return complex(chi_a.values[h, h])
    if chi_a.grid != chi_b.grid:
        raise GridError("characteristic grids differ")
    if chi_a.ordering + chi_b.ordering != 0.0:
        raise DomainError("trace rule needs cancelling orderings (p_A = -p_B)")
    flipped = np.roll(np.flip(chi_b.values), 1, axis=(0, 1))
    total = np.sum(chi_a.values * flipped) * chi_a.grid.spacing ** 2 / math.pi
    return complex(total)


def trace_rule_wigner(w_a: QuasiProbGrid, w_b: QuasiProbGrid) -> float:
    """Tr[A B] = pi integral W_A W_B d^2 alpha (Riemann sum)."""
    if w_a.grid != w_b.grid:
        raise GridError("quasi-probability grids differ")
    if w_a.ordering != 0.0 or w_b.ordering != 0.0:
        raise DomainError("the Wigner trace rule takes p = 0 grids")
    return float(math.pi * np.sum(w_a.values * w_b.values) * w_a.grid.spacing ** 2)


# ---------------------------------------------------------------------------
# marginals and moments
# ---------------------------------------------------------------------------

class MarginalPdf(NamedTuple):
    xs: np.ndarray
    density: np.ndarray


def marginal(qpg: QuasiProbGrid, theta: float) -> MarginalPdf:
    """Quadrature pdf p(x; theta) as a rotated marginal of the Wigner grid.

    The grid is rotated by theta (bilinear interpolation, zero outside) and
    the orthogonal axis integrated out; with alpha = (x + i y)/2 the output
    is a unit-mass pdf in the x_theta eigenvalue.
    """
    if qpg.ordering != 0.0:
        raise DomainError("marginals are defined on the p = 0 distribution")
    ax = qpg.grid.axis
    interp = RegularGridInterpolator((ax, ax), qpg.values, method="linear",
                                     bounds_error=False, fill_value=0.0)
    rot = np.exp(1j * theta)
    pts = rot * (ax[:, None] + 1j * ax[None, :])
    stacked = np.stack([pts.real.ravel(), pts.imag.ravel()], axis=1)
    vals = interp(stacked).reshape(pts.shape)
    density = 0.5 * np.sum(vals, axis=1) * qpg.grid.spacing
    return MarginalPdf(2.0 * ax, density)


def ordered_moment(state: State, n_dag: int, n_ann: int, p: float):
    """<(a^dag)^m a^n>_p for m + n <= 2 (matrix products plus ordering shift)."""
    if n_dag + n_ann > 2 or n_dag < 0 or n_ann < 0:
        raise DomainError("ordered moments implemented for m + n <= 2")
    ops = hilbert.ladder_matrices(state.dim)
    mat = np.linalg.matrix_power(ops.creation, n_dag) @ \
        np.linalg.matrix_power(ops.annihilation, n_ann)
    val = hilbert.expectation(state, mat)
    val = complex(val)
    if n_dag == 1 and n_ann == 1:
        val = val + (1.0 - p) / 2.0
    return val


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def save_quasi_prob(qpg: QuasiProbGrid, csv_path, sidecar_path,
                    state_digest: str = "", extra_meta: dict | None = None) -> None:
    """CSV rows x,y,value plus a JSON sidecar {L, N, ordering, state_digest}."""
    ax = qpg.grid.axis
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,value\n")
        for i, x in enumerate(ax):
            for j, y in enumerate(ax):
                fh.write(f"{float(x)!r},{float(y)!r},{float(qpg.values[i, j])!r}\n")
    meta = {"L": qpg.grid.half_width, "N": qpg.grid.n,
            "ordering": qpg.ordering, "state_digest": state_digest}
    if extra_meta:
        meta.update(extra_meta)
    with open(sidecar_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(meta, sort_keys=True))
        fh.write("\n")
