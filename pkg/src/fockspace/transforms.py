"""Truncated unitaries: displacement, squeezers, beam splitter, phase shift.

Production construction is scaling-and-squaring ``expm`` of the generator on
an internally padded space D' = D + pad, cropped back to D, with
pad = max(8, ceil(4 |param| sqrt(D))).  The padding keeps expm-truncation
artifacts out of the crop, so the retained block carries the true
infinite-dimensional matrix elements to roundoff.  Cropping still discards
the column mass living above the cutoff, which no construction can recover;
each unitary therefore measures its per-column losses and records
``guard``, the largest leading block (per mode) whose columns lose at most
1e-8 probability.  Operator identities are only meaningful on that block.
The SU(2)/SU(1,1) factorized forms are provided as independent
cross-validation routes, not the production path.

Two-mode operators act on the product basis with index n_a*D + n_b.  The
beam splitter conserves total photon number, which makes its truncated
generator exactly block-complete below n_a + n_b < D; it is therefore built
without padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import hilbert
from .errors import (CutoffError, DimensionMismatchError, DomainError,
                     TruncationError)
from .hilbert import (DensityMatrix, Ket, State, TwoModeDensityMatrix,
                      TwoModeKet, is_ket, is_two_mode)

# Norm a truncated unitary may eat from a state before strict mode aborts.
STRICT_NORM_DEFECT = 1e-6

# A column of a cropped unitary is trusted while it loses at most this much
# probability above the cutoff.
GUARD_COLUMN_LOSS = 1e-8


def pad_size(param_magnitude: float, cutoff: int) -> int:
    """Padding rows added above the cutoff during construction."""
    return max(8, math.ceil(4.0 * abs(param_magnitude) * math.sqrt(cutoff)))


def _single_mode_guard(u: np.ndarray) -> int:
    loss = np.clip(1.0 - np.sum(np.abs(u) ** 2, axis=0), 0.0, None)
    bad = np.flatnonzero(loss > GUARD_COLUMN_LOSS)
    return int(bad[0]) if bad.size else u.shape[0]


def _two_mode_guard(u: np.ndarray, d: int) -> int:
    loss = np.clip(1.0 - np.sum(np.abs(u) ** 2, axis=0), 0.0, None)
    box = np.maximum.accumulate(np.maximum.accumulate(loss.reshape(d, d), 0), 1)
    ok = np.flatnonzero(np.diagonal(box) <= GUARD_COLUMN_LOSS)
    return int(ok[-1]) + 1 if ok.size else 0


@dataclass(frozen=True)
class UnitaryMatrix:
    """Cropped truncation of a unitary, with construction provenance.

    ``guard`` bounds the per-mode Fock level below which column losses stay
    under GUARD_COLUMN_LOSS; operator identities hold on that block.
    """

    elems: np.ndarray
    nominal_params: dict
    construction_pad: int
    guard: int
    modes: int = 1

    def __post_init__(self):
        elems = np.asarray(self.elems, dtype=complex)
        if elems.ndim != 2 or elems.shape[0] != elems.shape[1]:
            raise DimensionMismatchError("unitary must be a square matrix")
        elems.setflags(write=False)
        object.__setattr__(self, "elems", elems)

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    @property
    def mode_dim(self) -> int:
        return self.dim if self.modes == 1 else int(round(math.sqrt(self.dim)))


def guarded_block(u: UnitaryMatrix, mat: np.ndarray) -> np.ndarray:
    """Restrict a matrix on u's space to the trusted per-mode level box."""
    g = u.guard
    if u.modes == 1:
        return mat[:g, :g]
    d = u.mode_dim
    m = mat.reshape(d, d, d, d)
    return m[:g, :g, :g, :g].reshape(g * g, g * g)


def unitarity_defect(u: UnitaryMatrix) -> float:
    """max |(U^dag U - 1)_ij| over the trusted block (0.0 if none is trusted)."""
    if u.guard == 0:
        return 0.0
    delta = u.elems.conj().T @ u.elems - np.eye(u.dim)
    return float(np.max(np.abs(guarded_block(u, delta))))


def guarded_max_norm(mat: np.ndarray, guard: int) -> float:
    """max-abs over the leading guard x guard block."""
    return float(np.max(np.abs(mat[:guard, :guard])))


def _expm_blocked(gen: np.ndarray, grades: np.ndarray) -> np.ndarray:
    """expm of a generator that is exactly block-diagonal in ``grades``."""
    out = np.zeros_like(gen)
    for g in np.unique(grades):
        idx = np.flatnonzero(grades == g)
        out[np.ix_(idx, idx)] = expm(gen[np.ix_(idx, idx)])
    return out


def _crop_two_mode(mat: np.ndarray, d_pad: int, d: int) -> np.ndarray:
    m = mat.reshape(d_pad, d_pad, d_pad, d_pad)
    return np.ascontiguousarray(m[:d, :d, :d, :d]).reshape(d * d, d * d)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def displacement(alpha: complex, cutoff: int) -> UnitaryMatrix:
    """exp(alpha a^dag - alpha* a), truncated; D(alpha)|0> = |alpha>."""
    d = int(cutoff)
    if abs(alpha) ** 2 >= d:
        raise CutoffError(
            f"|alpha|^2 = {abs(alpha)**2:.3g} is too large for cutoff D={d}")
    pad = pad_size(abs(alpha), d)
    ops = hilbert.ladder_matrices(d + pad)
    gen = alpha * ops.creation - np.conj(alpha) * ops.annihilation
    u = expm(gen)[:d, :d]
    return UnitaryMatrix(u, {"kind": "displacement", "alpha": complex(alpha)},
                         pad, _single_mode_guard(u))


def squeezer(xi: complex, cutoff: int) -> UnitaryMatrix:
    """exp[(xi (a^dag)^2 - xi* a^2)/2], truncated single-mode squeezer."""
    d = int(cutoff)
    r = abs(xi)
    if math.sinh(r) ** 2 >= d:
        raise CutoffError(
            f"sinh^2(r) = {math.sinh(r)**2:.3g} is too large for cutoff D={d}")
    pad = pad_size(r, d)
    ops = hilbert.ladder_matrices(d + pad)
    gen = 0.5 * (xi * (ops.creation @ ops.creation)
                 - np.conj(xi) * (ops.annihilation @ ops.annihilation))
    u = expm(gen)[:d, :d]
    return UnitaryMatrix(u, {"kind": "squeezer", "xi": complex(xi)},
                         pad, _single_mode_guard(u))


def two_mode_squeezer(xi: complex, cutoff: int) -> UnitaryMatrix:
    """exp(xi a^dag b^dag - xi* a b) on the D^2 product space."""
    d = int(cutoff)
    r = abs(xi)
    if math.sinh(r) ** 2 >= d:
        raise CutoffError(
            f"sinh^2(r) = {math.sinh(r)**2:.3g} is too large for cutoff D={d}")
    pad = pad_size(r, d)
    dp = d + pad
    a, b = hilbert.two_mode_ladder_matrices(dp)
    gen = xi * (a.conj().T @ b.conj().T) - np.conj(xi) * (a @ b)
    na = np.repeat(np.arange(dp), dp)
    nb = np.tile(np.arange(dp), dp)
    u = _expm_blocked(gen, na - nb)          # generator conserves n_a - n_b
    u = _crop_two_mode(u, dp, d)
    return UnitaryMatrix(u, {"kind": "two_mode_squeezer", "xi": complex(xi)},
                         pad, _two_mode_guard(u, d), modes=2)


def beam_splitter(zeta: complex, cutoff: int) -> UnitaryMatrix:
    """exp(zeta a^dag b - zeta* a b^dag); conserves total photon number."""
    d = int(cutoff)
    a, b = hilbert.two_mode_ladder_matrices(d)
    gen = zeta * (a.conj().T @ b) - np.conj(zeta) * (a @ b.conj().T)
    na = np.repeat(np.arange(d), d)
    nb = np.tile(np.arange(d), d)
    u = _expm_blocked(gen, na + nb)
    # photon-number conservation makes the truncated generator exact below
    # n_a + n_b < D, so no padding is needed; elements in incomplete blocks
    # (n_a + n_b >= D) are still wrong, hence the (D+1)//2 per-mode guard
    return UnitaryMatrix(u, {"kind": "beam_splitter", "zeta": complex(zeta)},
                         0, (d + 1) // 2, modes=2)


def phase_shift(theta: float, cutoff: int) -> UnitaryMatrix:
    """U_theta = exp(-i theta a^dag a), diagonal and exact under truncation."""
    d = int(cutoff)
    u = np.diag(np.exp(-1j * theta * np.arange(d)))
    return UnitaryMatrix(u, {"kind": "phase_shift", "theta": float(theta)}, 0, d)


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

def apply(u: UnitaryMatrix, state: State, strict: bool = True) -> State:
    """U|psi> or U rho U^dag, renormalized; the norm defect is recorded.

    In strict mode (default) a norm defect above 1e-6 raises
    :class:`TruncationError`; lenient mode keeps the renormalized state.
    """
    mat = u.elems
    if mat.shape[0] != state.dim:
        raise DimensionMismatchError(
            f"unitary dim {mat.shape[0]} does not match state dim {state.dim}")
    if is_ket(state):
        out = mat @ state.amps
        norm_sq = float(np.sum(np.abs(out) ** 2))
        defect = 1.0 - norm_sq / (1.0 - state.tail_deficit)
        if strict and defect > STRICT_NORM_DEFECT:
            raise TruncationError(
                f"application lost norm {defect:.3e} (> {STRICT_NORM_DEFECT:.0e}); "
                "increase the cutoff or use strict=False")
        out = out / math.sqrt(norm_sq)
        cls = TwoModeKet if is_two_mode(state) else Ket
        return cls(out, state.cutoff, max(defect, 0.0))
    out = mat @ state.elems @ mat.conj().T
    tr = float(np.trace(out).real)
    defect = 1.0 - tr / (1.0 - state.tail_deficit)
    if strict and defect > STRICT_NORM_DEFECT:
        raise TruncationError(
            f"application lost trace {defect:.3e} (> {STRICT_NORM_DEFECT:.0e}); "
            "increase the cutoff or use strict=False")
    out = out / tr
    out = 0.5 * (out + out.conj().T)
    cls = TwoModeDensityMatrix if is_two_mode(state) else DensityMatrix
    return cls(out, state.cutoff, max(defect, 0.0))


def conjugate(u: UnitaryMatrix, op: np.ndarray) -> np.ndarray:
    """Heisenberg picture U^dag A U on the retained space."""
    op = np.asarray(op, dtype=complex)
    if op.shape != u.elems.shape:
        raise DimensionMismatchError("operator and unitary dimensions differ")
    return u.elems.conj().T @ op @ u.elems


# ---------------------------------------------------------------------------
# factorized forms (independent oracles, not the production path)
# ---------------------------------------------------------------------------

def displacement_normal_form(alpha: complex, cutoff: int) -> np.ndarray:
    """e^{alpha a^dag} e^{-alpha* a} e^{-|alpha|^2/2} on a padded space, cropped."""
    d = int(cutoff)
    pad = pad_size(abs(alpha), d)
    ops = hilbert.ladder_matrices(d + pad)
    u = expm(alpha * ops.creation) @ expm(-np.conj(alpha) * ops.annihilation)
    return (u * math.exp(-0.5 * abs(alpha) ** 2))[:d, :d]


def displacement_antinormal_form(alpha: complex, cutoff: int) -> np.ndarray:
    """e^{-alpha* a} e^{alpha a^dag} e^{+|alpha|^2/2} on a padded space, cropped."""
    d = int(cutoff)
    pad = pad_size(abs(alpha), d)
    ops = hilbert.ladder_matrices(d + pad)
    u = expm(-np.conj(alpha) * ops.annihilation) @ expm(alpha * ops.creation)
    return (u * math.exp(0.5 * abs(alpha) ** 2))[:d, :d]


def displacement_symmetric_series(alpha: complex, cutoff: int,
                                  order: int = 40) -> np.ndarray:
    """Symmetrically ordered series for the displacement operator.

    Sums alpha^m (-alpha*)^n / (m! n!) [ (a^dag)^m a^n ]_s over m + n <= order,
    with the symmetric ordering expanded into normal-ordered terms via
    [ (a^dag)^m a^n ]_s = sum_l C(m,l) C(n,l) l!/2^l (a^dag)^{m-l} a^{n-l}.
    """
    d = int(cutoff)
    pad = pad_size(abs(alpha), d)
    dp = d + pad
    ops = hilbert.ladder_matrices(dp)
    a_pows = [np.eye(dp, dtype=complex)]
    ad_pows = [np.eye(dp, dtype=complex)]
    for _ in range(order):
        a_pows.append(a_pows[-1] @ ops.annihilation)
        ad_pows.append(ad_pows[-1] @ ops.creation)
    total = np.zeros((dp, dp), dtype=complex)
    for m in range(order + 1):
        cm = alpha ** m / math.factorial(m)
        for n in range(order + 1 - m):
            coeff = cm * (-np.conj(alpha)) ** n / math.factorial(n)
            for l in range(min(m, n) + 1):
                w = (math.comb(m, l) * math.comb(n, l)
                     * math.factorial(l) / 2.0 ** l)
                total += (coeff * w) * (ad_pows[m - l] @ a_pows[n - l])
    return total[:d, :d]


def squeezer_su11_form(xi: complex, cutoff: int) -> np.ndarray:
    """exp[nu/(2mu) ad^2] mu^{-(n+1/2)} exp[-nu*/(2mu) a^2]; exact elements."""
    d = int(cutoff)
    r = abs(xi)
    if r == 0.0:
        return np.eye(d, dtype=complex)
    phase = xi / r
    mu, nu = math.cosh(r), phase * math.sinh(r)
    ops = hilbert.ladder_matrices(d)
    up = expm((nu / (2 * mu)) * (ops.creation @ ops.creation))
    mid = np.diag(mu ** -(np.arange(d) + 0.5)).astype(complex)
    down = expm((-np.conj(nu) / (2 * mu)) * (ops.annihilation @ ops.annihilation))
    return up @ mid @ down


def two_mode_squeezer_su11_form(xi: complex, cutoff: int) -> np.ndarray:
    """exp[(nu/mu) ad bd] mu^{-(n_a+n_b+1)} exp[-(nu*/mu) a b]; exact elements."""
    d = int(cutoff)
    r = abs(xi)
    if r == 0.0:
        return np.eye(d * d, dtype=complex)
    phase = xi / r
    mu, nu = math.cosh(r), phase * math.sinh(r)
    a, b = hilbert.two_mode_ladder_matrices(d)
    up = expm((nu / mu) * (a.conj().T @ b.conj().T))
    tot = np.repeat(np.arange(d), d) + np.tile(np.arange(d), d)
    mid = np.diag(mu ** -(tot + 1.0)).astype(complex)
    down = expm((-np.conj(nu) / mu) * (a @ b))
    return up @ mid @ down


def beam_splitter_su2_form(zeta: complex, cutoff: int) -> np.ndarray:
    """exp[e^{i t} tan(phi) ad b] cos^2(phi)^{-(n_a-n_b)/2} exp[-e^{-i t} tan(phi) a bd]."""
    d = int(cutoff)
    phi = abs(zeta)
    if phi == 0.0:
        return np.eye(d * d, dtype=complex)
    if abs(math.cos(phi)) < 1e-12:
        raise DomainError("SU(2) normal form is singular at phi = pi/2")
    phase = zeta / phi
    t = math.tan(phi)
    a, b = hilbert.two_mode_ladder_matrices(d)
    up = expm(phase * t * (a.conj().T @ b))
    diff = np.repeat(np.arange(d), d) - np.tile(np.arange(d), d)
    mid = np.diag((math.cos(phi) ** 2) ** (-diff / 2.0)).astype(complex)
    down = expm(-np.conj(phase) * t * (a @ b.conj().T))
    return up @ mid @ down
