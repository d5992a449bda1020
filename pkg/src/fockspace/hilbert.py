"""Truncated Fock-space states and elementary operator matrices.

All states live in the basis {|0>, ..., |D-1>} of a single bosonic mode (or
the product basis of two modes, index ordering (n_a, n_b) -> n_a*D + n_b,
row-major).  Conventions, frozen throughout the package:

* quadratures are hbar-free, x_theta = a e^{-i theta} + a^dag e^{i theta},
  so the vacuum has Delta^2(x) = 1 and [x1, x2] = 2i;
* entropies are in nats;
* constructors keep the raw truncated series coefficients and record the
  discarded tail probability, which must not exceed ``TAIL_TOL``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.constants import hbar, k as k_B

from .errors import CutoffError, DimensionMismatchError, DomainError

# Maximum probability a constructor may silently discard beyond the cutoff.
TAIL_TOL = 1e-10

_HERMITICITY_TOL = 1e-12
_EIGENVALUE_FLOOR = -1e-10


def _check_cutoff(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise DomainError(f"cutoff must be an integer >= 2, got {dim!r}")
    return int(dim)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Ket:
    """Pure single-mode state as a truncated amplitude vector."""

    amps: np.ndarray
    cutoff: int
    tail_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        d = _check_cutoff(self.cutoff)
        if amps.shape != (d,):
            raise DimensionMismatchError(
                f"amplitude vector has shape {amps.shape}, expected ({d},)")
        object.__setattr__(self, "amps", _freeze(amps))
        object.__setattr__(self, "cutoff", d)

    @property
    def dim(self) -> int:
        return self.cutoff

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()),
                             self.cutoff, self.tail_deficit)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed single-mode state; Hermitian, positive, trace ~ 1."""

    elems: np.ndarray
    cutoff: int
    tail_deficit: float = 0.0

    def __post_init__(self):
        elems = np.asarray(self.elems, dtype=complex)
        d = _check_cutoff(self.cutoff)
        if elems.shape != (d, d):
            raise DimensionMismatchError(
                f"density matrix has shape {elems.shape}, expected ({d}, {d})")
        if np.max(np.abs(elems - elems.conj().T)) > _HERMITICITY_TOL:
            raise DomainError("density matrix is not Hermitian to 1e-12")
        if np.min(np.linalg.eigvalsh(elems)) < _EIGENVALUE_FLOOR:
            raise DomainError("density matrix has an eigenvalue below -1e-10")
        if abs(np.trace(elems).real - 1.0) > max(TAIL_TOL, abs(self.tail_deficit) + TAIL_TOL):
            raise DomainError("density matrix trace is not within tail tolerance of 1")
        object.__setattr__(self, "elems", _freeze(elems))
        object.__setattr__(self, "cutoff", d)

    @property
    def dim(self) -> int:
        return self.cutoff

    def density_matrix(self) -> "DensityMatrix":
        return self


@dataclass(frozen=True)
class TwoModeKet:
    """Pure two-mode state on the D^2 product basis, index n_a*D + n_b."""

    amps: np.ndarray
    cutoff: int
    tail_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        d = _check_cutoff(self.cutoff)
        if amps.shape != (d * d,):
            raise DimensionMismatchError(
                f"amplitude vector has shape {amps.shape}, expected ({d * d},)")
        object.__setattr__(self, "amps", _freeze(amps))
        object.__setattr__(self, "cutoff", d)

    @property
    def dim(self) -> int:
        return self.cutoff ** 2

    def density_matrix(self) -> "TwoModeDensityMatrix":
        return TwoModeDensityMatrix(np.outer(self.amps, self.amps.conj()),
                                    self.cutoff, self.tail_deficit)


@dataclass(frozen=True)
class TwoModeDensityMatrix:
    """Mixed two-mode state on the D^2 product basis, index n_a*D + n_b."""

    elems: np.ndarray
    cutoff: int
    tail_deficit: float = 0.0

    def __post_init__(self):
        elems = np.asarray(self.elems, dtype=complex)
        d = _check_cutoff(self.cutoff)
        if elems.shape != (d * d, d * d):
            raise DimensionMismatchError(
                f"density matrix has shape {elems.shape}, expected ({d * d}, {d * d})")
        if np.max(np.abs(elems - elems.conj().T)) > _HERMITICITY_TOL:
            raise DomainError("density matrix is not Hermitian to 1e-12")
        if np.min(np.linalg.eigvalsh(elems)) < _EIGENVALUE_FLOOR:
            raise DomainError("density matrix has an eigenvalue below -1e-10")
        if abs(np.trace(elems).real - 1.0) > max(TAIL_TOL, abs(self.tail_deficit) + TAIL_TOL):
            raise DomainError("density matrix trace is not within tail tolerance of 1")
        object.__setattr__(self, "elems", _freeze(elems))
        object.__setattr__(self, "cutoff", d)

    @property
    def dim(self) -> int:
        return self.cutoff ** 2

    def density_matrix(self) -> "TwoModeDensityMatrix":
        return self


State = Union[Ket, DensityMatrix, TwoModeKet, TwoModeDensityMatrix]

_KIND_NAMES = {
    Ket: "ket",
    DensityMatrix: "density_matrix",
    TwoModeKet: "two_mode_ket",
    TwoModeDensityMatrix: "two_mode_density_matrix",
}
_KIND_CLASSES = {v: k for k, v in _KIND_NAMES.items()}


def is_ket(state: State) -> bool:
    return isinstance(state, (Ket, TwoModeKet))


def is_two_mode(state: State) -> bool:
    return isinstance(state, (TwoModeKet, TwoModeDensityMatrix))


# ---------------------------------------------------------------------------
# cutoff suggestions (closed-form tails)
# ---------------------------------------------------------------------------

def suggest_cutoff_coherent(alpha: complex, tail_tol: float = TAIL_TOL) -> int:
    """Smallest D whose Poisson tail beyond D-1 is below ``tail_tol``."""
    from scipy.stats import poisson
    mean = abs(alpha) ** 2
    if mean == 0.0:
        return 2
    d = max(2, int(mean) + 1)
    while poisson.sf(d - 1, mean) > tail_tol:
        d += max(1, d // 8)
    return d


def suggest_cutoff_thermal(n_th: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest D whose geometric tail q^D (q = N/(1+N)) is below ``tail_tol``."""
    if n_th <= 0.0:
        return 2
    q = n_th / (1.0 + n_th)
    return max(2, math.ceil(math.log(tail_tol) / math.log(q)))


def suggest_cutoff_squeezed(r: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest even-friendly D containing the squeezed-vacuum series tail."""
    r = abs(r)
    if r == 0.0:
        return 2
    mu, t = math.cosh(r), math.tanh(r)
    mass, p = 0.0, 1.0 / mu          # p(0)
    n = 0
    while 1.0 - mass > tail_tol:
        mass += p
        n += 1
        p *= t * t * (2 * n - 1) / (2 * n)   # p(2n)/p(2n-2)
        if n > 100000:
            raise CutoffError("squeezed-vacuum tail did not converge")
    return max(2, 2 * n)


def suggest_cutoff_twin_beam(r: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest per-mode D containing the twin-beam Schmidt tail."""
    lam2 = math.tanh(abs(r)) ** 2
    if lam2 == 0.0:
        return 2
    return max(2, math.ceil(math.log(tail_tol) / math.log(lam2)))


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def make_fock(n: int, cutoff: int) -> Ket:
    """Number state |n>."""
    d = _check_cutoff(cutoff)
    if not 0 <= n < d:
        raise CutoffError(f"Fock index n={n} does not fit cutoff D={d}")
    amps = np.zeros(d, dtype=complex)
    amps[n] = 1.0
    return Ket(amps, d, 0.0)


def make_coherent(alpha: complex, cutoff: int) -> Ket:
    """Coherent state |alpha>, c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)."""
    d = _check_cutoff(cutoff)
    amps = np.empty(d, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, d):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    deficit = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if deficit > TAIL_TOL:
        raise CutoffError(
            f"coherent tail {deficit:.3e} exceeds {TAIL_TOL:.0e} at D={d}; "
            f"need D >= {suggest_cutoff_coherent(alpha)}")
    return Ket(amps, d, deficit)


def make_thermal(n_th: float, cutoff: int) -> DensityMatrix:
    """Thermal state with mean photon number ``n_th`` (diagonal, geometric)."""
    if n_th < 0.0:
        raise DomainError("thermal mean photon number must be >= 0")
    d = _check_cutoff(cutoff)
    if n_th == 0.0:
        probs = np.zeros(d)
        probs[0] = 1.0
        deficit = 0.0
    else:
        q = n_th / (1.0 + n_th)
        probs = q ** np.arange(d) / (1.0 + n_th)
        deficit = q ** d
    if deficit > TAIL_TOL:
        raise CutoffError(
            f"thermal tail {deficit:.3e} exceeds {TAIL_TOL:.0e} at D={d}; "
            f"need D >= {suggest_cutoff_thermal(n_th)}")
    return DensityMatrix(np.diag(probs.astype(complex)), d, float(deficit))


def make_squeezed_vacuum(xi: complex, cutoff: int) -> Ket:
    """Squeezed vacuum for xi = r e^{i psi}; only even levels populated."""
    d = _check_cutoff(cutoff)
    r = abs(xi)
    amps = np.zeros(d, dtype=complex)
    if r == 0.0:
        amps[0] = 1.0
        return Ket(amps, d, 0.0)
    phase = xi / r
    mu = math.cosh(r)
    nu_over_mu = phase * math.tanh(r)
    c = 1.0 / math.sqrt(mu)
    amps[0] = c
    n = 0
    # c_{2(n+1)} / c_{2n} = (nu/mu) * sqrt((2n+1)/(2n+2))
    while 2 * (n + 1) < d:
        c = c * nu_over_mu * math.sqrt((2 * n + 1) / (2 * n + 2))
        n += 1
        amps[2 * n] = c
    deficit = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if deficit > TAIL_TOL:
        raise CutoffError(
            f"squeezed-vacuum tail {deficit:.3e} exceeds {TAIL_TOL:.0e} at D={d}; "
            f"need D >= {suggest_cutoff_squeezed(r)}")
    return Ket(amps, d, deficit)


def make_twin_beam(xi: complex, cutoff: int) -> TwoModeKet:
    """Twin-beam state sqrt(1-|lam|^2) sum lam^n |n>|n>, lam = e^{i psi} tanh r."""
    d = _check_cutoff(cutoff)
    r = abs(xi)
    amps = np.zeros(d * d, dtype=complex)
    if r == 0.0:
        amps[0] = 1.0
        return TwoModeKet(amps, d, 0.0)
    lam = (xi / r) * math.tanh(r)
    coeff = math.sqrt(1.0 - abs(lam) ** 2)
    for n in range(d):
        amps[n * d + n] = coeff
        coeff = coeff * lam
    deficit = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if deficit > TAIL_TOL:
        raise CutoffError(
            f"twin-beam tail {deficit:.3e} exceeds {TAIL_TOL:.0e} at per-mode D={d}; "
            f"need D >= {suggest_cutoff_twin_beam(r)}")
    return TwoModeKet(amps, d, deficit)


# ---------------------------------------------------------------------------
# operator matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderOps:
    """Truncated mode operators; ``quadrature(theta)`` builds x_theta."""

    annihilation: np.ndarray
    creation: np.ndarray
    number: np.ndarray

    def quadrature(self, theta: float) -> np.ndarray:
        return (self.annihilation * np.exp(-1j * theta)
                + self.creation * np.exp(1j * theta))


def ladder_matrices(cutoff: int) -> LadderOps:
    """Annihilation/creation/number matrices on the D-dimensional basis."""
    d = _check_cutoff(cutoff)
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return LadderOps(_freeze(a), _freeze(a.conj().T.copy()),
                     _freeze((a.conj().T @ a)))


def two_mode_ladder_matrices(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Mode operators (a, b) on the product basis with index n_a*D + n_b."""
    d = _check_cutoff(cutoff)
    a1 = ladder_matrices(d).annihilation
    eye = np.eye(d, dtype=complex)
    return _freeze(np.kron(a1, eye)), _freeze(np.kron(eye, a1))


def expectation(state: State, op: np.ndarray):
    """Tr[rho A].  Hermitian operators return a real float, others complex."""
    op = np.asarray(op, dtype=complex)
    n = state.dim
    if op.shape != (n, n):
        raise DimensionMismatchError(
            f"operator shape {op.shape} does not match state dimension {n}")
    if is_ket(state):
        val = complex(np.vdot(state.amps, op @ state.amps))
    else:
        val = complex(np.einsum("ij,ji->", state.elems, op))
    if np.max(np.abs(op - op.conj().T)) <= _HERMITICITY_TOL:
        return float(val.real)
    return val


def variance(state: State, op: np.ndarray) -> float:
    """<A^2> - <A>^2 for a Hermitian operator A."""
    op = np.asarray(op, dtype=complex)
    if np.max(np.abs(op - op.conj().T)) > _HERMITICITY_TOL:
        raise DomainError("variance requires a Hermitian operator")
    mean = expectation(state, op)
    second = expectation(state, op @ op)
    return float(second - mean ** 2)


# ---------------------------------------------------------------------------
# composition and reduction
# ---------------------------------------------------------------------------

def tensor(a: State, b: State):
    """Kronecker composition of two single-mode states (a first, frozen order)."""
    if is_two_mode(a) or is_two_mode(b):
        raise DimensionMismatchError("tensor expects two single-mode states")
    if a.cutoff != b.cutoff:
        raise DimensionMismatchError(
            f"cutoffs differ: {a.cutoff} vs {b.cutoff} (mixed cutoffs unsupported)")
    deficit = a.tail_deficit + b.tail_deficit
    if isinstance(a, Ket) and isinstance(b, Ket):
        return TwoModeKet(np.kron(a.amps, b.amps), a.cutoff, deficit)
    ra, rb = a.density_matrix(), b.density_matrix()
    return TwoModeDensityMatrix(np.kron(ra.elems, rb.elems), a.cutoff, deficit)


def partial_trace(state: State, keep: str = "a") -> DensityMatrix:
    """Reduced density matrix of one mode; ``keep`` selects 'a' or 'b'."""
    if not is_two_mode(state):
        raise DimensionMismatchError("partial_trace expects a two-mode state")
    if keep not in ("a", "b"):
        raise DomainError("keep must be 'a' or 'b'")
    d = state.cutoff
    if isinstance(state, TwoModeKet):
        psi = state.amps.reshape(d, d)
        if keep == "a":
            red = psi @ psi.conj().T
        else:
            red = psi.T @ psi.conj()
    else:
        rho = state.elems.reshape(d, d, d, d)
        if keep == "a":
            red = np.trace(rho, axis1=1, axis2=3)
        else:
            red = np.trace(rho, axis1=0, axis2=2)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red, d, state.tail_deficit)


def purity(state: State) -> float:
    """Tr[rho^2]."""
    if is_ket(state):
        return float(np.sum(np.abs(state.amps) ** 2) ** 2)
    return float(np.einsum("ij,ji->", state.elems, state.elems).real)


def fidelity(ket: State, other: State) -> float:
    """Overlap <psi|rho|psi> of a pure reference with another state."""
    if not is_ket(ket):
        raise DomainError("fidelity reference must be a ket")
    if other.dim != ket.dim:
        raise DimensionMismatchError("states live in different spaces")
    if is_ket(other):
        return float(abs(np.vdot(ket.amps, other.amps)) ** 2)
    return float(np.real(np.vdot(ket.amps, other.elems @ ket.amps)))


# ---------------------------------------------------------------------------
# entropy and occupation
# ---------------------------------------------------------------------------

def von_neumann_entropy(rho) -> float:
    """S = -sum lam ln lam in nats; eigenvalues in [-1e-10, 0) clamp to 0."""
    if is_ket(rho):
        return 0.0
    lam = np.linalg.eigvalsh(rho.elems)
    if np.min(lam) < _EIGENVALUE_FLOOR:
        raise DomainError("entropy input has an eigenvalue below -1e-10")
    lam = np.clip(lam, 0.0, None)
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * np.log(lam)))


def excess_entropy(state) -> float:
    """S(rho_A) + S(rho_B) - S(rho_AB) for a (near-)pure two-mode state."""
    if not is_two_mode(state):
        raise DimensionMismatchError("excess_entropy expects a two-mode state")
    if purity(state) < 1.0 - 1e-6:
        raise DomainError("excess_entropy requires global purity >= 1 - 1e-6")
    s_ab = 0.0 if is_ket(state) else von_neumann_entropy(state)
    return (von_neumann_entropy(partial_trace(state, "a"))
            + von_neumann_entropy(partial_trace(state, "b")) - s_ab)


def planck_occupation(omega: float, temperature: float) -> float:
    """Mean thermal photons 1/(exp[hbar w/(k_B T)] - 1) at frequency w (rad/s)."""
    if omega <= 0.0 or temperature <= 0.0:
        raise DomainError("planck_occupation requires omega > 0 and T > 0")
    x = hbar * omega / (k_B * temperature)
    if x > 700.0:            # frozen out; expm1 would overflow
        return math.exp(-x)
    return 1.0 / math.expm1(x)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _interleave(values: np.ndarray) -> list:
    flat = np.ascontiguousarray(values).ravel()
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def state_to_json(state: State) -> str:
    """Canonical JSON form; decimal shortest-repr floats, exact round trip."""
    kind = _KIND_NAMES[type(state)]
    data = state.amps if is_ket(state) else state.elems
    doc = {
        "kind": kind,
        "cutoff": state.cutoff,
        "data": _interleave(data),
        "metadata": {"tail_deficit": state.tail_deficit},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def state_from_json(text: str) -> State:
    try:
        doc = json.loads(text)
        kind = doc["kind"]
        cls = _KIND_CLASSES[kind]
        d = int(doc["cutoff"])
        raw = np.asarray(doc["data"], dtype=float)
        vals = raw[0::2] + 1j * raw[1::2]
        deficit = float(doc["metadata"]["tail_deficit"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"malformed state document: {exc}") from exc
    if kind in ("ket", "two_mode_ket"):
        return cls(vals, d, deficit)
    n = d if kind == "density_matrix" else d * d
    return cls(vals.reshape(n, n), d, deficit)


def save_state(state: State, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(state_to_json(state))
        fh.write("\n")


def load_state(path) -> State:
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_json(fh.read())


def state_digest(state: State) -> str:
    """sha256 of the canonical JSON form, for provenance headers."""
    return hashlib.sha256(state_to_json(state).encode("utf-8")).hexdigest()
