"""Truncated unitaries: construction fidelity, Heisenberg relations, oracles."""

import math

import numpy as np
import pytest

from fockspace import hilbert as H
from fockspace import transforms as T
from fockspace.errors import CutoffError, DomainError, TruncationError

HEISENBERG_TOL = 1e-6
UNITARITY_TOL = 1e-8
ORACLE_TOL = 1e-8


def test_displacement_reproduces_coherent():
    u = T.displacement(1.0, 40)
    out = T.apply(u, H.make_fock(0, 40))
    ref = H.make_coherent(1.0, 40)
    assert np.max(np.abs(out.amps - ref.amps)) < 1e-8


def test_displacement_zero_is_identity():
    u = T.displacement(0.0, 12)
    assert np.max(np.abs(u.elems - np.eye(12))) < 1e-12


def test_displacement_heisenberg_relation():
    alpha, d = 0.7, 40
    u = T.displacement(alpha, d)
    ops = H.ladder_matrices(d)
    defect = T.conjugate(u, ops.annihilation) - (ops.annihilation
                                                 + alpha * np.eye(d))
    assert u.guard >= d // 2
    assert T.guarded_max_norm(defect, d // 2) < HEISENBERG_TOL
    assert T.guarded_max_norm(defect, u.guard) < HEISENBERG_TOL


def test_displacement_rejects_oversized_amplitude():
    with pytest.raises(CutoffError):
        T.displacement(5.0, 12)


@pytest.mark.parametrize("make,param,dim", [
    (T.displacement, 1.0, 40),
    (T.displacement, 0.3, 30),
    (T.squeezer, 0.5, 60),
    (T.squeezer, 1.0, 80),
])
def test_unitarity_defect_on_guarded_block(make, param, dim):
    u = make(param, dim)
    assert T.unitarity_defect(u) < UNITARITY_TOL


def test_squeezer_zero_is_identity():
    u = T.squeezer(0.0, 12)
    assert np.max(np.abs(u.elems - np.eye(12))) < 1e-12


def test_squeezer_reproduces_series():
    u = T.squeezer(0.5, 60)
    out = T.apply(u, H.make_fock(0, 60))
    ref = H.make_squeezed_vacuum(0.5, 60)
    assert np.max(np.abs(out.amps - ref.amps)) < 1e-8


def test_squeezer_heisenberg_relation():
    xi, d = 0.5, 60
    u = T.squeezer(xi, d)
    ops = H.ladder_matrices(d)
    mu, nu = math.cosh(xi), math.sinh(xi)
    defect = T.conjugate(u, ops.annihilation) - (mu * ops.annihilation
                                                 + nu * ops.creation)
    assert T.guarded_max_norm(defect, u.guard) < HEISENBERG_TOL


def test_squeezer_su11_oracle_agreement():
    for xi in (0.5, 0.8 * np.exp(0.4j)):
        u = T.squeezer(xi, 60)
        oracle = T.squeezer_su11_form(xi, 60)
        g = u.guard
        assert np.max(np.abs((oracle - u.elems)[:g, :g])) < ORACLE_TOL


def test_two_mode_squeezer_identity_and_series():
    u0 = T.two_mode_squeezer(0.0, 8)
    assert np.max(np.abs(u0.elems - np.eye(64))) < 1e-12
    u = T.two_mode_squeezer(0.4, 30)
    out = T.apply(u, H.tensor(H.make_fock(0, 30), H.make_fock(0, 30)))
    ref = H.make_twin_beam(0.4, 30)
    assert np.max(np.abs(out.amps - ref.amps)) < 1e-8


def test_two_mode_squeezer_heisenberg():
    xi, d = 0.4, 30
    u = T.two_mode_squeezer(xi, d)
    a, b = H.two_mode_ladder_matrices(d)
    mu, nu = math.cosh(xi), math.sinh(xi)
    defect_a = T.conjugate(u, a) - (mu * a + nu * b.conj().T)
    defect_b = T.conjugate(u, b) - (mu * b + nu * a.conj().T)
    assert np.max(np.abs(T.guarded_block(u, defect_a))) < HEISENBERG_TOL
    assert np.max(np.abs(T.guarded_block(u, defect_b))) < HEISENBERG_TOL


def test_two_mode_squeezer_su11_oracle():
    u = T.two_mode_squeezer(0.4, 20)
    oracle = T.two_mode_squeezer_su11_form(0.4, 20)
    assert np.max(np.abs(T.guarded_block(u, oracle - u.elems))) < ORACLE_TOL


def test_beam_splitter_hong_ou_mandel():
    d = 6
    bs = T.beam_splitter(np.pi / 4, d)
    out = T.apply(bs, H.tensor(H.make_fock(1, d), H.make_fock(1, d)))
    amps = out.amps.reshape(d, d)
    assert abs(amps[1, 1]) ** 2 < 1e-10
    assert abs(abs(amps[2, 0]) ** 2 - 0.5) < 1e-10
    assert abs(abs(amps[0, 2]) ** 2 - 0.5) < 1e-10
    target = np.zeros((d, d), dtype=complex)
    target[2, 0], target[0, 2] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    fidelity = abs(np.vdot(target.ravel(), out.amps)) ** 2
    assert fidelity > 1.0 - 1e-10


def test_beam_splitter_heisenberg():
    d, phi, theta = 12, np.pi / 4, 0.6
    u = T.beam_splitter(phi * np.exp(1j * theta), d)
    a, b = H.two_mode_ladder_matrices(d)
    expected = a * math.cos(phi) + b * np.exp(1j * theta) * math.sin(phi)
    defect = T.conjugate(u, a) - expected
    # exact on entries whose column total photon number fits below the cutoff
    tot = np.repeat(np.arange(d), d) + np.tile(np.arange(d), d)
    mask = tot < d - 1
    assert np.max(np.abs(defect[np.ix_(mask, mask)])) < 1e-12
    assert np.max(np.abs(T.guarded_block(u, defect))) < 1e-12


def test_beam_splitter_conserves_photon_number():
    d = 14
    u = T.beam_splitter(0.9 * np.exp(0.3j), d)
    a, b = H.two_mode_ladder_matrices(d)
    n_tot = a.conj().T @ a + b.conj().T @ b
    st = H.tensor(H.make_coherent(0.8, d), H.make_fock(1, d))
    before = H.expectation(st, n_tot)
    after = H.expectation(T.apply(u, st), n_tot)
    assert abs(after - before) < 1e-10


def test_beam_splitter_splits_coherent_state():
    d, alpha = 18, 1.0
    bs = T.beam_splitter(np.pi / 4, d)
    out = T.apply(bs, H.tensor(H.make_coherent(alpha, d), H.make_fock(0, d)))
    ref = H.tensor(H.make_coherent(alpha / math.sqrt(2), d),
                   H.make_coherent(-alpha / math.sqrt(2), d))
    fidelity = abs(np.vdot(ref.amps, out.amps)) ** 2
    assert fidelity > 1.0 - 1e-8


def test_beam_splitter_su2_oracle():
    zeta = 0.7 * np.exp(0.2j)
    u = T.beam_splitter(zeta, 12)
    oracle = T.beam_splitter_su2_form(zeta, 12)
    assert np.max(np.abs(T.guarded_block(u, oracle - u.elems))) < ORACLE_TOL


def test_phase_shift_identity_and_conjugation():
    d = 20
    assert np.max(np.abs(T.phase_shift(0.0, d).elems - np.eye(d))) < 1e-15
    ops = H.ladder_matrices(d)
    for theta in (0.4, 1.9):
        u = T.phase_shift(theta, d)
        # diagonal conjugation is exact on the full truncated space
        defect = T.conjugate(u, ops.quadrature(0.0)) - ops.quadrature(theta)
        assert np.max(np.abs(defect)) < 1e-13


def test_phase_shift_pi_on_single_photon():
    u = T.phase_shift(np.pi, 4)
    out = u.elems @ H.make_fock(1, 4).amps
    assert abs(out[1] + 1.0) < 1e-14


def test_apply_identity_preserves_density_matrix():
    st = H.make_thermal(0.8, 40)
    ident = T.phase_shift(0.0, 40)
    out = T.apply(ident, st)
    assert np.max(np.abs(out.elems - st.elems)) < 1e-12


def test_apply_displacement_gives_poisson():
    u = T.displacement(1.0, 40)
    out = T.apply(u, H.make_fock(0, 40))
    probs = np.abs(out.amps) ** 2
    n = np.arange(40)
    expected = np.exp(-1.0) / np.array([math.factorial(int(k)) for k in n])
    assert np.max(np.abs(probs - expected)) < 1e-10


def test_apply_strict_mode_rejects_truncation_loss():
    # squeezing a high Fock state pushes weight past the cutoff
    u = T.squeezer(1.0, 20)
    st = H.make_fock(15, 20)
    with pytest.raises(TruncationError):
        T.apply(u, st, strict=True)
    out = T.apply(u, st, strict=False)
    assert abs(np.sum(np.abs(out.amps) ** 2) - 1.0) < 1e-12
    assert out.tail_deficit > 1e-6


def test_apply_dimension_mismatch():
    u = T.displacement(0.1, 10)
    with pytest.raises(Exception):
        T.apply(u, H.make_fock(0, 12))


def test_displacement_bch_factorizations_agree():
    # the three operator-ordering factorizations of the same displacement
    alpha, d = 0.7 + 0.3j, 30
    prod = T.displacement(alpha, d)
    g = prod.guard
    for oracle in (T.displacement_normal_form(alpha, d),
                   T.displacement_antinormal_form(alpha, d),
                   T.displacement_symmetric_series(alpha, d, order=40)):
        assert np.max(np.abs((oracle - prod.elems)[:g, :g])) < 1e-8


def test_su2_form_singular_at_right_angle():
    with pytest.raises(DomainError):
        T.beam_splitter_su2_form(np.pi / 2, 8)
