import numpy as np
import pytest

from zfnmr.spincore import (BasisError, COMPUTATIONAL, COUPLED,
                            COUPLED_TRANSFORM, GAMMA_C, GAMMA_H, IDENTITY_4,
                            IX, IY, IZ, J_DEFAULT_HZ, Operator, PAULI_LABELS,
                            SX, SY, SZ, SpinSystem, evolve,
                            pauli_product_basis, phase_invariant_distance,
                            propagator, pulse_hamiltonian,
                            zero_field_hamiltonian)


def test_spin_half_commutators():
    # [Ix, Iy] = i Iz and cyclic, same for S, cross terms vanish
    assert np.allclose(IX @ IY - IY @ IX, 1j * IZ)
    assert np.allclose(SY @ SZ - SZ @ SY, 1j * SX)
    assert np.allclose(IX @ SY, SY @ IX)


def test_pauli_basis_orthogonality():
    basis = pauli_product_basis()
    assert len(basis) == 16
    g = np.array([[np.trace(a.matrix @ b.matrix).real for b in basis]
                  for a in basis])
    assert np.allclose(g, 4.0 * np.eye(16), atol=1e-12)
    assert len(PAULI_LABELS) == 16


def test_coupled_transform_is_unitary():
    q = COUPLED_TRANSFORM
    assert np.allclose(q.conj().T @ q, IDENTITY_4, atol=1e-14)


def test_zero_field_spectrum():
    sys = SpinSystem()
    h = zero_field_hamiltonian(sys)
    hc = h.in_basis(COUPLED).matrix
    expected = 2 * np.pi * sys.j * np.array([0.25, 0.25, 0.25, -0.75])
    assert np.allclose(hc, np.diag(expected), atol=1e-9)
    # single observable splitting: J itself
    gaps = expected[:3] - expected[3]
    assert np.allclose(gaps / (2 * np.pi), sys.j)


def test_gamma_ratio():
    sys = SpinSystem()
    assert sys.ratio == pytest.approx(3.9760, abs=1e-4)
    assert SpinSystem.idealized().ratio == pytest.approx(4.0, abs=0)
    assert GAMMA_H == pytest.approx(2 * np.pi * 42.577478e6)
    assert GAMMA_C == pytest.approx(2 * np.pi * 10.708399e6)
    assert J_DEFAULT_HZ == 222.2176


def test_system_validation():
    with pytest.raises(ValueError):
        SpinSystem(j=-1.0)
    with pytest.raises(ValueError):
        SpinSystem(gamma_i=1.0, gamma_s=2.0)
    with pytest.raises(ValueError):
        SpinSystem().gamma("Q")


def test_pulse_hamiltonian_sign():
    # H = -B gamma Iz - ... : positive Bz lowers the uu level
    sys = SpinSystem()
    h = pulse_hamiltonian(sys, np.array([0.0, 0.0, 1e-4]))
    expect = -1e-4 * (sys.gamma_i * IZ + sys.gamma_s * SZ)
    assert np.allclose(h.matrix, expect)
    with pytest.raises(ValueError):
        pulse_hamiltonian(sys, np.array([1.0, 2.0]))


def test_propagator_rotation_angle():
    # field along -z for time tau turns spin S by gamma_s B tau about z
    sys = SpinSystem()
    tau = 50e-6
    b = np.pi / (sys.gamma_s * tau)
    h = pulse_hamiltonian(sys, np.array([0.0, 0.0, -b]))
    u = propagator(h, tau)
    # exp(-i pi Sz) has diagonal phases -i, +i on the S-down states
    expect = np.diag(np.exp(-1j * np.pi * np.array([0.5, -0.5, 0.5, -0.5])))
    # spin I turns too; project out by comparing the S-factor structure
    ui = propagator(Operator.hermitian(-(-b) * sys.gamma_i * IZ), tau)
    assert phase_invariant_distance(u.matrix @ ui.matrix.conj().T, expect) < 1e-12


def test_propagator_validation():
    h = zero_field_hamiltonian(SpinSystem())
    with pytest.raises(ValueError):
        propagator(h, -1.0)
    not_herm = Operator(np.triu(np.ones((4, 4))))
    with pytest.raises(ValueError):
        propagator(not_herm, 1.0)


def test_operator_kind_checks():
    with pytest.raises(ValueError):
        Operator.hermitian(np.triu(np.ones((4, 4))))
    with pytest.raises(ValueError):
        Operator.unitary(2.0 * IDENTITY_4)
    with pytest.raises(ValueError):
        Operator(IDENTITY_4, kind="mystery")
    with pytest.raises(ValueError):
        Operator(np.eye(3))
    op = Operator.hermitian(IZ)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5.0  # frozen


def test_basis_round_trip(random_state):
    rho = random_state(3)
    back = rho.in_basis(COUPLED).in_basis(COMPUTATIONAL)
    assert np.allclose(back.matrix, rho.matrix, atol=1e-14)
    assert rho.in_basis(COMPUTATIONAL) is rho


def test_evolve_checks_basis(random_state):
    rho = random_state(0)
    u = propagator(zero_field_hamiltonian(SpinSystem()), 1e-3)
    with pytest.raises(BasisError):
        evolve(rho.in_basis(COUPLED), u)
    out = evolve(rho, u)
    assert np.trace(out.matrix) == pytest.approx(1.0, abs=1e-12)


def test_phase_invariant_distance_properties():
    rng = np.random.default_rng(11)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(g)
    assert phase_invariant_distance(q, q) == pytest.approx(0.0, abs=1e-12)
    assert phase_invariant_distance(q, np.exp(1j * 0.7) * q) == pytest.approx(0.0, abs=1e-12)
    assert phase_invariant_distance(q, 1j * q) == pytest.approx(0.0, abs=1e-12)
    # maximally distant: traceless-relative unitaries
    u = np.diag([1, 1, -1, -1]).astype(complex)
    assert phase_invariant_distance(np.eye(4), u) == pytest.approx(1.0)
