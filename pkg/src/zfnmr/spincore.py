"""Operator algebra for a heteronuclear two-spin-1/2 system at zero magnetic field.

The Hilbert space is the four-dimensional product of a high-gamma spin I (1H)
and a low-gamma spin S (13C). Two bases are used throughout:

* ``computational``: product states ordered (uu, ud, du, dd), spin I first.
* ``coupled``: total-angular-momentum states ordered (T+1, T0, T-1, S0) with
  the phase convention T0 = (ud + du)/sqrt(2) and S0 = (ud - du)/sqrt(2).

Spin operators follow the spin-1/2 convention I_eta = sigma_eta / 2 with
hbar = 1, so propagators are plain exp(-i H t) and a rotation by angle theta
about axis n is exp(-i theta n.I). All Hamiltonians carry units of rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COMPUTATIONAL = "computational"
COUPLED = "coupled"

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

# Default gyromagnetic ratios of the 1H / 13C pair in rad s^-1 T^-1
# (42.577478 MHz/T and 10.708399 MHz/T).
GAMMA_H = 2 * np.pi * 42.577478e6
GAMMA_C = 2 * np.pi * 10.708399e6

J_DEFAULT_HZ = 222.2176

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)

# Single-spin operators embedded in the two-spin space, spin I first.
IX = 0.5 * np.kron(SIGMA_X, IDENTITY_2)
IY = 0.5 * np.kron(SIGMA_Y, IDENTITY_2)
IZ = 0.5 * np.kron(SIGMA_Z, IDENTITY_2)
SX = 0.5 * np.kron(IDENTITY_2, SIGMA_X)
SY = 0.5 * np.kron(IDENTITY_2, SIGMA_Y)
SZ = 0.5 * np.kron(IDENTITY_2, SIGMA_Z)

I_VEC = (IX, IY, IZ)
S_VEC = (SX, SY, SZ)

# Total angular momentum F = I + S.
FX, FY, FZ = IX + SX, IY + SY, IZ + SZ

# Columns are the coupled kets (T+1, T0, T-1, S0) written in the
# computational basis; A_coupled = Q^dag A Q.
_RT2 = 1.0 / np.sqrt(2.0)
COUPLED_TRANSFORM = np.array(
    [
        [1, 0, 0, 0],
        [0, _RT2, 0, _RT2],
        [0, _RT2, 0, -_RT2],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

KET_T_PLUS1 = COUPLED_TRANSFORM[:, 0].copy()
KET_T_ZERO = COUPLED_TRANSFORM[:, 1].copy()
KET_T_MINUS1 = COUPLED_TRANSFORM[:, 2].copy()
KET_S_ZERO = COUPLED_TRANSFORM[:, 3].copy()

PAULI_LABELS = (
    "1",
    "Ix", "Iy", "Iz",
    "Sx", "Sy", "Sz",
    "IxSx", "IxSy", "IxSz",
    "IySx", "IySy", "IySz",
    "IzSx", "IzSy", "IzSz",
)


class BasisError(ValueError):
    """Raised when operators from different bases are mixed."""


@dataclass(frozen=True)
class Operator:
    """A 4x4 complex matrix with explicit basis metadata.

    The ``kind`` tag records a validated structural property: ``hermitian``
    matrices satisfy max|A - A^dag| <= 1e-12 and ``unitary`` matrices satisfy
    max|U^dag U - 1| <= 1e-10 at construction. The tag is metadata set by
    the factory used, never inferred afterwards.
    """

    matrix: np.ndarray
    basis: str = COMPUTATIONAL
    kind: str | None = field(default=None)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if self.basis not in (COMPUTATIONAL, COUPLED):
            raise ValueError(f"unknown basis tag {self.basis!r}")
        if self.kind == "hermitian":
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                raise ValueError("matrix fails the hermitian check")
        elif self.kind == "unitary":
            if np.max(np.abs(m.conj().T @ m - IDENTITY_4)) > UNITARY_TOL:
                raise ValueError("matrix fails the unitary check")
        elif self.kind is not None:
            raise ValueError(f"unknown kind tag {self.kind!r}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def hermitian(cls, matrix: np.ndarray, basis: str = COMPUTATIONAL) -> "Operator":
        return cls(matrix, basis, "hermitian")

    @classmethod
    def unitary(cls, matrix: np.ndarray, basis: str = COMPUTATIONAL) -> "Operator":
        return cls(matrix, basis, "unitary")

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.basis, self.kind)

    def in_basis(self, basis: str) -> "Operator":
        """Return the same operator expressed in ``basis``."""
        if basis == self.basis:
            return self
        if basis == COUPLED:
            m = COUPLED_TRANSFORM.conj().T @ self.matrix @ COUPLED_TRANSFORM
        elif basis == COMPUTATIONAL:
            m = COUPLED_TRANSFORM @ self.matrix @ COUPLED_TRANSFORM.conj().T
        else:
            raise ValueError(f"unknown basis tag {basis!r}")
        return Operator(m, basis, self.kind)


@dataclass(frozen=True)
class SpinSystem:
    """Physical constants of the two-spin pair.

    Args:
        gamma_i: gyromagnetic ratio of spin I in rad/s/T.
        gamma_s: gyromagnetic ratio of spin S in rad/s/T.
        j: scalar coupling in Hz.
    """

    gamma_i: float = GAMMA_H
    gamma_s: float = GAMMA_C
    j: float = J_DEFAULT_HZ

    def __post_init__(self) -> None:
        if not self.j > 0:
            raise ValueError("J must be positive")
        if not self.gamma_i > self.gamma_s > 0:
            raise ValueError("gyromagnetic ratios must satisfy gamma_i > gamma_s > 0")

    @classmethod
    def idealized(cls, gamma_i: float = GAMMA_H, j: float = J_DEFAULT_HZ) -> "SpinSystem":
        """System with the ratio forced to exactly 4 (gamma_s = gamma_i / 4).

        Composite-pulse compilation is exact in this mode; the physical ratio
        of about 3.9760 is the default for error studies.
        """
        return cls(gamma_i=gamma_i, gamma_s=gamma_i / 4.0, j=j)

    @property
    def ratio(self) -> float:
        return self.gamma_i / self.gamma_s

    def gamma(self, target: str) -> float:
        if target == "I":
            return self.gamma_i
        if target == "S":
            return self.gamma_s
        raise ValueError(f"unknown target spin {target!r}")


def pauli_product_basis() -> list[Operator]:
    """The 16 unit Pauli products, spin-I factor first.

    Ordering matches ``PAULI_LABELS``: identity, the three sigma x 1 terms,
    the three 1 x sigma terms, then the nine two-spin products in row-major
    (I-axis outer, S-axis inner) order. Tr[P_i P_j] = 4 delta_ij.
    """
    singles = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    ops = [IDENTITY_4]
    ops += [np.kron(s, IDENTITY_2) for s in singles]
    ops += [np.kron(IDENTITY_2, s) for s in singles]
    ops += [np.kron(a, b) for a in singles for b in singles]
    return [Operator.hermitian(m) for m in ops]


def zero_field_hamiltonian(sys: SpinSystem) -> Operator:
    """H_J = 2 pi J (IxSx + IySy + IzSz) in rad/s.

    Eigenstructure: the three triplet states sit at +2piJ/4 and the singlet
    at -3*2piJ/4, so the single observable transition is at frequency J.
    """
    h = 2 * np.pi * sys.j * (IX @ SX + IY @ SY + IZ @ SZ)
    return Operator.hermitian(h)


def pulse_hamiltonian(sys: SpinSystem, field: np.ndarray) -> Operator:
    """Hamiltonian of a DC field pulse, H = -sum_eta B_eta (gI I_eta + gS S_eta).

    Args:
        field: Cartesian field vector (Bx, By, Bz) in tesla.
    """
    b = np.asarray(field, dtype=float)
    if b.shape != (3,) or not np.all(np.isfinite(b)):
        raise ValueError("field must be a finite 3-vector in tesla")
    h = np.zeros((4, 4), dtype=complex)
    for b_eta, i_eta, s_eta in zip(b, I_VEC, S_VEC):
        h -= b_eta * (sys.gamma_i * i_eta + sys.gamma_s * s_eta)
    return Operator.hermitian(h)


def propagator(h: Operator, t: float) -> Operator:
    """exp(-i H t) through eigendecomposition of the Hermitian 4x4.

    Exact to machine precision at this dimension; no series truncation or
    step-size policy is involved.
    """
    if h.kind != "hermitian":
        if np.max(np.abs(h.matrix - h.matrix.conj().T)) > HERMITIAN_TOL:
            raise ValueError("propagator requires a Hermitian generator")
    if t < 0:
        raise ValueError("duration must be non-negative")
    w, v = np.linalg.eigh(h.matrix)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return Operator.unitary(u, h.basis)


def evolve(rho: Operator, u: Operator) -> Operator:
    """U rho U^dag. Trace and Hermiticity are preserved by construction."""
    if rho.basis != u.basis:
        raise BasisError(f"state in {rho.basis!r} but propagator in {u.basis!r}")
    m = u.matrix @ rho.matrix @ u.matrix.conj().T
    return Operator(m, rho.basis, rho.kind)


def phase_invariant_distance(u: np.ndarray | Operator, v: np.ndarray | Operator) -> float:
    """d(U, V) = 1 - |Tr(U^dag V)| / 4, insensitive to global phase."""
    mu = u.matrix if isinstance(u, Operator) else np.asarray(u)
    mv = v.matrix if isinstance(v, Operator) else np.asarray(v)
    # |tr| can round a hair above the dimension for an exact match
    return float(max(0.0, 1.0 - abs(np.trace(mu.conj().T @ mv)) / mu.shape[0]))
