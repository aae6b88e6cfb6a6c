"""Closest-unitary reconstruction from tomography pairs, and gate fidelity.

The implemented two-spin gate is recovered by minimizing

    f(U) = sum_i k_i || U rho_i U^dag - rho_i' ||_F^2

over unitary U, where rho_i and rho_i' are the measured deviation density
matrices before and after the gate, rescaled to unit deviation norm so
the thermal polarization scale does not condition the problem. U is
parametrized exactly as exp(-iH) over Hermitian H (16 real parameters),
searched by quasi-Newton descent from random restarts and polished by a
Gauss-Newton step on the unitary manifold, which converges to machine
precision near a minimum.

Two consistent pairs leave a residual gauge: right multiplication by a
diagonal phase matrix commuting with both inputs (the middle two phases
tied, since the zero-quantum block couples those levels). The four sign
conventions on matrix entries (1,1), (2,2), (3,4), (4,3) pin that gauge
for CNOT-like unitaries and are enforced after optimization, not during.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .pulses import cnot_unitary
from .spincore import Operator, phase_invariant_distance
from .tomography import PauliVector, operator_to_pauli

RESTARTS_DEFAULT = 20
# relative perturbation of the pair coefficients that lands the
# reported transpose-convention fidelity near 0.99 (regression fixture)
NOISE_SIGMA_CALIBRATED = 0.04


@dataclass(frozen=True)
class TomographyPair:
    """Measured state before and after the gate, with a fit weight."""

    input: PauliVector
    output: PauliVector
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValueError("pair weight must be positive")

    def _deviation_matrix(self, pv: PauliVector) -> np.ndarray:
        norm = np.linalg.norm(pv.deviation)
        if norm == 0:
            raise ValueError("pair contains a zero deviation vector")
        scaled = PauliVector(np.concatenate(([0.0], pv.deviation / norm)))
        return scaled.to_operator().matrix

    def input_matrix(self) -> np.ndarray:
        return self._deviation_matrix(self.input)

    def output_matrix(self) -> np.ndarray:
        return self._deviation_matrix(self.output)


def pair_from_states(rho_in: Operator, rho_out: Operator,
                     weight: float = 1.0) -> TomographyPair:
    """Pair built by exact Pauli synthesis, for round trips and simulation."""
    return TomographyPair(operator_to_pauli(rho_in), operator_to_pauli(rho_out),
                          weight)


def _hermitian_basis() -> list[np.ndarray]:
    basis = []
    for i in range(4):
        m = np.zeros((4, 4), dtype=complex)
        m[i, i] = 1.0
        basis.append(m)
    for i in range(4):
        for j in range(i + 1, 4):
            m = np.zeros((4, 4), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            basis.append(m)
            m = np.zeros((4, 4), dtype=complex)
            m[i, j] = -1.0j
            m[j, i] = 1.0j
            basis.append(m)
    return basis


_BASIS = _hermitian_basis()


def params_to_unitary(theta: np.ndarray) -> np.ndarray:
    h = sum(t * b for t, b in zip(theta, _BASIS))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _expm_herm(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


@dataclass(frozen=True)
class ReconstructionResult:
    unitary: Operator
    objective: float
    converged: bool
    restarts: int


def _objective(u: np.ndarray, pairs: list[TomographyPair],
               ins: list[np.ndarray], outs: list[np.ndarray],
               entrywise_l1: bool) -> float:
    total = 0.0
    for pair, a, b in zip(pairs, ins, outs):
        d = u @ a @ u.conj().T - b
        if entrywise_l1:
            total += pair.weight * float(np.sum(np.abs(d)))
        else:
            total += pair.weight * float(np.sum(np.abs(d) ** 2))
    return total


def _polish(u: np.ndarray, pairs, ins, outs, iterations: int = 80) -> tuple[np.ndarray, bool]:
    """Damped Gauss-Newton on U -> exp(-iX) U for Hermitian X.

    The first-order change of U a U^dag is -i[X, a'] with a' the current
    image, linear in X, so each step is a real least-squares solve in the
    16 basis coefficients. A halving line search keeps the step a descent
    step; on noisy pairs the residual at the minimum is large and the
    undamped iteration would bounce.
    """
    obj = _objective(u, pairs, ins, outs, False)
    for _ in range(iterations):
        rows = []
        rhs = []
        for pair, a, b in zip(pairs, ins, outs):
            sw = np.sqrt(pair.weight)
            ap = u @ a @ u.conj().T
            res = (ap - b) * sw
            cols = []
            for h in _BASIS:
                comm = -1j * (h @ ap - ap @ h) * sw
                cols.append(np.concatenate([comm.real.ravel(), comm.imag.ravel()]))
            rows.append(np.column_stack(cols))
            rhs.append(np.concatenate([res.real.ravel(), res.imag.ravel()]))
        jac = np.vstack(rows)
        r = np.concatenate(rhs)
        coeff, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        x = sum(c * h for c, h in zip(coeff, _BASIS))
        scale = 1.0
        accepted = False
        for _ in range(25):
            u_try = _expm_herm(scale * x) @ u
            obj_try = _objective(u_try, pairs, ins, outs, False)
            if obj_try <= obj:
                accepted = True
                break
            scale /= 2.0
        if not accepted:
            # no descent along the Gauss-Newton direction: stationary
            return u, True
        step = scale * float(np.linalg.norm(coeff))
        improved = obj - obj_try
        u, obj = u_try, obj_try
        if step < 1e-13 or improved <= 1e-15 * max(obj, 1e-300):
            return u, True
    return u, False


def gauge_fix(u: np.ndarray) -> np.ndarray:
    """Right-multiply by the residual diagonal phases to meet the sign pins.

    Phases on columns 1 and 2 are tied (the gauge the two-pair data leaves
    free), so entries (1,1), (2,2), (3,4) are made real non-negative and
    (4,3) comes out non-negative automatically for CNOT-like unitaries.
    """
    phi0 = -np.angle(u[0, 0]) if abs(u[0, 0]) > 1e-12 else 0.0
    phi1 = -np.angle(u[1, 1]) if abs(u[1, 1]) > 1e-12 else 0.0
    phi3 = -np.angle(u[2, 3]) if abs(u[2, 3]) > 1e-12 else 0.0
    d = np.diag(np.exp(1j * np.array([phi0, phi1, phi1, phi3])))
    return u @ d


def reconstruct_unitary(pairs, restarts: int = RESTARTS_DEFAULT, seed: int = 0,
                        entrywise_l1: bool = False) -> ReconstructionResult:
    """Best unitary explaining the tomography pairs.

    Args:
        pairs: at least two TomographyPair objects.
        restarts: independent random starts of the quasi-Newton search.
        entrywise_l1: replace the squared Frobenius norm by the entrywise
            absolute sum (sensitivity flag; skips the quadratic polish).
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least two tomography pairs")
    ins = [p.input_matrix() for p in pairs]
    outs = [p.output_matrix() for p in pairs]
    stack = np.array([p.input.deviation / np.linalg.norm(p.input.deviation)
                      for p in pairs])
    if np.linalg.matrix_rank(stack, tol=1e-8) < 2:
        warnings.warn("tomography pair set is rank-deficient; the recovered "
                      "unitary is not unique", stacklevel=2)

    starts = np.random.SeedSequence(seed).generate_state(max(restarts, 1))
    best_u = None
    best_val = np.inf
    any_success = False
    # the absolute-value objective has gradient kinks, so the sensitivity
    # flag switches to a derivative-free search
    if entrywise_l1:
        method, options = "Powell", {"maxiter": 20000, "xtol": 1e-12,
                                     "ftol": 1e-14}
    else:
        method, options = "L-BFGS-B", {"maxiter": 400, "ftol": 1e-16,
                                       "gtol": 1e-12}
    for r in range(max(restarts, 1)):
        rng = np.random.default_rng(starts[r])
        theta0 = np.zeros(16) if r == 0 else rng.normal(0.0, np.pi / 3, 16)
        res = minimize(
            lambda th: _objective(params_to_unitary(th), pairs, ins, outs,
                                  entrywise_l1),
            theta0, method=method, options=options,
        )
        u = params_to_unitary(res.x)
        val = _objective(u, pairs, ins, outs, entrywise_l1)
        if val < best_val:
            best_val = val
            best_u = u
            any_success = bool(res.success) or res.status == 0
    converged = any_success
    if not entrywise_l1:
        best_u, polished = _polish(best_u, pairs, ins, outs)
        converged = converged and polished
    best_u = gauge_fix(best_u)
    # the tied-phase fix is only an exact gauge for consistent pairs, so
    # the reported value is recomputed at the unitary actually returned
    best_val = _objective(best_u, pairs, ins, outs, entrywise_l1)
    return ReconstructionResult(Operator.unitary(best_u), float(best_val),
                                converged, max(restarts, 1))


@dataclass(frozen=True)
class GateFidelity:
    """Both fidelity conventions, reported together to avoid trap readings."""

    paper_convention: float
    phase_invariant: float


def gate_fidelity(u: Operator | np.ndarray, ideal: Operator | np.ndarray) -> GateFidelity:
    """1/4 Tr[ideal^T U] (real part, transpose convention) and 1/4 |Tr[ideal^dag U]|.

    The transpose form is what gets printed for the CNOT; it is basis and
    phase sensitive and equals 1 only when U matches a real ideal exactly.
    The phase-invariant form is the standard comparison.
    """
    mu = u.matrix if isinstance(u, Operator) else np.asarray(u)
    mi = ideal.matrix if isinstance(ideal, Operator) else np.asarray(ideal)
    paper = float(np.trace(mi.T @ mu).real / 4.0)
    invariant = float(abs(np.trace(mi.conj().T @ mu)) / 4.0)
    return GateFidelity(paper, invariant)


def reconstruction_report(result: ReconstructionResult,
                          ideal: Operator | None = None) -> dict:
    ideal_op = ideal if ideal is not None else cnot_unitary()
    fid = gate_fidelity(result.unitary, ideal_op)
    u = result.unitary.matrix
    return {
        "U_real": [[float(x) for x in row] for row in u.real],
        "U_imag": [[float(x) for x in row] for row in u.imag],
        "objective": result.objective,
        "fidelity_paper_convention": fid.paper_convention,
        "fidelity_phase_invariant": fid.phase_invariant,
        "restarts": result.restarts,
        "converged": result.converged,
    }


def reconstruction_report_json(result: ReconstructionResult,
                               ideal: Operator | None = None) -> str:
    return json.dumps(reconstruction_report(result, ideal), indent=2)


def distance_to_ideal(result: ReconstructionResult,
                      ideal: Operator | None = None) -> float:
    ideal_op = ideal if ideal is not None else cnot_unitary()
    return phase_invariant_distance(result.unitary, ideal_op)
