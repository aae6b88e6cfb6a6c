"""Temporal-averaging readout and Pauli-basis state tomography.

The detector sees one number per shot: the J-line amplitude, which equals
(gamma_I - gamma_S)/2 times the expectation of Iz - Sz. Repeating the shot
under four fixed readout rotations and combining with a frozen sign table
isolates either spin's z expectation. Derivation in brief: a z-pi on S
leaves the functional unchanged (the detected coherence block commutes
with it), while an x-pi on I reverses the Iz part. Summing all four
readouts cancels Iz exactly; the half-difference cancels Sz. The table
below is that cancellation written out, divided by 4, and it holds for
arbitrary input states, not only z-polarized ones.

Tomography maps each of the 15 deviation Paulis onto a z observable with a
short rotation word found once by breadth-first search over quarter-turn
generators plus the Ising echo (local rotations alone cannot reach the
two-spin products), measures through the readout pipeline, and solves the
linear system for all coefficients at once.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cache

import numpy as np

from .errors import ErrorModel, evolve_with_errors, inhomogeneity_draws
from .pulses import (
    PulseSchedule,
    compile_selective_rotation,
    compile_uzz,
    rotation_unitary,
    schedule_propagator,
)
from .spincore import (
    IZ, SZ,
    Operator,
    PAULI_LABELS,
    SpinSystem,
    evolve,
    pauli_product_basis,
)
from .stateprep import jline_amplitude

READOUT_NAMES = ("NoOp", "piSz", "piIx", "piSz-piIx")

# Signed weights applied to the four readout signals, after dividing by
# the J-line gain (gamma_I - gamma_S)/2. Frozen from the cancellation
# requirement; see the module docstring.
TEMPORAL_AVERAGING_SIGNS = {
    "Sz": (-0.25, -0.25, -0.25, -0.25),
    "Iz": (+0.25, +0.25, -0.25, -0.25),
}


@dataclass(frozen=True)
class ReadoutOp:
    """A named fixed readout rotation, in compiled and ideal form."""

    name: str
    schedule: PulseSchedule
    ideal: Operator


def readout_ops(sys: SpinSystem, pi_duration: float = 50e-6) -> tuple[ReadoutOp, ...]:
    s_z = compile_selective_rotation(sys, "S", "z", np.pi, pi_duration)
    i_x = compile_selective_rotation(sys, "I", "x", np.pi, pi_duration)
    u_sz = rotation_unitary("S", "z", np.pi)
    u_ix = rotation_unitary("I", "x", np.pi)
    both = s_z.then(i_x, "piSz-piIx")
    return (
        ReadoutOp("NoOp", PulseSchedule("NoOp", ()), Operator.unitary(np.eye(4))),
        ReadoutOp("piSz", s_z, u_sz),
        ReadoutOp("piIx", i_x, u_ix),
        ReadoutOp("piSz-piIx", both, Operator.unitary(u_ix.matrix @ u_sz.matrix)),
    )


def measure_observable(rho: Operator, observable: Operator) -> float:
    a = rho.in_basis("computational").matrix
    b = observable.in_basis("computational").matrix
    return float(np.trace(a @ b).real)


def _readout_signals(sys: SpinSystem, rho: Operator, gates: str,
                     error_model: ErrorModel | None, pi_duration: float,
                     include_j_during_pulses: bool,
                     member_delta: float | None = None) -> np.ndarray:
    """J-line amplitude under each of the four readouts.

    With an error model, member_delta selects one ensemble member's field
    offset; None averages the signals over the whole ensemble.
    """
    ops = readout_ops(sys, pi_duration)
    if gates == "ideal":
        return np.array([jline_amplitude(sys, evolve(rho, op.ideal)) for op in ops])
    if gates != "compiled":
        raise ValueError(f"unknown gate realization {gates!r}")
    if error_model is None:
        sig = []
        for op in ops:
            u = schedule_propagator(sys, op.schedule, include_j_during_pulses)
            sig.append(jline_amplitude(sys, evolve(rho, u)))
        return np.array(sig)
    if member_delta is None:
        deltas, weights = inhomogeneity_draws(error_model)
    else:
        deltas, weights = np.array([member_delta]), np.ones(1)
    out = np.zeros(4)
    for d, w in zip(deltas, weights):
        for k, op in enumerate(ops):
            r = evolve_with_errors(sys, op.schedule, rho, error_model, d,
                                   include_j_during_pulses)
            out[k] += w * jline_amplitude(sys, r)
    return out


def _combine(sys: SpinSystem, signals: np.ndarray, which: str) -> float:
    gain = 0.5 * (sys.gamma_i - sys.gamma_s)
    return float(np.dot(TEMPORAL_AVERAGING_SIGNS[which], signals) / gain)


def temporal_average_Sz(sys: SpinSystem, rho: Operator, gates: str = "ideal",
                        error_model: ErrorModel | None = None,
                        pi_duration: float = 50e-6,
                        include_j_during_pulses: bool = False) -> float:
    """Estimate of <Sz> from the four-readout combination."""
    signals = _readout_signals(sys, rho, gates, error_model, pi_duration,
                               include_j_during_pulses)
    return _combine(sys, signals, "Sz")


def temporal_average_Iz(sys: SpinSystem, rho: Operator, gates: str = "ideal",
                        error_model: ErrorModel | None = None,
                        pi_duration: float = 50e-6,
                        include_j_during_pulses: bool = False) -> float:
    """Estimate of <Iz>, the complementary combination of the same four runs."""
    signals = _readout_signals(sys, rho, gates, error_model, pi_duration,
                               include_j_during_pulses)
    return _combine(sys, signals, "Iz")


@dataclass(frozen=True)
class PauliVector:
    """Coefficients c_i with rho = 1/4 (identity + sum over i >= 1 of c_i P_i)."""

    coefficients: np.ndarray
    labels: tuple[str, ...] = PAULI_LABELS

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (16,) or len(self.labels) != 16:
            raise ValueError("need 16 coefficients and 16 labels")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @property
    def deviation(self) -> np.ndarray:
        return self.coefficients[1:]

    def to_operator(self) -> Operator:
        basis = pauli_product_basis()
        m = sum(c * p.matrix for c, p in zip(self.coefficients, basis)) / 4.0
        return Operator.hermitian(m)


def operator_to_pauli(rho: Operator) -> PauliVector:
    m = rho.in_basis("computational").matrix
    basis = pauli_product_basis()
    c = np.array([np.trace(m @ p.matrix).real for p in basis])
    return PauliVector(c)


def pauli_to_json(pv: PauliVector) -> str:
    return json.dumps({"labels": list(pv.labels),
                       "coefficients": [float(c) for c in pv.coefficients]},
                      indent=2)


def pauli_from_json(text: str) -> PauliVector:
    doc = json.loads(text)
    return PauliVector(np.array(doc["coefficients"]), tuple(doc["labels"]))


def pauli_to_csv(pv: PauliVector) -> str:
    out = io.StringIO()
    out.write("label,coefficient\n")
    for lbl, c in zip(pv.labels, pv.coefficients):
        out.write(f"{lbl},{c:.17g}\n")
    return out.getvalue()


def pauli_from_csv(text: str) -> PauliVector:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "label,coefficient":
        raise ValueError("expected header label,coefficient")
    labels = []
    coeffs = []
    for ln in lines[1:]:
        lbl, c = ln.split(",")
        labels.append(lbl)
        coeffs.append(float(c))
    return PauliVector(np.array(coeffs), tuple(labels))


# Mapping-word machinery. Generators are +-90 degree selective rotations
# about x and y plus the pi Ising echo; x precedes y so equal-length
# alternatives resolve to x, and the echo bridges single-spin and two-spin
# observables.
_GENERATORS = (
    ("S", "x", +1), ("S", "x", -1),
    ("I", "x", +1), ("I", "x", -1),
    ("S", "y", +1), ("S", "y", -1),
    ("I", "y", +1), ("I", "y", -1),
    ("zz",),
)


def _generator_unitary(gate: tuple) -> np.ndarray:
    if gate[0] == "zz":
        return np.diag(np.exp(-1j * np.pi * np.array([0.25, -0.25, -0.25, 0.25])))
    target, axis, sense = gate
    return rotation_unitary(target, axis, sense * np.pi / 2).matrix


def generator_schedule(sys: SpinSystem, gate: tuple,
                       pi_duration: float = 50e-6) -> PulseSchedule:
    if gate[0] == "zz":
        return compile_uzz(sys, np.pi, pi_duration)
    target, axis, sense = gate
    return compile_selective_rotation(sys, target, axis, sense * np.pi / 2,
                                      pi_duration)


@cache
def mapping_words() -> dict[str, tuple[tuple, ...]]:
    """Shortest rotation word sending each deviation Pauli to a z observable.

    A word (g1, g2) means g1 is applied first. The search is breadth-first
    with a fixed generator order, so the table is deterministic; every
    Pauli resolves within three gates.
    """
    basis = pauli_product_basis()
    z_i = basis[3].matrix   # sigma_z x 1
    z_s = basis[6].matrix   # 1 x sigma_z
    targets: dict[str, tuple[tuple, ...]] = {}

    def resolved(m: np.ndarray) -> bool:
        for cand in (z_i, z_s):
            for sign in (1.0, -1.0):
                if np.max(np.abs(m - sign * cand)) <= 1e-9:
                    return True
        return False

    frontier = [((), np.eye(4, dtype=complex))]
    unresolved = set(PAULI_LABELS[1:])
    while unresolved:
        for word, u in frontier:
            for lbl in sorted(unresolved):
                p = basis[PAULI_LABELS.index(lbl)].matrix
                if resolved(u @ p @ u.conj().T):
                    targets.setdefault(lbl, word)
            unresolved -= set(targets)
            if not unresolved:
                break
        if not unresolved:
            break
        if len(frontier[0][0]) >= 4:
            raise RuntimeError("mapping search failed to terminate")
        frontier = [(word + (gate,), _generator_unitary(gate) @ u)
                    for word, u in frontier for gate in _GENERATORS]
    return targets


def word_unitary(word: tuple[tuple, ...]) -> Operator:
    u = np.eye(4, dtype=complex)
    for gate in word:
        u = _generator_unitary(gate) @ u
    return Operator.unitary(u)


def word_schedule(sys: SpinSystem, word: tuple[tuple, ...],
                  pi_duration: float = 50e-6) -> PulseSchedule:
    sched = PulseSchedule("map", ())
    for gate in word:
        sched = sched.then(generator_schedule(sys, gate, pi_duration), "map")
    return sched


def _design_matrix(words: list[tuple[tuple, ...]]) -> np.ndarray:
    """Rows: (word, estimator) pairs; columns: the 15 deviation Paulis.

    Entry = Tr[U P_j U^dag E] / 4 with E = Iz then Sz per word, so that
    row . c equals the ideal z estimate of the mapped state.
    """
    basis = pauli_product_basis()
    rows = []
    for word in words:
        u = word_unitary(word).matrix
        for est in (IZ, SZ):
            rows.append([np.trace(u @ basis[j].matrix @ u.conj().T @ est).real / 4.0
                         for j in range(1, 16)])
    return np.array(rows)


def state_tomography(sys: SpinSystem, preparation, gates: str = "ideal",
                     error_model: ErrorModel | None = None,
                     pi_duration: float = 50e-6,
                     include_j_during_pulses: bool = False) -> PauliVector:
    """Measure all 15 deviation coefficients of a replayable preparation.

    Args:
        preparation: a zero-argument callable returning the state, re-run
            for every measurement setting (each shot is destructive), or a
            fixed Operator.
    """
    prepare = preparation if callable(preparation) else (lambda: preparation)
    table = mapping_words()
    words = sorted(set(table.values()), key=lambda w: (len(w), repr(w)))
    design = _design_matrix(words)
    if np.linalg.matrix_rank(design) < 15:
        raise ValueError("design matrix is singular; mapping set incomplete")
    measured = []
    for word in words:
        rho = prepare()
        if gates == "ideal":
            rho_m = evolve(rho, word_unitary(word))
            signals = _readout_signals(sys, rho_m, "ideal", None, pi_duration,
                                       include_j_during_pulses)
        elif error_model is None:
            u = schedule_propagator(sys, word_schedule(sys, word, pi_duration),
                                    include_j_during_pulses)
            signals = _readout_signals(sys, evolve(rho, u), "compiled", None,
                                       pi_duration, include_j_during_pulses)
        else:
            # word and readout share each ensemble member's field offset
            sched = word_schedule(sys, word, pi_duration)
            deltas, weights = inhomogeneity_draws(error_model)
            signals = np.zeros(4)
            for d, w in zip(deltas, weights):
                r = evolve_with_errors(sys, sched, rho, error_model, d,
                                       include_j_during_pulses)
                signals += w * _readout_signals(sys, r, "compiled", error_model,
                                                pi_duration,
                                                include_j_during_pulses, d)
        measured.append(_combine(sys, signals, "Iz"))
        measured.append(_combine(sys, signals, "Sz"))
    coeffs, *_ = np.linalg.lstsq(design, np.array(measured), rcond=None)
    return PauliVector(np.concatenate(([1.0], coeffs)))


def state_fidelity(a: PauliVector, b: PauliVector) -> float:
    """Normalized overlap of the deviation vectors, in [-1, 1]."""
    da, db = a.deviation, b.deviation
    na, nb = np.linalg.norm(da), np.linalg.norm(db)
    if na == 0 or nb == 0:
        raise ValueError("fidelity undefined for a zero deviation vector")
    return float(np.dot(da, db) / (na * nb))
