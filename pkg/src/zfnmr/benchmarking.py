"""Single-spin Clifford group, randomized benchmarking, decay fitting.

The printed generating set P = exp(+-i pi V), V in {1, Sx, Sy, Sz}, times
C = exp(+-i (pi/2) Q), Q in {Sx, Sy, Sz}, enumerates 48 products but only
12 phase-distinct rotations: every PC product composes a half turn with a
quarter turn, and no combination lands on the identity or the other
rotation classes. Closing the set under multiplication yields the full
24-element group, which benchmarking requires anyway (the recovery gate
must exist for every sequence), so the group here is that closure. Each
element carries the shortest realization found over quarter- and
half-turn generators on S, which is what gets compiled to pulses, plus
the PC decomposition where one exists.

Elements are identified by their action on the Pauli axes (a signed
permutation matrix), which is phase-free and exact in integers; group
multiplication, inversion, and recovery lookup all run on those keys.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cache

import numpy as np

from .errors import ErrorModel, apply_pulse_error, evolve_with_errors, \
    inhomogeneity_draws
from .pulses import PulseSchedule, compile_selective_rotation, segment_propagator
from .spincore import IDENTITY_2, IZ, SZ, Operator, SpinSystem
from .stateprep import PolarizationConfig, sudden_state
from .tomography import TEMPORAL_AVERAGING_SIGNS, readout_ops

DEFAULT_LENGTHS = (1, 2, 4, 8, 16, 32, 64, 128, 256)
DEFAULT_SEQUENCES = 32

_SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class FitConvergenceError(RuntimeError):
    """Raised when the decay fit exhausts its iteration budget."""


def _rot2(axis: str, angle: float) -> np.ndarray:
    s = _SIGMA[axis]
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * s


def ptm_key(u: np.ndarray) -> tuple[int, ...]:
    """Signed axis permutation of a 2x2 Clifford, as 9 exact integers."""
    key = []
    for a in "xyz":
        for b in "xyz":
            v = 0.5 * np.trace(_SIGMA[a] @ u @ _SIGMA[b] @ u.conj().T).real
            r = round(v)
            if abs(v - r) > 1e-9:
                raise ValueError("unitary is not a Clifford axis permutation")
            key.append(int(r))
    return tuple(key)


def _inverse_key(key: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(int(x) for x in np.array(key).reshape(3, 3).T.flatten())


@dataclass(frozen=True)
class CliffordElement:
    """One of the 24 single-spin Clifford rotations.

    ``word`` is the shortest generator sequence realizing it, first gate
    first, each entry an (axis, angle) rotation on spin S. ``pc_form``
    holds a (p_sign, p_axis, c_sign, c_axis) decomposition when the
    element is a PC product; None for the 12 elements outside that set.
    """

    index: int
    unitary: np.ndarray
    word: tuple[tuple[str, float], ...]
    pc_form: tuple | None = None

    def __post_init__(self) -> None:
        u = np.array(self.unitary, dtype=complex)
        u.flags.writeable = False
        object.__setattr__(self, "unitary", u)

    @property
    def key(self) -> tuple[int, ...]:
        return ptm_key(self.unitary)


_WORD_GENERATORS = (
    ("x", np.pi / 2), ("x", -np.pi / 2), ("y", np.pi / 2), ("y", -np.pi / 2),
    ("z", np.pi / 2), ("z", -np.pi / 2), ("x", np.pi), ("y", np.pi),
    ("z", np.pi),
)


def _word_unitary(word: tuple[tuple[str, float], ...]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for axis, angle in word:
        u = _rot2(axis, angle) @ u
    return u


@cache
def clifford_group() -> tuple[CliffordElement, ...]:
    """The 24 phase-distinct elements, canonically ordered by axis key."""
    # seed set: the PC products (12 distinct keys), then close under products
    reps: dict[tuple[int, ...], np.ndarray] = {}
    pc_forms: dict[tuple[int, ...], tuple] = {}
    for p_sign in (+1, -1):
        for v in (None, "x", "y", "z"):
            p = np.eye(2, dtype=complex) if v is None else _rot2(v, -p_sign * np.pi)
            for c_sign in (+1, -1):
                for q in ("x", "y", "z"):
                    u = p @ _rot2(q, -c_sign * np.pi / 2)
                    k = ptm_key(u)
                    reps.setdefault(k, u)
                    pc_forms.setdefault(k, (p_sign, v, c_sign, q))
    changed = True
    while changed:
        changed = False
        for ua in list(reps.values()):
            for ub in list(reps.values()):
                k = ptm_key(ua @ ub)
                if k not in reps:
                    reps[k] = ua @ ub
                    changed = True
    if len(reps) != 24:
        raise RuntimeError(f"group closure produced {len(reps)} elements")
    # shortest pulse realization per element, breadth-first over rotations
    words: dict[tuple[int, ...], tuple] = {}
    frontier = [((), np.eye(2, dtype=complex))]
    depth = 0
    while len(words) < 24:
        for word, u in frontier:
            words.setdefault(ptm_key(u), word)
        if len(words) == 24:
            break
        depth += 1
        if depth > 3:
            raise RuntimeError("word search failed to terminate")
        frontier = [(word + (g,), _rot2(*g) @ u)
                    for word, u in frontier for g in _WORD_GENERATORS]
    return tuple(
        CliffordElement(i, _word_unitary(words[k]), words[k], pc_forms.get(k))
        for i, k in enumerate(sorted(reps))
    )


@cache
def _key_index() -> dict[tuple[int, ...], int]:
    return {el.key: el.index for el in clifford_group()}


def clifford_inverse(element: CliffordElement) -> CliffordElement:
    return clifford_group()[_key_index()[_inverse_key(element.key)]]


def embedded_unitary(element: CliffordElement) -> Operator:
    """The element acting on spin S, identity on I, computational basis."""
    return Operator.unitary(np.kron(IDENTITY_2, element.unitary))


def compile_clifford(sys: SpinSystem, element: CliffordElement,
                     pi_duration: float = 50e-6) -> PulseSchedule:
    """Pulse realization: one compiled selective rotation per word entry."""
    sched = PulseSchedule(f"C{element.index}", ())
    for axis, angle in element.word:
        sched = sched.then(
            compile_selective_rotation(sys, "S", axis, angle, pi_duration),
            f"C{element.index}")
    return sched


def generate_rb_sequence(m: int, seed) -> tuple[list[CliffordElement], CliffordElement]:
    """m uniform random elements plus the group element undoing their product."""
    if m < 0:
        raise ValueError("sequence length must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    group = clifford_group()
    picks = [group[i] for i in rng.integers(0, len(group), size=m)]
    net = np.eye(3, dtype=int)
    for el in picks:
        net = np.array(el.key).reshape(3, 3) @ net
    recovery = group[_key_index()[_inverse_key(tuple(net.flatten()))]]
    return picks, recovery


@dataclass(frozen=True)
class RBDataset:
    """Normalized survivals, shape (lengths, sequences), plus per-sequence seeds."""

    lengths: tuple[int, ...]
    survivals: np.ndarray
    seeds: np.ndarray

    def __post_init__(self) -> None:
        s = np.array(self.survivals, dtype=float)
        z = np.array(self.seeds, dtype=np.uint64)
        if s.ndim != 2 or s.shape[0] != len(self.lengths):
            raise ValueError("survivals must be shaped (lengths, sequences)")
        if z.shape != s.shape:
            raise ValueError("seeds must mirror the survival grid")
        s.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "survivals", s)
        object.__setattr__(self, "seeds", z)
        object.__setattr__(self, "lengths", tuple(int(m) for m in self.lengths))

    @property
    def k(self) -> int:
        return self.survivals.shape[1]

    def means(self) -> np.ndarray:
        return self.survivals.mean(axis=1)

    def stderrs(self) -> np.ndarray:
        if self.k < 2:
            return np.zeros(len(self.lengths))
        return self.survivals.std(axis=1, ddof=1) / np.sqrt(self.k)


def rb_to_json(data: RBDataset) -> str:
    return json.dumps({
        "lengths": list(data.lengths),
        "survivals": [[float(v) for v in row] for row in data.survivals],
        "seeds": [[int(v) for v in row] for row in data.seeds],
    }, indent=2)


def rb_from_json(text: str) -> RBDataset:
    doc = json.loads(text)
    return RBDataset(tuple(doc["lengths"]), np.array(doc["survivals"]),
                     np.array(doc["seeds"], dtype=np.uint64))


def rb_curve_csv(data: RBDataset) -> str:
    lines = ["m,mean,stderr"]
    for m, mu, se in zip(data.lengths, data.means(), data.stderrs()):
        lines.append(f"{m},{mu:.17g},{se:.17g}")
    return "\n".join(lines) + "\n"


def _depolarize_s(rho: np.ndarray, strength: float) -> np.ndarray:
    """Shrink every S-dependent component by (1 - strength)."""
    r = rho.reshape(2, 2, 2, 2)
    reduced = np.trace(r, axis1=1, axis2=3)
    mixed = np.kron(reduced, IDENTITY_2 / 2.0)
    return (1.0 - strength) * rho + strength * mixed


def _errored_propagator(sys: SpinSystem, sched: PulseSchedule, model: ErrorModel,
                        delta: float, include_j: bool) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for seg in sched.segments:
        errored = apply_pulse_error(seg, model, delta)
        u = segment_propagator(sys, errored, include_j).matrix @ u
    return u


def _sz_from_signals(sys: SpinSystem, signals: np.ndarray) -> float:
    gain = 0.5 * (sys.gamma_i - sys.gamma_s)
    return float(np.dot(TEMPORAL_AVERAGING_SIGNS["Sz"], signals) / gain)


def _jline(sys: SpinSystem, rho: np.ndarray) -> float:
    a = 0.5 * (sys.gamma_i - sys.gamma_s)
    return float(a * np.trace(rho @ (IZ - SZ)).real)


def run_rb(sys: SpinSystem, error_model: ErrorModel | None = None,
           lengths: tuple[int, ...] = DEFAULT_LENGTHS,
           k: int = DEFAULT_SEQUENCES, seed: int = 0,
           realization: str = "compiled", depolarizing: float = 0.0,
           polarization: PolarizationConfig | None = None,
           pi_duration: float = 50e-6,
           include_j_during_pulses: bool = True,
           threads: int = 1) -> RBDataset:
    """Simulated benchmarking of the 24 Cliffords on spin S.

    Each sequence starts from the sudden state, applies m random Cliffords
    and the recovery, and is read out through temporal averaging; survivals
    are the <Sz> estimates normalized by the sequence-free baseline. In
    compiled mode the gates are the composite-pulse schedules under the
    error model, every ensemble member seeing the whole run (gates and
    readout) at its own field offset; abstract mode uses the bare 4x4
    unitaries with ideal readout. A per-gate depolarizing channel of
    strength 2 eps can be injected in either mode.
    """
    if k < 1:
        raise ValueError("need at least one sequence per length")
    if realization not in ("compiled", "abstract"):
        raise ValueError(f"unknown realization {realization!r}")
    model = error_model if error_model is not None else ErrorModel.none()
    cfg = polarization if polarization is not None else PolarizationConfig(system=sys)
    rho0 = sudden_state(cfg)
    group = clifford_group()
    strict = model.strict_decoherence and realization == "compiled"

    if realization == "compiled":
        deltas, weights = inhomogeneity_draws(model)
        schedules = [compile_clifford(sys, el, pi_duration) for el in group]
        readouts = readout_ops(sys, pi_duration)
        member_gates = [
            [_errored_propagator(sys, s, model, d, include_j_during_pulses)
             for s in schedules]
            for d in deltas
        ]
        member_readouts = [
            [_errored_propagator(sys, op.schedule, model, d, include_j_during_pulses)
             for op in readouts]
            for d in deltas
        ]
    else:
        deltas, weights = np.zeros(1), np.ones(1)
        schedules = None
        member_gates = [[np.kron(IDENTITY_2, el.unitary) for el in group]]
        member_readouts = [[op.ideal.matrix for op in readout_ops(sys, pi_duration)]]

    def readout(member: int, rho: np.ndarray) -> float:
        signals = np.array([
            _jline(sys, u @ rho @ u.conj().T) for u in member_readouts[member]
        ])
        return _sz_from_signals(sys, signals)

    baseline = sum(w * readout(mi, rho0.matrix)
                   for mi, w in enumerate(weights))
    if baseline == 0:
        raise ValueError("readout baseline vanished; cannot normalize survivals")

    seed_grid = np.random.SeedSequence(seed).generate_state(
        len(lengths) * k, np.uint64).reshape(len(lengths), k)

    def one_sequence(args) -> float:
        li, ki = args
        rng = np.random.default_rng(seed_grid[li, ki])
        idx = list(rng.integers(0, len(group), size=lengths[li]))
        net = np.eye(3, dtype=int)
        for i in idx:
            net = np.array(group[i].key).reshape(3, 3) @ net
        order = idx + [_key_index()[_inverse_key(tuple(net.flatten()))]]
        value = 0.0
        for mi, (d, w) in enumerate(zip(deltas, weights)):
            if strict:
                state = rho0
                for i in order:
                    state = evolve_with_errors(sys, schedules[i], state, model, d,
                                               include_j_during_pulses)
                    if depolarizing > 0:
                        state = Operator.hermitian(
                            _depolarize_s(np.array(state.matrix), depolarizing))
                rho = np.array(state.matrix)
            else:
                rho = rho0.matrix
                for i in order:
                    u = member_gates[mi][i]
                    rho = u @ rho @ u.conj().T
                    if depolarizing > 0:
                        rho = _depolarize_s(rho, depolarizing)
            value += w * readout(mi, rho)
        return value / baseline

    jobs = [(li, ki) for li in range(len(lengths)) for ki in range(k)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(one_sequence, jobs))
    else:
        flat = [one_sequence(j) for j in jobs]
    survivals = np.array(flat).reshape(len(lengths), k)
    return RBDataset(tuple(lengths), survivals, seed_grid)


@dataclass(frozen=True)
class RBFit:
    """Decay-fit result for survivals modeled as A p^m."""

    eps_g: float
    d_if: float
    stderr_eps_g: float
    stderr_d_if: float
    covariance: np.ndarray
    a: float
    p: float
    iterations: int
    residual_rms: float

    @property
    def average_fidelity(self) -> float:
        return 1.0 - self.eps_g


def fit_rb_decay(data: RBDataset, inverse_variance: bool = False,
                 max_iterations: int = 200) -> RBFit:
    """Gauss-Newton fit of A p^m to the per-length mean survivals.

    A = 1 - d_if absorbs preparation and readout error; p = 1 - 2 eps_g is
    the per-Clifford depolarization. Initialized log-linearly; unweighted
    unless inverse-variance weighting is requested. Parameter covariance is
    s^2 (J^T J)^-1 propagated to (eps_g, d_if).
    """
    if len(data.lengths) < 3:
        raise ValueError("need at least three distinct lengths")
    m = np.array(data.lengths, dtype=float)
    y = data.means()
    if np.count_nonzero(y > 0) < 2:
        raise ValueError("survivals are non-positive; nothing to fit")
    w = np.ones_like(y)
    if inverse_variance:
        se = data.stderrs()
        if np.all(se > 0):
            w = 1.0 / se ** 2
    sqw = np.sqrt(w)
    pos = y > 0
    slope, intercept = np.polyfit(m[pos], np.log(y[pos]), 1)
    a, p = float(np.exp(intercept)), float(np.exp(slope))
    p = min(max(p, 1e-6), 1.2)

    def residual(a_, p_):
        return sqw * (y - a_ * p_ ** m)

    def jacobian(a_, p_):
        return np.column_stack([sqw * p_ ** m,
                                sqw * a_ * m * p_ ** np.maximum(m - 1, 0)])

    r = residual(a, p)
    cost = float(r @ r)
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        step, *_ = np.linalg.lstsq(jacobian(a, p), r, rcond=None)
        scale = 1.0
        improved = False
        prev_cost = cost
        for _ in range(30):
            a_try, p_try = a + scale * step[0], p + scale * step[1]
            if 0 < p_try < 1.5:
                r_try = residual(a_try, p_try)
                c_try = float(r_try @ r_try)
                if c_try <= cost:
                    a, p, r, cost = float(a_try), float(p_try), r_try, c_try
                    improved = True
                    break
            scale /= 2.0
        if (not improved
                or prev_cost - cost <= 1e-13 * max(prev_cost, 1e-30)
                or np.linalg.norm(step) < 1e-14 * max(1.0, abs(a) + abs(p))):
            converged = True
            break
    if not converged:
        raise FitConvergenceError(f"no convergence in {max_iterations} iterations")

    dof = max(y.size - 2, 1)
    s_sq = cost / dof
    jac = jacobian(a, p)
    cov_ap = s_sq * np.linalg.inv(jac.T @ jac)
    # (A, p) -> (eps_g, d_if): eps = (1 - p)/2, dif = 1 - A
    t = np.array([[0.0, -0.5], [-1.0, 0.0]])
    cov = t @ cov_ap @ t.T
    return RBFit(
        eps_g=float((1.0 - p) / 2.0),
        d_if=float(1.0 - a),
        stderr_eps_g=float(np.sqrt(max(cov[0, 0], 0.0))),
        stderr_d_if=float(np.sqrt(max(cov[1, 1], 0.0))),
        covariance=cov,
        a=a, p=p, iterations=iterations,
        residual_rms=float(np.sqrt(cost / y.size)),
    )


def fit_report_json(fit: RBFit, data: RBDataset) -> str:
    return json.dumps({
        "eps_g": fit.eps_g,
        "d_if": fit.d_if,
        "stderr_eps_g": fit.stderr_eps_g,
        "stderr_d_if": fit.stderr_d_if,
        "k": data.k,
        "lengths": list(data.lengths),
    }, indent=2)
