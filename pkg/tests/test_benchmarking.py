import json

import numpy as np
import pytest

from zfnmr.benchmarking import (DEFAULT_LENGTHS, FitConvergenceError, RBDataset,
                                _depolarize_s, _rot2, clifford_group,
                                clifford_inverse, compile_clifford,
                                embedded_unitary, fit_rb_decay, fit_report_json,
                                generate_rb_sequence, ptm_key, rb_curve_csv,
                                rb_from_json, rb_to_json, run_rb)
from zfnmr.errors import ErrorModel
from zfnmr.pulses import schedule_propagator
from zfnmr.spincore import SpinSystem, phase_invariant_distance
from zfnmr.tomography import operator_to_pauli
from zfnmr.spincore import Operator

IDENTITY_KEY = tuple(np.eye(3, dtype=int).flatten())


def test_group_has_24_distinct_elements():
    group = clifford_group()
    assert len(group) == 24
    keys = {el.key for el in group}
    assert len(keys) == 24
    for el in group:
        k = np.array(el.key).reshape(3, 3)
        assert np.array_equal(k @ k.T, np.eye(3, dtype=int))
        assert round(np.linalg.det(k)) == 1


def test_group_closed_under_products():
    group = clifford_group()
    keys = {el.key for el in group}
    for a in group[::5]:
        for b in group:
            assert ptm_key(a.unitary @ b.unitary) in keys


def test_inverse_is_transpose():
    for el in clifford_group():
        inv = clifford_inverse(el)
        assert inv.key == tuple(np.array(el.key).reshape(3, 3).T.flatten())
        assert ptm_key(inv.unitary @ el.unitary) == IDENTITY_KEY


def test_words_are_short_and_faithful():
    for el in clifford_group():
        assert len(el.word) <= 2
        u = np.eye(2, dtype=complex)
        for axis, angle in el.word:
            u = _rot2(axis, angle) @ u
        assert ptm_key(u) == el.key


def test_pc_forms_reproduce_their_elements():
    group = clifford_group()
    tagged = [el for el in group if el.pc_form is not None]
    assert len(tagged) == 12
    for el in tagged:
        p_sign, v, c_sign, q = el.pc_form
        p = np.eye(2, dtype=complex) if v is None else _rot2(v, -p_sign * np.pi)
        u = p @ _rot2(q, -c_sign * np.pi / 2)
        overlap = abs(np.trace(u.conj().T @ el.unitary)) / 2.0
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_compiled_cliffords_exact_on_idealized_system():
    sys = SpinSystem.idealized()
    worst = 0.0
    for el in clifford_group():
        u = schedule_propagator(sys, compile_clifford(sys, el))
        worst = max(worst, phase_invariant_distance(u, embedded_unitary(el)))
    assert worst < 1e-10


@pytest.mark.parametrize("m", [0, 5, 17])
def test_rb_sequence_closes_to_identity(m):
    picks, recovery = generate_rb_sequence(m, seed=9)
    net = np.eye(2, dtype=complex)
    for el in picks:
        net = el.unitary @ net
    assert ptm_key(recovery.unitary @ net) == IDENTITY_KEY
    with pytest.raises(ValueError):
        generate_rb_sequence(-1, seed=0)


def test_depolarizing_channel_shrinks_s_components(random_state):
    rho = random_state(2, scale=1e-2)
    before = operator_to_pauli(rho)
    after = operator_to_pauli(Operator.hermitian(
        _depolarize_s(np.array(rho.matrix), 0.3)))
    b = dict(zip(before.labels, before.coefficients))
    a = dict(zip(after.labels, after.coefficients))
    assert a["Iz"] == pytest.approx(b["Iz"], rel=1e-12)
    assert a["Ix"] == pytest.approx(b["Ix"], rel=1e-12)
    for lbl in ("Sx", "Sy", "Sz", "IzSz", "IxSy"):
        assert a[lbl] == pytest.approx(0.7 * b[lbl], rel=1e-12)


def test_dataset_shape_and_stats():
    surv = np.array([[1.0, 0.8], [0.6, 0.4]])
    seeds = np.zeros((2, 2), dtype=np.uint64)
    data = RBDataset((1, 2), surv, seeds)
    assert data.k == 2
    assert np.allclose(data.means(), [0.9, 0.5])
    assert np.allclose(data.stderrs(),
                       np.std(surv, axis=1, ddof=1) / np.sqrt(2))
    with pytest.raises(ValueError):
        RBDataset((1,), surv, seeds)
    with pytest.raises(ValueError):
        RBDataset((1, 2), surv, np.zeros((2, 3), dtype=np.uint64))


def test_rb_json_and_csv_round_trip():
    data = RBDataset((1, 2, 4), np.random.default_rng(0).uniform(size=(3, 2)),
                     np.arange(6, dtype=np.uint64).reshape(3, 2))
    back = rb_from_json(rb_to_json(data))
    assert back.lengths == data.lengths
    assert np.array_equal(back.survivals, data.survivals)
    assert np.array_equal(back.seeds, data.seeds)
    csv = rb_curve_csv(data)
    assert csv.splitlines()[0] == "m,mean,stderr"
    assert len(csv.splitlines()) == 4


def test_fit_recovers_synthetic_decay_exactly():
    m = np.array(DEFAULT_LENGTHS, dtype=float)
    a, p = 1.0 - 0.0141, 1.0 - 2.0 * 0.0040
    surv = (a * p ** m)[:, None]
    data = RBDataset(DEFAULT_LENGTHS, surv,
                     np.zeros_like(surv, dtype=np.uint64))
    fit = fit_rb_decay(data)
    assert abs(fit.eps_g - 0.0040) < 1e-8
    assert abs(fit.d_if - 0.0141) < 1e-8
    assert fit.average_fidelity == pytest.approx(1.0 - fit.eps_g)
    assert fit.residual_rms < 1e-12


def test_fit_covers_true_values_under_noise():
    m = np.array(DEFAULT_LENGTHS, dtype=float)
    a, p = 1.0 - 0.0141, 1.0 - 2.0 * 0.0040
    rng = np.random.default_rng(7)
    surv = a * p ** m[:, None] + rng.normal(0.0, 0.01, (len(m), 32))
    data = RBDataset(DEFAULT_LENGTHS, surv,
                     np.zeros_like(surv, dtype=np.uint64))
    for weighted in (False, True):
        fit = fit_rb_decay(data, inverse_variance=weighted)
        assert abs(fit.eps_g - 0.0040) <= 2.0 * fit.stderr_eps_g
        assert abs(fit.d_if - 0.0141) <= 2.0 * fit.stderr_d_if


def test_fit_validation():
    surv = np.ones((2, 1))
    with pytest.raises(ValueError):
        fit_rb_decay(RBDataset((1, 2), surv, np.zeros((2, 1), dtype=np.uint64)))
    flat = np.zeros((3, 1))
    with pytest.raises(ValueError):
        fit_rb_decay(RBDataset((1, 2, 4), flat,
                               np.zeros((3, 1), dtype=np.uint64)))
    assert issubclass(FitConvergenceError, RuntimeError)


def test_fit_report_json_keys():
    m = np.array((1, 2, 4, 8), dtype=float)
    surv = (0.99 * 0.992 ** m)[:, None]
    data = RBDataset((1, 2, 4, 8), surv, np.zeros_like(surv, dtype=np.uint64))
    doc = json.loads(fit_report_json(fit_rb_decay(data), data))
    assert set(doc) == {"eps_g", "d_if", "stderr_eps_g", "stderr_d_if",
                        "k", "lengths"}
    assert doc["k"] == 1


def test_abstract_depolarizing_run_recovers_rate(system):
    eps = 0.004
    data = run_rb(system, realization="abstract", depolarizing=2 * eps,
                  lengths=(1, 2, 4, 8, 16, 32), k=4, seed=5)
    fit = fit_rb_decay(data)
    # the recovery gate depolarizes too, so the offset absorbs one gate
    assert abs(fit.eps_g - eps) < 1e-8
    assert abs(fit.d_if - 2 * eps) < 1e-8


def test_error_free_compiled_run_survives():
    sys = SpinSystem.idealized()
    data = run_rb(sys, ErrorModel.none(), lengths=(1, 4), k=2, seed=3,
                  include_j_during_pulses=False)
    assert np.max(np.abs(data.survivals - 1.0)) < 1e-9


def test_threaded_run_matches_serial(system):
    kw = dict(realization="abstract", depolarizing=0.01,
              lengths=(1, 2, 4), k=4, seed=11)
    serial = run_rb(system, **kw, threads=1)
    threaded = run_rb(system, **kw, threads=3)
    assert np.array_equal(serial.survivals, threaded.survivals)
    assert np.array_equal(serial.seeds, threaded.seeds)


def test_run_rb_validation(system):
    with pytest.raises(ValueError):
        run_rb(system, k=0)
    with pytest.raises(ValueError):
        run_rb(system, realization="exact")
