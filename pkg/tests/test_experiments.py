import json

import numpy as np
import pytest

from zfnmr.experiments import (run_cnot, run_experiment, run_fid,
                               run_rb_experiment, run_scan, run_tomo)
from zfnmr.schemas import (CnotRequest, ErrorSettings, FidRequest, RBRequest,
                           RunRequest, ScanRequest, TomoRequest)
from zfnmr.spincore import J_DEFAULT_HZ, SpinSystem, evolve
from zfnmr.stateprep import PolarizationConfig, sudden_state
from zfnmr.pulses import cnot_unitary
from zfnmr.tomography import operator_to_pauli

P_I = 1.234266441178607e-05
P_S = 3.1042274332102414e-06


def test_fid_pulsed_adiabatic_shows_line():
    resp = run_fid(FidRequest(duration_s=20.0), seed=0)
    assert abs(resp.peak_frequency_hz - J_DEFAULT_HZ) < 0.05
    assert resp.fwhm_hz is not None
    assert resp.j_hz == J_DEFAULT_HZ
    assert resp.files["fid.csv"].splitlines()[0] == "t_s,Mz"
    assert resp.files["spectrum.csv"].splitlines()[0] == "f_Hz,amplitude"
    summary = json.loads(resp.files["fid_summary.json"])
    assert summary["peak_frequency_hz"] == resp.peak_frequency_hz


def test_fid_unpulsed_adiabatic_is_flat():
    resp = run_fid(FidRequest(pulse="none", duration_s=10.0), seed=0)
    assert resp.fwhm_hz is None
    samples = [float(ln.split(",")[1])
               for ln in resp.files["fid.csv"].splitlines()[1:]]
    assert np.ptp(samples) < 1e-9 * max(1.0, abs(samples[0]))


def test_fid_sudden_state_needs_no_pulse():
    resp = run_fid(FidRequest(state="sudden", duration_s=20.0), seed=0)
    assert abs(resp.peak_frequency_hz - J_DEFAULT_HZ) < 0.05


def test_fid_noise_is_seed_deterministic():
    cfg = FidRequest(duration_s=5.0, noise_sigma=10.0)
    a = run_fid(cfg, seed=7)
    b = run_fid(cfg, seed=7)
    c = run_fid(cfg, seed=8)
    assert a.files == b.files
    assert a.files != c.files


def test_scan_collective_fit():
    resp = run_scan(ScanRequest(points=41), seed=0)
    assert resp.mode == "collective"
    assert resp.relative_residual < 1e-6
    rows = resp.files["scan.csv"].splitlines()
    assert rows[0] == "b_dc_t,signal,mode"
    assert len(rows) == 42
    assert rows[1].endswith(",collective")


def test_rb_small_run_converges():
    cfg = RBRequest(lengths=[1, 2, 4, 8], sequences_per_length=2,
                    realization="abstract", depolarizing=0.02)
    resp = run_rb_experiment(cfg, seed=0, threads=1)
    assert resp.converged
    assert resp.fit_error is None
    assert resp.eps_g == pytest.approx(0.01, abs=1e-6)
    assert resp.average_fidelity == pytest.approx(1.0 - resp.eps_g)
    assert set(resp.files) == {"rb_data.json", "rb_curve.csv", "rb_fit.json"}
    fit_doc = json.loads(resp.files["rb_fit.json"])
    assert fit_doc["eps_g"] == resp.eps_g


def test_tomo_ideal_matches_direct_expansion():
    resp = run_tomo(TomoRequest(), seed=0)
    pol = PolarizationConfig(system=SpinSystem())
    ref = operator_to_pauli(sudden_state(pol))
    got = np.array([resp.coefficients[lbl] for lbl in ref.labels])
    assert np.max(np.abs(got - ref.coefficients)) < 1e-8
    assert resp.fidelity_vs_reference == pytest.approx(1.0, abs=1e-8)
    assert set(resp.files) == {"pauli.csv", "pauli.json"}


def test_tomo_cnot_pattern():
    resp = run_tomo(TomoRequest(apply_cnot=True), seed=0)
    assert resp.coefficients["Iz"] == pytest.approx(P_I / 2.0, rel=1e-6)
    assert resp.coefficients["IzSz"] == pytest.approx(P_S / 2.0, rel=1e-6)
    others = [v for k, v in resp.coefficients.items()
              if k not in ("1", "Iz", "IzSz")]
    assert max(abs(v) for v in others) < 1e-8


def test_tomo_errored_gates_run():
    cfg = TomoRequest(gates="errored", error=ErrorSettings(ensemble_size=2))
    resp = run_tomo(cfg, seed=0)
    # errors shift the estimate but the dominant coefficient survives
    assert resp.coefficients["Iz"] == pytest.approx(P_I / 2.0, rel=0.2)


def test_cnot_ideal_gates_recover_cnot():
    resp = run_cnot(CnotRequest(gates="ideal", restarts=3), seed=0)
    assert resp.converged
    assert resp.distance_to_ideal <= 1e-6
    assert resp.fidelity_paper_convention == pytest.approx(1.0, abs=1e-6)
    doc = json.loads(resp.files["reconstruction.json"])
    u = np.array(doc["U_real"]) + 1j * np.array(doc["U_imag"])
    assert np.max(np.abs(u - cnot_unitary().matrix)) < 1e-6


def test_cnot_compiled_gates_close_to_ideal():
    resp = run_cnot(CnotRequest(restarts=3), seed=0)
    assert resp.converged
    assert 0.99 < resp.fidelity_phase_invariant < 1.0
    assert resp.objective < 1e-12


def test_run_experiment_dispatch():
    pairs = [
        (FidRequest(duration_s=5.0), "fid"),
        (ScanRequest(points=5), "scan"),
        (TomoRequest(), "tomo"),
    ]
    for cfg, name in pairs:
        resp = run_experiment(RunRequest(config=cfg, seed=2))
        assert resp.subcommand == name
        assert resp.seed == 2
