"""Experiment runners shared by the HTTP service and the CLI.

Each runner takes a validated request model plus the resolved seed and
returns a response model whose ``files`` map holds the complete output
artifacts as text. Nothing here touches the filesystem or the clock, so
a run is a pure function of (config, seed) and the bytes are stable.
"""

from __future__ import annotations

import json

import numpy as np

from .benchmarking import (FitConvergenceError, fit_rb_decay, fit_report_json,
                           rb_curve_csv, rb_to_json, run_rb)
from .errors import ensemble_evolve
from .pulses import (cnot_unitary, compile_cnot, compile_selective_rotation,
                     schedule_propagator)
from .reconstruct import (TomographyPair, distance_to_ideal, gate_fidelity,
                          pair_from_states, reconstruct_unitary,
                          reconstruction_report)
from .schemas import (CnotRequest, CnotResponse, FidRequest, FidResponse,
                      RBRequest, RBResponse, RunRequest, ScanRequest,
                      ScanResponse, TomoRequest, TomoResponse)
from .spincore import Operator, evolve
from .stateprep import (adiabatic_state, amplitude_scan, fid_to_csv, fit_scan,
                        fit_lorentzian_fwhm, peak_frequency, simulate_fid,
                        spectrum, spectrum_to_csv, sudden_state)
from .tomography import (PAULI_LABELS, PauliVector, operator_to_pauli,
                         pauli_to_csv, pauli_to_json, state_fidelity,
                         state_tomography)


def _json_file(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _initial_state(name: str, pol) -> Operator:
    return sudden_state(pol) if name == "sudden" else adiabatic_state(pol)


def run_fid(cfg: FidRequest, seed: int) -> FidResponse:
    sys = cfg.system.build()
    pol = cfg.polarization.build(sys)
    rho0 = _initial_state(cfg.state, pol)
    pulse = cfg.pulse
    if pulse == "auto":
        pulse = "pi_S" if cfg.state == "adiabatic" else "none"
    if pulse != "none":
        target = "S" if pulse == "pi_S" else "I"
        sched = compile_selective_rotation(sys, target, "x", np.pi)
        rho0 = evolve(rho0, schedule_propagator(sys, sched))
    rng = np.random.default_rng(seed)
    record = simulate_fid(sys, rho0, cfg.duration_s, cfg.dt_s, cfg.t2_s,
                          cfg.noise_sigma, rng, state_label=cfg.state)
    f, amp = spectrum(record, cfg.zero_padding)
    window = (sys.j - 1.0, sys.j + 1.0)
    peak = peak_frequency(f, amp, *window)
    samples = np.asarray(record.samples)
    # a stationary state leaves only float residue; do not fit a width to it
    flat = np.std(samples) <= 1e-9 * max(np.mean(np.abs(samples)), 1.0)
    if flat:
        fwhm = None
    else:
        try:
            _, fwhm = fit_lorentzian_fwhm(f, amp, *window)
        except ValueError:
            fwhm = None
    summary = {
        "state": cfg.state,
        "duration_s": cfg.duration_s,
        "dt_s": cfg.dt_s,
        "j_hz": sys.j,
        "peak_frequency_hz": peak,
        "fwhm_hz": fwhm,
        "seed": seed,
    }
    files = {
        "fid.csv": fid_to_csv(record),
        "spectrum.csv": spectrum_to_csv(f, amp),
        "fid_summary.json": _json_file(summary),
    }
    return FidResponse(seed=seed, peak_frequency_hz=peak, fwhm_hz=fwhm,
                       j_hz=sys.j, files=files)


def _scan_csv(amplitudes: np.ndarray, signals: np.ndarray, mode: str) -> str:
    lines = ["b_dc_t,signal,mode"]
    for b, s in zip(amplitudes, signals):
        lines.append(f"{b:.17g},{s:.17g},{mode}")
    return "\n".join(lines) + "\n"


def run_scan(cfg: ScanRequest, seed: int) -> ScanResponse:
    sys = cfg.system.build()
    pol = cfg.polarization.build(sys)
    rho0 = _initial_state(cfg.state, pol)
    grid = np.linspace(cfg.b_min_t, cfg.b_max_t, cfg.points)
    signals = amplitude_scan(sys, rho0, cfg.axis, grid, cfg.mode,
                             cfg.pulse_duration_s,
                             cfg.include_j_during_pulses)
    a, residual = fit_scan(sys, grid, signals, cfg.mode, cfg.pulse_duration_s)
    files = {"scan.csv": _scan_csv(grid, signals, cfg.mode)}
    return ScanResponse(seed=seed, mode=cfg.mode, fitted_amplitude=a,
                        relative_residual=residual, files=files)


def run_rb_experiment(cfg: RBRequest, seed: int, threads: int = 1) -> RBResponse:
    sys = cfg.system.build()
    pol = cfg.polarization.build(sys)
    model = cfg.error.build() if cfg.error is not None else None
    data = run_rb(sys, model, cfg.effective_lengths(),
                  cfg.sequences_per_length, seed, cfg.realization,
                  cfg.depolarizing, pol, cfg.pi_duration_s,
                  cfg.include_j_during_pulses, threads)
    files = {
        "rb_data.json": rb_to_json(data),
        "rb_curve.csv": rb_curve_csv(data),
    }
    try:
        fit = fit_rb_decay(data, cfg.inverse_variance)
    except (FitConvergenceError, ValueError) as exc:
        return RBResponse(seed=seed, converged=False, fit_error=str(exc),
                          files=files)
    files["rb_fit.json"] = fit_report_json(fit, data)
    return RBResponse(seed=seed, converged=True, eps_g=fit.eps_g,
                      d_if=fit.d_if, stderr_eps_g=fit.stderr_eps_g,
                      stderr_d_if=fit.stderr_d_if,
                      average_fidelity=fit.average_fidelity, a=fit.a, p=fit.p,
                      files=files)


def _apply_gate(sys, rho: Operator, gates: str, error, pi_duration: float,
                include_j: bool) -> Operator:
    """Send a state through the two-qubit gate at the chosen realism level."""
    if gates == "ideal":
        return evolve(rho, cnot_unitary())
    sched = compile_cnot(sys, pi_duration)
    if gates == "compiled":
        return evolve(rho, schedule_propagator(sys, sched, include_j))
    return ensemble_evolve(sys, sched, rho, error.build(), include_j)


def run_tomo(cfg: TomoRequest, seed: int) -> TomoResponse:
    sys = cfg.system.build()
    pol = cfg.polarization.build(sys)
    rho0 = _initial_state(cfg.state, pol)
    reference = rho0
    prepared = rho0
    if cfg.apply_cnot:
        reference = evolve(rho0, cnot_unitary())
        prepared = _apply_gate(sys, rho0, cfg.gates, cfg.error,
                               cfg.pi_duration_s, cfg.include_j_during_pulses)
    tomo_gates = "ideal" if cfg.gates == "ideal" else "compiled"
    tomo_model = cfg.error.build() if cfg.gates == "errored" else None
    measured = state_tomography(sys, prepared, tomo_gates, tomo_model,
                                cfg.pi_duration_s,
                                cfg.include_j_during_pulses)
    fidelity = state_fidelity(measured, operator_to_pauli(reference))
    files = {
        "pauli.csv": pauli_to_csv(measured),
        "pauli.json": pauli_to_json(measured),
    }
    coeffs = {label: float(c)
              for label, c in zip(PAULI_LABELS, measured.coefficients)}
    return TomoResponse(seed=seed, coefficients=coeffs,
                        fidelity_vs_reference=fidelity, files=files)


def _perturbed(pv: PauliVector, rng: np.random.Generator,
               sigma: float) -> PauliVector:
    if sigma == 0:
        return pv
    coeffs = np.array(pv.coefficients, dtype=float)
    coeffs[1:] = coeffs[1:] + rng.normal(0.0, sigma * np.linalg.norm(coeffs[1:]), 15)
    return PauliVector(coeffs)


def run_cnot(cfg: CnotRequest, seed: int) -> CnotResponse:
    sys = cfg.system.build()
    pol = cfg.polarization.build(sys)
    rng = np.random.default_rng(seed)
    pairs = []
    for name, weight in (("sudden", cfg.weight_sudden),
                         ("adiabatic", cfg.weight_adiabatic)):
        rho_in = _initial_state(name, pol)
        rho_out = _apply_gate(sys, rho_in, cfg.gates, cfg.error,
                              cfg.pi_duration_s, cfg.include_j_during_pulses)
        exact = pair_from_states(rho_in, rho_out, weight)
        pairs.append(TomographyPair(
            _perturbed(exact.input, rng, cfg.noise_sigma),
            _perturbed(exact.output, rng, cfg.noise_sigma),
            weight,
        ))
    result = reconstruct_unitary(pairs, cfg.restarts, seed, cfg.entrywise_l1)
    fid = gate_fidelity(result.unitary, cnot_unitary())
    report = reconstruction_report(result)
    files = {"reconstruction.json": _json_file(report)}
    return CnotResponse(seed=seed, converged=result.converged,
                        objective=result.objective,
                        fidelity_paper_convention=fid.paper_convention,
                        fidelity_phase_invariant=fid.phase_invariant,
                        distance_to_ideal=distance_to_ideal(result),
                        restarts=result.restarts, files=files)


def run_experiment(req: RunRequest):
    cfg = req.config
    if isinstance(cfg, FidRequest):
        return run_fid(cfg, req.seed)
    if isinstance(cfg, ScanRequest):
        return run_scan(cfg, req.seed)
    if isinstance(cfg, RBRequest):
        return run_rb_experiment(cfg, req.seed, req.threads)
    if isinstance(cfg, TomoRequest):
        return run_tomo(cfg, req.seed)
    if isinstance(cfg, CnotRequest):
        return run_cnot(cfg, req.seed)
    raise TypeError(f"unhandled config type {type(cfg).__name__}")
