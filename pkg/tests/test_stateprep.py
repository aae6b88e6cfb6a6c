import numpy as np
import pytest

from zfnmr.pulses import calibrate_pi_pulse, segment_propagator
from zfnmr.spincore import (COUPLED, J_DEFAULT_HZ, Operator, evolve,
                            zero_field_hamiltonian)
from zfnmr.stateprep import (FIDRecord, PolarizationConfig, adiabatic_state,
                             amplitude_scan, fid_from_csv, fid_to_csv,
                             fit_lorentzian_fwhm, fit_scan, jline_amplitude,
                             magnetization_z, peak_frequency, scan_model,
                             simulate_fid, spectrum, spectrum_from_csv,
                             spectrum_to_csv, sudden_state)

P_I = 1.234266441178607e-05
P_S = 3.1042274332102414e-06


def test_thermal_polarizations(pol):
    assert pol.p_i == pytest.approx(P_I, rel=1e-9)
    assert pol.p_s == pytest.approx(P_S, rel=1e-9)
    assert pol.p_i / pol.p_s == pytest.approx(pol.system.ratio, rel=1e-12)


def test_polarization_validation(system):
    with pytest.raises(ValueError):
        PolarizationConfig(bp=-0.1, system=system)
    with pytest.raises(ValueError):
        PolarizationConfig(temperature=0.0, system=system)


def test_sudden_state_structure(pol):
    rho = sudden_state(pol)
    m = rho.matrix
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(m, m.conj().T)
    assert np.allclose(np.diag(m).real,
                       0.25 + 0.25 * np.array([P_I + P_S, P_I - P_S,
                                               -P_I + P_S, -P_I - P_S]) / 2,
                       atol=1e-12)


def test_adiabatic_state_is_stationary(pol):
    rho = adiabatic_state(pol)
    rc = rho.in_basis(COUPLED).matrix
    off = ~np.eye(4, dtype=bool)
    assert np.max(np.abs(rc[off])) < 1e-16
    h = zero_field_hamiltonian(pol.system)
    comm = h.matrix @ rho.matrix - rho.matrix @ h.matrix
    assert np.max(np.abs(comm)) < 1e-12
    assert jline_amplitude(pol.system, rho) == pytest.approx(0.0, abs=1e-10)


def test_jline_amplitude_of_sudden_state(pol):
    sys = pol.system
    gain = 0.5 * (sys.gamma_i - sys.gamma_s)
    expected = gain * (pol.p_i - pol.p_s) / 4.0
    assert jline_amplitude(sys, sudden_state(pol)) == pytest.approx(expected, rel=1e-9)


def test_magnetization_of_sudden_state(pol):
    sys = pol.system
    expected = (sys.gamma_i * pol.p_i + sys.gamma_s * pol.p_s) / 4.0
    assert magnetization_z(sys, sudden_state(pol)) == pytest.approx(expected, rel=1e-9)


def test_fid_record_validation():
    with pytest.raises(ValueError):
        FIDRecord(np.array([1.0]), 1e-3)
    with pytest.raises(ValueError):
        FIDRecord(np.arange(4.0), 0.0)
    rec = FIDRecord(np.arange(4.0), 0.5)
    assert rec.times.tolist() == [0.0, 0.5, 1.0, 1.5]
    with pytest.raises(ValueError):
        rec.samples[0] = 9.0


def test_fid_csv_round_trip():
    rec = FIDRecord(np.array([0.25, -1.5, 3.0e-7]), 2e-3)
    back = fid_from_csv(fid_to_csv(rec))
    assert np.array_equal(back.samples, rec.samples)
    assert back.dt == rec.dt
    with pytest.raises(ValueError):
        fid_from_csv("time,signal\n0,1\n")


def test_spectrum_csv_round_trip():
    f = np.array([0.0, 1.0, 2.0])
    a = np.array([0.1, 0.9, 0.2])
    f2, a2 = spectrum_from_csv(spectrum_to_csv(f, a))
    assert np.array_equal(f, f2) and np.array_equal(a, a2)


def test_simulate_fid_nyquist_guard(system, pol):
    rho = sudden_state(pol)
    with pytest.raises(ValueError):
        simulate_fid(system, rho, 1.0, 1.0 / (2.0 * system.j))
    with pytest.raises(ValueError):
        simulate_fid(system, rho, 0.0, 1e-3)


def test_simulate_fid_noise_is_seeded(system, pol):
    rho = sudden_state(pol)
    a = simulate_fid(system, rho, 0.1, 1e-3, noise_sigma=0.1,
                     rng=np.random.default_rng(3))
    b = simulate_fid(system, rho, 0.1, 1e-3, noise_sigma=0.1,
                     rng=np.random.default_rng(3))
    c = simulate_fid(system, rho, 0.1, 1e-3, noise_sigma=0.1,
                     rng=np.random.default_rng(4))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_fid_line_amplitude_matches_functional(system, pol):
    # lock-in at J over an integer number of periods recovers the cosine
    # quadrature predicted by the amplitude functional
    rho = evolve(sudden_state(pol),
                 segment_propagator(system,
                                    calibrate_pi_pulse(system, "I", 5e-5, "x")))
    dt = 1.0 / (8.0 * system.j)
    rec = simulate_fid(system, rho, 800 * dt, dt, t2=1e12)
    cos_ref = np.cos(2 * np.pi * system.j * rec.times)
    locked = 2.0 * np.mean(rec.samples * cos_ref)
    assert locked == pytest.approx(jline_amplitude(system, rho), rel=1e-9)


def test_peak_frequency_interpolates(system):
    rec = FIDRecord(np.cos(2 * np.pi * 180.3 * np.arange(2000) * 1e-3), 1e-3)
    f, amp = spectrum(rec, zero_padding=8)
    got = peak_frequency(f, amp, 100.0, 250.0)
    assert abs(got - 180.3) < f[1] - f[0]
    with pytest.raises(ValueError):
        peak_frequency(f, amp, 180.0, 180.1)


def test_lorentzian_width_tracks_t2(system, pol):
    rho = evolve(sudden_state(pol),
                 segment_propagator(system,
                                    calibrate_pi_pulse(system, "I", 5e-5, "x")))
    rec = simulate_fid(system, rho, 60.0, 1e-3, t2=10.3)
    f, amp = spectrum(rec)
    center, fwhm = fit_lorentzian_fwhm(f, amp, system.j - 1.0, system.j + 1.0)
    assert center == pytest.approx(system.j, abs=1e-3)
    assert fwhm == pytest.approx(1.0 / (np.pi * 10.3), rel=0.02)


def test_scan_model_shapes(system):
    b = np.linspace(0.0, 1e-3, 11)
    col = scan_model(system, b, "collective")
    sel_s = scan_model(system, b, "selective_S")
    sel_i = scan_model(system, b, "selective_I")
    th_i = system.gamma_i * b * 1e-4
    th_s = system.gamma_s * b * 1e-4
    assert np.allclose(col, np.cos(th_s) - np.cos(th_i))
    assert np.allclose(sel_s, np.cos(th_s) - 1.0)
    assert np.allclose(sel_i, 1.0 - np.cos(th_i))
    with pytest.raises(ValueError):
        scan_model(system, b, "both")


def test_fit_scan_recovers_synthetic_amplitude(system):
    b = np.linspace(0.0, 1e-3, 41)
    y = -3.7 * scan_model(system, b, "collective")
    a, res = fit_scan(system, b, y, "collective")
    assert a == pytest.approx(-3.7, rel=1e-12)
    assert res < 1e-12
    a0, res0 = fit_scan(system, b, np.zeros_like(b), "collective")
    assert a0 == 0.0 and res0 == 0.0


def test_collective_scan_matches_model(system, pol):
    # the adiabatic response is exactly proportional to cos(th_S) - cos(th_I)
    rho = adiabatic_state(pol)
    b = np.linspace(0.0, 1e-3, 41)
    y = amplitude_scan(system, rho, "x", b, "collective")
    a, res = fit_scan(system, b, y, "collective")
    assert res < 1e-6
    gain = 0.5 * (system.gamma_i - system.gamma_s)
    assert a == pytest.approx(-gain * (pol.p_i + pol.p_s) / 8.0, rel=1e-6)


def test_selective_scans_have_opposite_extrema(system, pol):
    rho = adiabatic_state(pol)
    b = np.linspace(0.0, 1e-3, 41)
    y_s = amplitude_scan(system, rho, "x", b, "selective_S")
    y_i = amplitude_scan(system, rho, "x", b, "selective_I")
    ext_s = y_s[np.argmax(np.abs(y_s))]
    ext_i = y_i[np.argmax(np.abs(y_i))]
    assert np.sign(ext_s) == -np.sign(ext_i)
    a_s, res_s = fit_scan(system, b, y_s, "selective_S")
    a_i, res_i = fit_scan(system, b, y_i, "selective_I")
    assert res_s < 0.05 and res_i < 0.05
    assert np.sign(a_s) == np.sign(a_i)


def test_amplitude_scan_validation(system, pol):
    rho = sudden_state(pol)
    with pytest.raises(ValueError):
        amplitude_scan(system, rho, "x", np.array([1e-4]), "spiral")
    with pytest.raises(ValueError):
        amplitude_scan(system, rho, "w", np.array([1e-4]), "collective")
    with pytest.raises(ValueError):
        amplitude_scan(system, rho, "x", np.array([]), "collective")
