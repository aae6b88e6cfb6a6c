"""Initial states, magnetization observables, FID synthesis, spectra.

Two preparations are modeled, the limiting cases of switching off the
guiding field after prepolarization. The sudden state keeps the high-field
populations; the adiabatic state follows the level crossing and ends up
diagonal in the coupled basis. Detection is z magnetization weighted by
the gyromagnetic ratios, and the observable line is the single transition
at frequency J between the triplet-0 and singlet states.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import T2_DEFAULT
from .pulses import (
    AXIS_VECTORS,
    PulseSchedule,
    compile_selective_rotation,
    dc,
    schedule_propagator,
)
from .spincore import (
    COUPLED,
    IDENTITY_4,
    IX, IY, IZ, SX, SY, SZ,
    Operator,
    SpinSystem,
    evolve,
)

BP_DEFAULT = 1.8
TEMPERATURE_DEFAULT = 298.0
BG_DEFAULT = 3e-5


@dataclass(frozen=True)
class PolarizationConfig:
    """Prepolarization parameters and the spin system they act on.

    The guiding field bg only sets the scale of the switch-off physics and
    is carried for completeness; the two limiting states depend on bp and
    temperature alone.
    """

    bp: float = BP_DEFAULT
    temperature: float = TEMPERATURE_DEFAULT
    bg: float = BG_DEFAULT
    system: SpinSystem = field(default_factory=SpinSystem)

    def __post_init__(self) -> None:
        if self.bp < 0:
            raise ValueError("prepolarizing field must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def p_i(self) -> float:
        """Thermal polarization of spin I, hbar gamma_I Bp / kB T, about 1.2e-5."""
        return constants.hbar * self.system.gamma_i * self.bp / (
            constants.k * self.temperature)

    @property
    def p_s(self) -> float:
        return constants.hbar * self.system.gamma_s * self.bp / (
            constants.k * self.temperature)


def sudden_state(cfg: PolarizationConfig) -> Operator:
    """1/4 (identity + pI Iz + pS Sz): high-field populations carried over."""
    m = 0.25 * (IDENTITY_4 + cfg.p_i * IZ + cfg.p_s * SZ)
    return Operator.hermitian(m)


def adiabatic_state(cfg: PolarizationConfig) -> Operator:
    """Coupled-basis populations reached by slow switch-off.

    1/4 identity plus (pI+pS)/8 (Iz+Sz) - (pI-pS)/4 (IxSx+IySy). The
    deviation commutes with the J coupling, so the state is stationary at
    zero field.
    """
    alpha = (cfg.p_i + cfg.p_s) / 8.0
    beta = -(cfg.p_i - cfg.p_s) / 4.0
    m = 0.25 * IDENTITY_4 + alpha * (IZ + SZ) + beta * (IX @ SX + IY @ SY)
    return Operator.hermitian(m)


def magnetization_z(sys: SpinSystem, rho: Operator) -> float:
    """Tr[rho (gamma_I Iz + gamma_S Sz)], unit detector gain."""
    m = sys.gamma_i * IZ + sys.gamma_s * SZ
    return float(np.trace(rho.in_basis("computational").matrix @ m).real)


def jline_amplitude(sys: SpinSystem, rho: Operator) -> float:
    """Cosine-quadrature amplitude of the J line in the detected signal.

    Only the T0-S0 coherence of the magnetization oscillates at J, and its
    t = 0 amplitude works out to the expectation of the difference operator:
    A = (gamma_I - gamma_S)/2 * Tr[rho (Iz - Sz)].
    """
    a = 0.5 * (sys.gamma_i - sys.gamma_s)
    m = rho.in_basis("computational").matrix
    return float(a * np.trace(m @ (IZ - SZ)).real)


@dataclass(frozen=True)
class FIDRecord:
    """Uniformly sampled magnetization time series."""

    samples: np.ndarray
    dt: float
    state_label: str = ""
    schedule_label: str = ""

    def __post_init__(self) -> None:
        s = np.array(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("need a 1-d series of at least two samples")
        if self.dt <= 0:
            raise ValueError("sample interval must be positive")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt


def fid_to_csv(record: FIDRecord) -> str:
    out = io.StringIO()
    out.write("t_s,Mz\n")
    for t, v in zip(record.times, record.samples):
        out.write(f"{t:.17g},{v:.17g}\n")
    return out.getvalue()


def fid_from_csv(text: str) -> FIDRecord:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "t_s,Mz":
        raise ValueError("expected header t_s,Mz")
    rows = [ln.split(",") for ln in lines[1:]]
    t = np.array([float(r[0]) for r in rows])
    v = np.array([float(r[1]) for r in rows])
    return FIDRecord(v, float(t[1] - t[0]))


def simulate_fid(sys: SpinSystem, rho0: Operator, duration: float, dt: float,
                 t2: float = T2_DEFAULT, noise_sigma: float = 0.0,
                 rng: np.random.Generator | None = None,
                 state_label: str = "", schedule_label: str = "") -> FIDRecord:
    """Sample the detected magnetization under free evolution with damping.

    Free evolution is exact in the coupled eigenbasis; every coherence
    damps as exp(-t/T2), matching the damping channel used elsewhere. Any
    preparation pulse is the caller's job. Optional additive white Gaussian
    noise stands in for magnetometer noise.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if not dt < 1.0 / (2.0 * sys.j):
        raise ValueError(f"dt = {dt} violates Nyquist for the {sys.j} Hz line")
    n = int(round(duration / dt))
    times = np.arange(n) * dt
    rc = rho0.in_basis(COUPLED).matrix
    m_op = sys.gamma_i * IZ + sys.gamma_s * SZ
    mc = Operator.hermitian(m_op).in_basis(COUPLED).matrix
    energies = 2 * np.pi * sys.j * np.array([0.25, 0.25, 0.25, -0.75])
    omega = energies[:, None] - energies[None, :]
    weights = rc * mc.T
    off = ~np.eye(4, dtype=bool)
    signal = np.full(n, np.sum(weights[~off]).real)
    phases = np.exp(-1j * np.outer(times, omega[off]))
    signal = signal + (phases @ weights[off]).real * np.exp(-times / t2)
    if noise_sigma > 0:
        gen = rng if rng is not None else np.random.default_rng()
        signal = signal + gen.normal(0.0, noise_sigma, n)
    return FIDRecord(signal, dt, state_label, schedule_label)


def spectrum(record: FIDRecord, zero_padding: int = 8,
             subtract_mean: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude spectrum on a zero-padded grid; no window is applied.

    The unwindowed transform of the damped coherence is Lorentzian, which
    the width fit relies on. The mean is removed by default so the DC
    component does not leak into the line region.
    """
    s = record.samples - record.samples.mean() if subtract_mean else record.samples
    n_fft = zero_padding * s.size
    amp = np.abs(np.fft.rfft(s, n_fft)) * record.dt
    f = np.fft.rfftfreq(n_fft, record.dt)
    return f, amp


def spectrum_to_csv(f: np.ndarray, amp: np.ndarray) -> str:
    out = io.StringIO()
    out.write("f_Hz,amplitude\n")
    for fi, ai in zip(f, amp):
        out.write(f"{fi:.17g},{ai:.17g}\n")
    return out.getvalue()


def spectrum_from_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "f_Hz,amplitude":
        raise ValueError("expected header f_Hz,amplitude")
    rows = [ln.split(",") for ln in lines[1:]]
    return (np.array([float(r[0]) for r in rows]),
            np.array([float(r[1]) for r in rows]))


def peak_frequency(f: np.ndarray, amp: np.ndarray, f_min: float | None = None,
                   f_max: float | None = None) -> float:
    """Three-point parabolic interpolation of the largest peak in a window."""
    lo = 0 if f_min is None else int(np.searchsorted(f, f_min))
    hi = f.size if f_max is None else int(np.searchsorted(f, f_max))
    if hi - lo < 3:
        raise ValueError("window holds fewer than three bins")
    i = lo + int(np.argmax(amp[lo:hi]))
    i = min(max(i, 1), f.size - 2)
    a, b, c = amp[i - 1], amp[i], amp[i + 1]
    denom = a - 2 * b + c
    shift = 0.0 if denom == 0 else 0.5 * (a - c) / denom
    return float(f[i] + shift * (f[1] - f[0]))


def fit_lorentzian_fwhm(f: np.ndarray, amp: np.ndarray,
                        f_min: float | None = None,
                        f_max: float | None = None) -> tuple[float, float]:
    """Center and FWHM from a Lorentzian fit around the dominant peak.

    The power spectrum of a damped coherence is Lorentzian with FWHM
    1/(pi T2), so 1/power is quadratic in frequency; fitting that quadratic
    over the bins above a third of peak power gives center and width in
    closed form. (The magnitude spectrum is sqrt(3) wider at half height,
    which is why the fit runs on power.)

    Returns:
        (center frequency, full width at half maximum), both in Hz.
    """
    lo = 0 if f_min is None else int(np.searchsorted(f, f_min))
    hi = f.size if f_max is None else int(np.searchsorted(f, f_max))
    p = amp[lo:hi] ** 2
    fw = f[lo:hi]
    ipk = int(np.argmax(p))
    mask = p >= p[ipk] / 3.0
    # keep only the contiguous run around the peak
    left = ipk
    while left > 0 and mask[left - 1]:
        left -= 1
    right = ipk
    while right < p.size - 1 and mask[right + 1]:
        right += 1
    if right - left + 1 < 5:
        raise ValueError("too few bins above threshold; increase resolution")
    x = fw[left:right + 1] - fw[ipk]
    c2, c1, c0 = np.polyfit(x, 1.0 / p[left:right + 1], 2)
    x0 = -c1 / (2.0 * c2)
    hw_sq = c0 / c2 - x0 ** 2
    if c2 <= 0 or hw_sq <= 0:
        raise ValueError("fit did not produce a Lorentzian-shaped line")
    return float(fw[ipk] + x0), float(2.0 * np.sqrt(hw_sq))


SCAN_MODES = ("collective", "selective_I", "selective_S")


def amplitude_scan(sys: SpinSystem, rho0: Operator, axis: str,
                   amplitudes: np.ndarray, mode: str,
                   pulse_duration: float = 1e-4,
                   include_j_during_pulses: bool = False) -> np.ndarray:
    """J-line amplitude versus DC pulse amplitude.

    Collective mode applies one hard pulse of the given amplitude and
    duration; the spins turn by theta = gamma B tau each. Selective modes
    compile the composite at fixed segment timing (each half lasting
    tau/2), so the segment amplitude equals the grid value.
    """
    if mode not in SCAN_MODES:
        raise ValueError(f"unknown scan mode {mode!r}")
    if axis not in AXIS_VECTORS:
        raise ValueError(f"unsupported axis {axis!r}")
    amps = np.asarray(amplitudes, dtype=float)
    if amps.size == 0:
        raise ValueError("empty amplitude grid")
    out = np.empty(amps.size)
    for i, b in enumerate(amps):
        if mode == "collective":
            sched = PulseSchedule(
                f"collective_{axis}", (dc(-AXIS_VECTORS[axis], b, pulse_duration),))
        else:
            target = "I" if mode == "selective_I" else "S"
            angle = sys.gamma(target) * b * pulse_duration
            sched = compile_selective_rotation(sys, target, axis, angle,
                                               half_duration=pulse_duration / 2)
        u = schedule_propagator(sys, sched, include_j_during_pulses)
        out[i] = jline_amplitude(sys, evolve(rho0, u))
    return out


def scan_model(sys: SpinSystem, amplitudes: np.ndarray, mode: str,
               pulse_duration: float = 1e-4) -> np.ndarray:
    """Unit-amplitude model curve for each scan mode.

    collective: cos(theta_S) - cos(theta_I); selective_S: cos(theta_S) - 1;
    selective_I: 1 - cos(theta_I).
    """
    amps = np.asarray(amplitudes, dtype=float)
    th_i = sys.gamma_i * amps * pulse_duration
    th_s = sys.gamma_s * amps * pulse_duration
    if mode == "collective":
        return np.cos(th_s) - np.cos(th_i)
    if mode == "selective_S":
        return np.cos(th_s) - 1.0
    if mode == "selective_I":
        return 1.0 - np.cos(th_i)
    raise ValueError(f"unknown scan mode {mode!r}")


def fit_scan(sys: SpinSystem, amplitudes: np.ndarray, signals: np.ndarray,
             mode: str, pulse_duration: float = 1e-4) -> tuple[float, float]:
    """Least-squares amplitude of the mode's cosine model plus relative residual."""
    m = scan_model(sys, amplitudes, mode, pulse_duration)
    y = np.asarray(signals, dtype=float)
    denom = float(m @ m)
    if denom == 0:
        raise ValueError("model curve vanishes on this grid")
    a = float(m @ y) / denom
    scale = float(np.linalg.norm(y))
    if scale == 0:
        return a, 0.0
    return a, float(np.linalg.norm(y - a * m) / scale)
