"""Request and response schemas shared by the HTTP service and the CLI.

Every experiment is described by one JSON document with a "subcommand"
discriminator, so a config file, a service request body, and a CLI
invocation all validate against the same models. Responses carry the
summary fields plus a name -> content map of output files; the CLI
writes those files verbatim, which keeps outputs byte-identical for a
given (config, seed) no matter which entry point ran the experiment.
"""

from __future__ import annotations

import dataclasses
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, model_validator

from .benchmarking import DEFAULT_LENGTHS
from .errors import (SIGMA_B_DEFAULT, T1_SINGLET_DEFAULT, T2_DEFAULT,
                     ErrorModel)
from .spincore import J_DEFAULT_HZ, SpinSystem
from .stateprep import BP_DEFAULT, TEMPERATURE_DEFAULT, PolarizationConfig


class SystemSettings(BaseModel):
    j_hz: float = Field(J_DEFAULT_HZ, gt=0)
    idealized: bool = False

    def build(self) -> SpinSystem:
        base = SpinSystem.idealized() if self.idealized else SpinSystem()
        return dataclasses.replace(base, j=self.j_hz)


class PolarizationSettings(BaseModel):
    bp_t: float = Field(BP_DEFAULT, gt=0)
    temperature_k: float = Field(TEMPERATURE_DEFAULT, gt=0)

    def build(self, sys: SpinSystem) -> PolarizationConfig:
        return PolarizationConfig(bp=self.bp_t, temperature=self.temperature_k,
                                  system=sys)


class ErrorSettings(BaseModel):
    """Mirror of the simulation error model; defaults are the measured values."""

    amplitude_miscalibration: float = 0.0
    tilt: float = 0.0
    tilt_azimuth: float = 0.0
    inhomogeneity: float = Field(SIGMA_B_DEFAULT, ge=0)
    ensemble_size: int = Field(8, ge=1)
    t2: float = Field(T2_DEFAULT, gt=0)
    t1_singlet: float = Field(T1_SINGLET_DEFAULT, gt=0)
    unitary_enabled: bool = True
    incoherent_enabled: bool = True
    decoherent_enabled: bool = True
    singlet_enabled: bool = False
    monte_carlo: bool = False
    seed: int | None = None
    strict_decoherence: bool = False

    def build(self) -> ErrorModel:
        return ErrorModel(**self.model_dump())


StateName = Literal["sudden", "adiabatic"]
GateRealization = Literal["ideal", "compiled", "errored"]


class FidRequest(BaseModel):
    subcommand: Literal["fid"] = "fid"
    state: StateName = "adiabatic"
    # the adiabatic state is stationary; a pulse creates the J-line
    # coherence. "auto" picks pi_S for adiabatic, none for sudden.
    pulse: Literal["auto", "none", "pi_S", "pi_I"] = "auto"
    duration_s: float = Field(60.0, gt=0)
    dt_s: float = Field(1e-3, gt=0)
    t2_s: float = Field(T2_DEFAULT, gt=0)
    noise_sigma: float = Field(0.0, ge=0)
    zero_padding: int = Field(8, ge=1)
    system: SystemSettings = SystemSettings()
    polarization: PolarizationSettings = PolarizationSettings()
    seed: int | None = None


class ScanRequest(BaseModel):
    subcommand: Literal["scan"] = "scan"
    mode: Literal["collective", "selective_I", "selective_S"] = "collective"
    axis: Literal["x", "y", "z"] = "x"
    state: StateName = "adiabatic"
    b_min_t: float = Field(0.0, ge=0)
    b_max_t: float = Field(1e-3, gt=0)
    points: int = Field(201, ge=2)
    pulse_duration_s: float = Field(1e-4, gt=0)
    include_j_during_pulses: bool = False
    system: SystemSettings = SystemSettings()
    polarization: PolarizationSettings = PolarizationSettings()
    seed: int | None = None

    @model_validator(mode="after")
    def _grid_ordered(self) -> "ScanRequest":
        if self.b_max_t <= self.b_min_t:
            raise ValueError("b_max_t must exceed b_min_t")
        return self


class RBRequest(BaseModel):
    subcommand: Literal["rb"] = "rb"
    lengths: list[int] | None = None
    sequences_per_length: int = Field(32, ge=1)
    realization: Literal["compiled", "abstract"] = "compiled"
    depolarizing: float = Field(0.0, ge=0, lt=1)
    error: ErrorSettings | None = None
    inverse_variance: bool = False
    pi_duration_s: float = Field(50e-6, gt=0)
    include_j_during_pulses: bool = True
    system: SystemSettings = SystemSettings()
    polarization: PolarizationSettings = PolarizationSettings()
    seed: int | None = None

    @model_validator(mode="after")
    def _lengths_valid(self) -> "RBRequest":
        if self.lengths is not None:
            if len(self.lengths) < 3:
                raise ValueError("need at least three sequence lengths")
            if any(m < 1 for m in self.lengths):
                raise ValueError("sequence lengths must be positive")
        return self

    def effective_lengths(self) -> tuple[int, ...]:
        return tuple(self.lengths) if self.lengths else DEFAULT_LENGTHS


class TomoRequest(BaseModel):
    subcommand: Literal["tomo"] = "tomo"
    state: StateName = "sudden"
    apply_cnot: bool = False
    gates: GateRealization = "ideal"
    error: ErrorSettings | None = None
    pi_duration_s: float = Field(50e-6, gt=0)
    include_j_during_pulses: bool = False
    system: SystemSettings = SystemSettings()
    polarization: PolarizationSettings = PolarizationSettings()
    seed: int | None = None

    @model_validator(mode="after")
    def _errored_needs_model(self) -> "TomoRequest":
        if self.gates == "errored" and self.error is None:
            object.__setattr__(self, "error", ErrorSettings())
        return self


class CnotRequest(BaseModel):
    subcommand: Literal["cnot"] = "cnot"
    gates: GateRealization = "compiled"
    error: ErrorSettings | None = None
    noise_sigma: float = Field(0.0, ge=0)
    restarts: int = Field(20, ge=1)
    entrywise_l1: bool = False
    weight_sudden: float = Field(1.0, gt=0)
    weight_adiabatic: float = Field(1.0, gt=0)
    pi_duration_s: float = Field(50e-6, gt=0)
    include_j_during_pulses: bool = True
    system: SystemSettings = SystemSettings()
    polarization: PolarizationSettings = PolarizationSettings()
    seed: int | None = None

    @model_validator(mode="after")
    def _errored_needs_model(self) -> "CnotRequest":
        if self.gates == "errored" and self.error is None:
            object.__setattr__(self, "error", ErrorSettings())
        return self


ExperimentConfig = Annotated[
    Union[FidRequest, ScanRequest, RBRequest, TomoRequest, CnotRequest],
    Field(discriminator="subcommand"),
]


class RunRequest(BaseModel):
    config: ExperimentConfig
    seed: int = 0
    threads: int = Field(1, ge=1)


class FidResponse(BaseModel):
    subcommand: Literal["fid"] = "fid"
    seed: int
    peak_frequency_hz: float
    fwhm_hz: float | None
    j_hz: float
    files: dict[str, str]


class ScanResponse(BaseModel):
    subcommand: Literal["scan"] = "scan"
    seed: int
    mode: str
    fitted_amplitude: float
    relative_residual: float
    files: dict[str, str]


class RBResponse(BaseModel):
    subcommand: Literal["rb"] = "rb"
    seed: int
    converged: bool
    eps_g: float | None = None
    d_if: float | None = None
    stderr_eps_g: float | None = None
    stderr_d_if: float | None = None
    average_fidelity: float | None = None
    a: float | None = None
    p: float | None = None
    fit_error: str | None = None
    files: dict[str, str]


class TomoResponse(BaseModel):
    subcommand: Literal["tomo"] = "tomo"
    seed: int
    coefficients: dict[str, float]
    fidelity_vs_reference: float
    files: dict[str, str]


class CnotResponse(BaseModel):
    subcommand: Literal["cnot"] = "cnot"
    seed: int
    converged: bool
    objective: float
    fidelity_paper_convention: float
    fidelity_phase_invariant: float
    distance_to_ideal: float
    restarts: int
    files: dict[str, str]


ExperimentResponse = Annotated[
    Union[FidResponse, ScanResponse, RBResponse, TomoResponse, CnotResponse],
    Field(discriminator="subcommand"),
]
