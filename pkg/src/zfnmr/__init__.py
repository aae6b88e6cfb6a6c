"""Universal control of a two-spin heteronuclear system at zero field.

Simulates composite DC-pulse control of a J-coupled 1H-13C pair: the
pulse compiler (selective rotations, zz interaction, CNOT), thermal
state preparation and J-line detection, state tomography, randomized
benchmarking of the spin-S Clifford group, realistic error models, and
closest-unitary gate reconstruction. A FastAPI service and a CLI expose
the standard experiments; the core modules are importable directly.
"""

__version__ = "0.1.0"

from .benchmarking import (RBDataset, RBFit, clifford_group, fit_rb_decay,
                           generate_rb_sequence, run_rb)
from .errors import ErrorModel, ensemble_evolve, ensemble_pulse_infidelity
from .pulses import (PulseSchedule, PulseSegment, cnot_unitary,
                     compile_cnot, compile_selective_rotation, compile_uzz,
                     rotation_unitary, schedule_propagator)
from .reconstruct import (GateFidelity, ReconstructionResult, TomographyPair,
                          gate_fidelity, pair_from_states, reconstruct_unitary)
from .spincore import (Operator, SpinSystem, evolve,
                       phase_invariant_distance, propagator,
                       zero_field_hamiltonian)
from .stateprep import (PolarizationConfig, adiabatic_state, amplitude_scan,
                        fit_scan, jline_amplitude, simulate_fid, spectrum,
                        sudden_state)
from .tomography import (PauliVector, operator_to_pauli, state_fidelity,
                         state_tomography, temporal_average_Iz,
                         temporal_average_Sz)

__all__ = [
    "__version__",
    "ErrorModel", "GateFidelity", "Operator", "PauliVector",
    "PolarizationConfig", "PulseSchedule", "PulseSegment", "RBDataset",
    "RBFit", "ReconstructionResult", "SpinSystem", "TomographyPair",
    "adiabatic_state", "amplitude_scan", "clifford_group", "cnot_unitary",
    "compile_cnot", "compile_selective_rotation", "compile_uzz",
    "ensemble_evolve", "ensemble_pulse_infidelity", "evolve", "fit_rb_decay",
    "fit_scan", "gate_fidelity", "generate_rb_sequence", "jline_amplitude",
    "operator_to_pauli", "pair_from_states", "phase_invariant_distance",
    "propagator", "reconstruct_unitary", "rotation_unitary", "run_rb",
    "schedule_propagator", "simulate_fid", "spectrum", "state_fidelity",
    "state_tomography", "sudden_state", "temporal_average_Iz",
    "temporal_average_Sz", "zero_field_hamiltonian",
]
