"""Single-atom transport in a time-dependent double well and a
Feshbach-resonance controlled-phase gate, with optimal-control pulse shaping."""

from .units import (
    HBAR, ATOMIC_MASS_KG, BOHR_RADIUS_M, RB87_MASS_KG,
    UnitSystem, SpatialGrid, TimeGrid,
    make_unit_system, to_si, from_si,
    default_spatial_grid, default_time_grid,
)
from .potential import (
    DoubleWellParams, PulseSchedule, NoiseSpec,
    evaluate_potential, sample_pulse, perturb_schedule, reverse_schedule,
    default_transport_schedule, DEFAULT_WELL_WIDTH, DEFAULT_TRANSPORT_KNOTS,
)
from .spectral import (
    InstantaneousSpectrum, AlignmentInfo, TrackingError,
    instantaneous_spectrum, align_spectrum, hamiltonian_bands,
)
from .propagate import (
    WavefunctionState, TransportReport, GridMismatchError,
    propagate, occupations, run_transport, state_from_spectrum,
)
from .feshbach import (
    ResonanceModel, ResonanceState, GatePhaseResult, FieldRamp,
    scattering_length, resonance_energy, coupling, build_hamiltonian,
    evolve_gate, sample_gate_trajectory, apply_truth_table,
    default_resonance_model, trap_ground_state,
)
from .optimize import (
    ControlProblem, OptimizationTrace, RefinementResult,
    cost, gradient, optimize, default_control_problem, initial_ramp_fields,
    ramp_from_fields, refine_transport_schedule,
)

__version__ = "0.1.0"
