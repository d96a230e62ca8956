"""Magnetic-field-tunable Feshbach resonance coupled to trap levels.

The two-atom relative motion is modelled by one bound (resonance) state
whose energy moves linearly with the magnetic field, coupled to the
levels of the confining trap.  Basis ordering: index 0 is the resonance
state, index 1+v is trap level v.  The v=0 trap level defines the zero
of energy, so the uncoupled qubit channels accumulate no phase and the
phase of the returned v=0 amplitude is directly the two-particle phase
of the gate truth table.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .units import BOHR_RADIUS_M, HBAR, RB87_MASS_KG


@dataclass(frozen=True)
class ResonanceModel:
    """Feshbach resonance parameters and the truncated trap-level basis.

    Attributes
    ----------
    resonant_field : float
        Field B_0 at which the bound state crosses threshold (gauss).
    width : float
        Resonance width Delta_n (gauss).
    slope : float
        Linear slope s_n of the resonance energy (J/gauss).
    background_length : float
        Background scattering length A_bg (m).
    trap_frequency : float
        Relative-motion trap frequency nu (rad/s).
    n_levels : int
        Number of trap levels kept in the basis.
    mass : float
        Mass entering the dimensionless background length (kg).
    frequency_ratio : float
        Transverse/longitudinal level-spacing ratio; recorded for
        configuration only, not used by the 1D model.
    """

    resonant_field: float
    width: float
    slope: float
    background_length: float
    trap_frequency: float
    n_levels: int = 20
    mass: float = RB87_MASS_KG
    frequency_ratio: float = 4.0

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.trap_frequency <= 0:
            raise ValueError(f"trap_frequency must be positive, got {self.trap_frequency}")
        if self.n_levels < 1:
            raise ValueError(f"n_levels must be >= 1, got {self.n_levels}")
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        # delta_n = 0 (zero slope) is allowed: it is the exactly decoupled limit.
        for name in ("dimensionless_background_length", "dimensionless_width"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.background_length <= 0:
            raise ValueError("background_length must be positive")

    @property
    def dimensionless_background_length(self) -> float:
        """a_bg = A_bg * sqrt(m*nu/hbar)."""
        return self.background_length * np.sqrt(self.mass * self.trap_frequency / HBAR)

    @property
    def dimensionless_width(self) -> float:
        """delta_n = Delta_n * s_n / (hbar*nu)."""
        return self.width * self.slope / (HBAR * self.trap_frequency)

    @property
    def dimension(self) -> int:
        return self.n_levels + 1


def default_resonance_model(n_levels: int = 20) -> ResonanceModel:
    """The shipped gate model: the 685 G / 16 mG resonance in a 25 kHz trap.

    The slope is set so that the resonance energy moves by 0.8 trap quanta
    over 50 resonance widths of field; ramps of that scale then stay inside
    the gap below the first excited trap level, which keeps the optimal
    control landscape to a single avoided crossing.
    """
    nu = 2 * np.pi * 25e3
    width = 16e-3
    slope = 0.016 * HBAR * nu / width
    return ResonanceModel(
        resonant_field=685.0,
        width=width,
        slope=slope,
        background_length=100.0 * BOHR_RADIUS_M,
        trap_frequency=nu,
        n_levels=n_levels,
    )


def scattering_length(B: float, model: ResonanceModel) -> float:
    """Field-dependent scattering length A_bg*(1 - Delta_n/(B - B_0)) (m)."""
    detuning = B - model.resonant_field
    if detuning == 0.0:
        raise ZeroDivisionError("scattering length diverges at B = B_0")
    return model.background_length * (1.0 - model.width / detuning)


def resonance_energy(B: float, model: ResonanceModel) -> float:
    """Resonance energy s_n*(B - B_0) (J); negative below threshold for s_n > 0."""
    return model.slope * (B - model.resonant_field)


def coupling(v: int, model: ResonanceModel) -> float:
    """Coupling of trap level v to the resonance state (J)."""
    if v < 0:
        raise ValueError(f"level index must be non-negative, got {v}")
    product = model.dimensionless_background_length * model.dimensionless_width
    if product < 0:
        raise ValueError("a_bg * delta_n is negative; unphysical configuration")
    hnu = HBAR * model.trap_frequency
    return 2.0 * hnu * np.sqrt(np.sqrt(4.0 * v + 3.0) * product / np.pi)


def build_hamiltonian(B: float, model: ResonanceModel) -> np.ndarray:
    """Effective Hamiltonian at field B (J), Hermitian by construction.

    Diagonal: resonance energy, then v*hbar*nu for trap levels; the only
    off-diagonal elements couple each trap level to the resonance.
    """
    dim = model.dimension
    hnu = HBAR * model.trap_frequency
    H = np.zeros((dim, dim))
    H[0, 0] = resonance_energy(B, model)
    levels = np.arange(model.n_levels)
    H[levels + 1, levels + 1] = levels * hnu
    couplings = np.array([coupling(v, model) for v in levels])
    H[0, 1:] = couplings
    H[1:, 0] = couplings
    return H


@dataclass(frozen=True)
class ResonanceState:
    """Normalized amplitudes over (resonance, v=0, ..., v=n_levels-1)."""

    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm {norm} is not 1 within 1e-8")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def ground_amplitude(self) -> complex:
        """Amplitude on the v=0 trap level."""
        return complex(self.amplitudes[1])


def trap_ground_state(model: ResonanceModel) -> ResonanceState:
    """The v=0 trap level, the gate's initial and goal state."""
    amps = np.zeros(model.dimension, dtype=complex)
    amps[1] = 1.0
    return ResonanceState(amplitudes=amps)


@dataclass(frozen=True)
class FieldRamp:
    """Piecewise-constant magnetic-field ramp: (duration_s, B_gauss) segments."""

    durations: np.ndarray
    fields: np.ndarray

    def __post_init__(self) -> None:
        durations = np.asarray(self.durations, dtype=float)
        fields = np.asarray(self.fields, dtype=float)
        if durations.shape != fields.shape or durations.ndim != 1 or durations.size == 0:
            raise ValueError("durations and fields must be equal-length 1D arrays")
        if np.any(durations <= 0):
            raise ValueError("segment durations must be positive")
        durations.setflags(write=False)
        fields.setflags(write=False)
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "fields", fields)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.durations))


@dataclass(frozen=True)
class GatePhaseResult:
    """Outcome of a field ramp acting on the interacting channel."""

    phase: float
    ground_return: float
    infidelity: float


def _segment_eigensystem(B: float, model: ResonanceModel) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (units of hbar*nu) and eigenvectors of H(B)."""
    try:
        return eigh(build_hamiltonian(B, model) / (HBAR * model.trap_frequency))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"segment eigendecomposition failed at B={B}") from exc


def _apply_segment(psi: np.ndarray, duration: float, B: float,
                   model: ResonanceModel) -> np.ndarray:
    w, Q = _segment_eigensystem(B, model)
    tau = model.trap_frequency * duration
    return Q @ (np.exp(-1j * w * tau) * (Q.conj().T @ psi))


def _phase_result(psi: np.ndarray) -> GatePhaseResult:
    amplitude = complex(psi[1])
    ground_return = abs(amplitude) ** 2
    return GatePhaseResult(phase=float(np.angle(amplitude)),
                           ground_return=ground_return,
                           infidelity=1.0 - ground_return)


def evolve_gate(ramp: FieldRamp, model: ResonanceModel,
                psi0: ResonanceState | None = None) -> tuple[GatePhaseResult, ResonanceState]:
    """Evolve a state through the ramp by exact per-segment matrix exponentials.

    The accumulated two-particle phase is the argument of the final v=0
    amplitude; the uncoupled channel's reference phase is zero because the
    v=0 trap energy is the zero of energy.
    """
    if psi0 is None:
        psi0 = trap_ground_state(model)
    psi = np.array(psi0.amplitudes, dtype=complex)
    if psi.shape != (model.dimension,):
        raise ValueError("initial state dimension does not match the model basis")
    for duration, B in zip(ramp.durations, ramp.fields):
        psi = _apply_segment(psi, float(duration), float(B), model)
    final = ResonanceState(amplitudes=psi, t=psi0.t + ramp.total_time)
    return _phase_result(psi), final


def sample_gate_trajectory(ramp: FieldRamp, model: ResonanceModel,
                           psi0: ResonanceState | None = None,
                           n_times: int = 257) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, |<v0|psi>|^2, unwrapped phase) sampled along the ramp.

    Sample times are spread over the total duration and include every
    segment boundary; evolution between samples is exact.
    """
    if psi0 is None:
        psi0 = trap_ground_state(model)
    boundaries = np.concatenate([[0.0], np.cumsum(ramp.durations)])
    times = np.unique(np.concatenate([
        np.linspace(0.0, ramp.total_time, max(2, n_times)), boundaries]))
    psi = np.array(psi0.amplitudes, dtype=complex)
    ground = np.empty(len(times))
    phase = np.empty(len(times))
    segment = 0
    t_now = 0.0
    for j, t in enumerate(times):
        while segment < len(ramp.durations) and t > boundaries[segment + 1] + 1e-15:
            if boundaries[segment + 1] > t_now:
                psi = _apply_segment(psi, boundaries[segment + 1] - t_now,
                                     float(ramp.fields[segment]), model)
                t_now = float(boundaries[segment + 1])
            segment += 1
        if t > t_now and segment < len(ramp.durations):
            psi = _apply_segment(psi, t - t_now, float(ramp.fields[segment]), model)
            t_now = float(t)
        amplitude = complex(psi[1])
        ground[j] = abs(amplitude) ** 2
        phase[j] = np.angle(amplitude)
    return times, ground, np.unwrap(phase)


def apply_truth_table(phi: float, state: np.ndarray) -> np.ndarray:
    """Apply the gate truth table to a two-qubit amplitude vector.

    Basis order (|00>, |01>, |10>, |11>); only |00> picks up exp(i*phi).
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (4,):
        raise ValueError(f"expected a 4-vector of amplitudes, got shape {state.shape}")
    out = state.copy()
    out[0] *= np.exp(1j * phi)
    return out
