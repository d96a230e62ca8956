"""Time-dependent Schrödinger propagation and occupation analysis.

The integrator is the unitary implicit-midpoint (Cayley) form of the
discretized Hamiltonian evaluated at the step midpoint:

    (1 + i dt/2 H_mid) psi_{k+1} = (1 - i dt/2 H_mid) psi_k

which conserves the norm to machine precision per step and is
unconditionally stable.  ``energy_offset`` subtracts a constant from H;
this is a pure phase gauge (occupation probabilities are unaffected) used
to centre the occupied band near zero for time-step accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .potential import NoiseSpec, perturb_schedule
from .spectral import InstantaneousSpectrum, align_spectrum, instantaneous_spectrum
from .units import SpatialGrid, TimeGrid, default_spatial_grid, default_time_grid

DEFAULT_TRACKED_LEVELS = 13      # occupations reported for n = 0..12
DEFAULT_OUTPUT_TIMES = 200
HIGH_STATE_THRESHOLD = 8         # "high states" in the 1D-model self-check


class GridMismatchError(ValueError):
    """State and spectrum are discretized on different grids."""


@dataclass(frozen=True)
class WavefunctionState:
    """Complex wavefunction samples on a spatial grid at one time."""

    amplitudes: np.ndarray
    t: float
    grid: SpatialGrid
    label: str | None = None

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(f"amplitudes shape {amps.shape} does not match grid")
        object.__setattr__(self, "amplitudes", amps)
        n = self.norm()
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"state norm {n} is not 1 within 1e-6")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing))


def state_from_spectrum(spectrum: InstantaneousSpectrum, n: int,
                        label: str | None = None) -> WavefunctionState:
    """The n-th instantaneous eigenstate as an initial wavefunction."""
    return WavefunctionState(amplitudes=spectrum.states[n].astype(complex),
                             t=spectrum.t, grid=spectrum.grid, label=label)


def occupations(psi: WavefunctionState, spectrum: InstantaneousSpectrum) -> np.ndarray:
    """P_n = |<psi_n|psi>|^2 for every state in the spectrum, by grid quadrature."""
    if psi.grid != spectrum.grid:
        raise GridMismatchError("wavefunction and spectrum grids differ")
    amplitudes = spectrum.states @ psi.amplitudes * psi.grid.spacing
    return np.abs(amplitudes) ** 2


def _propagate_block(block: np.ndarray, schedule, time_grid: TimeGrid, grid: SpatialGrid,
                     energy_offset: float, snapshot_steps: set[int]) -> tuple[dict, float]:
    """Advance a (n_points, n_states) block; returns snapshots and max norm error.

    Norm error is tracked at every step against the initial column norms.
    """
    h = grid.spacing
    x = grid.points()
    dt = time_grid.dt
    kinetic = 2.0 / h**2
    half = 0.5j * dt
    off_value = half * (-1.0 / h**2)
    n = grid.n_points

    two_w_sq = 2.0 * schedule.width**2
    right_shape = np.exp(-(x**2) / two_w_sq)

    psi = np.array(block, dtype=complex, order="F")
    norms0 = np.sqrt(np.sum(np.abs(psi) ** 2, axis=0) * h)
    max_norm_error = 0.0
    snapshots = {}
    if 0 in snapshot_steps:
        snapshots[0] = psi.copy()

    lower = np.empty(n - 1, dtype=complex)
    upper = np.empty(n - 1, dtype=complex)
    rhs = np.empty_like(psi)
    gtsv = lapack.zgtsv

    for step in range(time_grid.n_steps):
        t_mid = (step + 0.5) * dt
        p = schedule.sample(t_mid)
        v = -p.right_depth * right_shape \
            - p.left_depth * np.exp(-((x + p.separation) ** 2) / two_w_sq)
        diag = kinetic + v - energy_offset

        # rhs = (1 - i dt/2 H) psi, with H applied as a tridiagonal stencil
        np.multiply(psi, (1.0 - half * diag)[:, None], out=rhs)
        rhs[:-1] -= off_value * psi[1:]
        rhs[1:] -= off_value * psi[:-1]

        lower.fill(off_value)
        upper.fill(off_value)
        _, _, _, psi, info = gtsv(lower, 1.0 + half * diag, upper, rhs,
                                  overwrite_dl=True, overwrite_d=True,
                                  overwrite_du=True, overwrite_b=False)
        if info != 0:
            raise RuntimeError(f"tridiagonal solve failed at step {step} (info={info})")

        norms = np.sqrt(np.sum(np.abs(psi) ** 2, axis=0) * h)
        max_norm_error = max(max_norm_error, float(np.max(np.abs(norms - norms0))))
        if step + 1 in snapshot_steps:
            snapshots[step + 1] = psi.copy()

    return snapshots, max_norm_error


def _snapshot_steps(n_steps: int, n_times: int) -> np.ndarray:
    """Step indices of evenly spaced output times, always including 0 and n_steps."""
    steps = np.unique(np.round(np.linspace(0, n_steps, min(n_times, n_steps + 1))).astype(int))
    return steps


def propagate(psi0: WavefunctionState, schedule, time_grid: TimeGrid, *,
              n_snapshots: int = DEFAULT_OUTPUT_TIMES,
              energy_offset: float = 0.0) -> list[WavefunctionState]:
    """Integrate the time-dependent Schrödinger equation for one state.

    Returns snapshots at ``n_snapshots`` evenly spaced times (snapped to
    step boundaries), beginning with the initial state and ending at the
    final time.
    """
    if schedule.duration < time_grid.t_final - 1e-12:
        raise ValueError("schedule does not cover the requested time span")
    steps = _snapshot_steps(time_grid.n_steps, n_snapshots)
    block = psi0.amplitudes[:, None]
    snapshots, _ = _propagate_block(block, schedule, time_grid, psi0.grid,
                                    energy_offset, set(int(s) for s in steps))
    return [WavefunctionState(amplitudes=snapshots[int(s)][:, 0], t=s * time_grid.dt,
                              grid=psi0.grid, label=psi0.label)
            for s in steps]


@dataclass(frozen=True)
class TransportReport:
    """Occupation history and fidelities of one transport run.

    ``occupations_moving`` / ``occupations_register`` hold P_n(t) for the
    tracked levels (rows = output times).  ``high_state_occupation`` is
    the total probability outside the lowest eight levels, computed as the
    complement of their sum so it covers the full grid basis.
    """

    times: np.ndarray
    energies: np.ndarray
    occupations_moving: np.ndarray
    occupations_register: np.ndarray
    fidelity_moving: float
    fidelity_register: float
    max_high_state_occupation: float
    max_norm_error: float
    min_tracking_overlap: float

    @property
    def n_levels(self) -> int:
        return self.occupations_moving.shape[1]


def run_transport(schedule, time_grid: TimeGrid | None = None,
                  noise: NoiseSpec | None = None, *,
                  grid: SpatialGrid | None = None,
                  n_levels: int = DEFAULT_TRACKED_LEVELS,
                  n_output: int = DEFAULT_OUTPUT_TIMES) -> TransportReport:
    """Propagate the moving and register atoms through a transport pulse.

    The initial conditions are the second excited and the ground
    instantaneous eigenstate at t=0.  With ``noise`` given, the dynamics
    run under the perturbed pulses while occupations are still measured
    against the nominal schedule's instantaneous eigenstates, i.e. the
    intended transport defines the goal states.
    """
    if grid is None:
        grid = default_spatial_grid()
    if time_grid is None:
        time_grid = default_time_grid(schedule.duration)
    dynamics_schedule = schedule if noise is None else perturb_schedule(schedule, noise)

    spectrum0 = instantaneous_spectrum(schedule.sample(0.0), grid, n_levels, t=0.0)
    energy_offset = float(np.mean(spectrum0.energies))
    psi_m = spectrum0.states[2].astype(complex)
    psi_r = spectrum0.states[0].astype(complex)
    block = np.column_stack([psi_m, psi_r])

    steps = _snapshot_steps(time_grid.n_steps, n_output)
    snapshots, max_norm_error = _propagate_block(
        block, dynamics_schedule, time_grid, grid, energy_offset,
        set(int(s) for s in steps))

    times = steps * time_grid.dt
    h = grid.spacing
    n_out = len(steps)
    energies = np.empty((n_out, n_levels))
    occ_m = np.empty((n_out, n_levels))
    occ_r = np.empty((n_out, n_levels))
    high = np.empty(n_out)
    min_tracking_overlap = 1.0

    spectrum = spectrum0
    for j, step in enumerate(steps):
        t = float(times[j])
        if j > 0:
            current = instantaneous_spectrum(schedule.sample(t), grid, n_levels, t=t)
            # Occupations are defined against the energy-ordered eigenstates
            # even through genuine level crossings, so alignment is used
            # for the sign gauge and diagnostics only (threshold disabled).
            spectrum, info = align_spectrum(spectrum, current, min_overlap=0.0)
            min_tracking_overlap = min(min_tracking_overlap, info.min_overlap)
        psi = snapshots[int(step)]
        projections = spectrum.states @ psi * h
        probabilities = np.abs(projections) ** 2
        occ_m[j] = probabilities[:, 0]
        occ_r[j] = probabilities[:, 1]
        energies[j] = spectrum.energies
        norm_sq = float(np.sum(np.abs(psi[:, 0]) ** 2) * h)
        high[j] = norm_sq - float(np.sum(probabilities[:HIGH_STATE_THRESHOLD, 0]))

    return TransportReport(
        times=times,
        energies=energies,
        occupations_moving=occ_m,
        occupations_register=occ_r,
        fidelity_moving=float(occ_m[-1, 2]),
        fidelity_register=float(occ_r[-1, 0]),
        max_high_state_occupation=float(np.max(high)),
        max_norm_error=max_norm_error,
        min_tracking_overlap=min_tracking_overlap,
    )
