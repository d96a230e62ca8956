"""Instantaneous eigenvalues and eigenfunctions of the frozen Hamiltonian.

The Hamiltonian H = -d^2/dx^2 + V(x) (kinetic prefactor 1 with x in
oscillator lengths and E in units of eps) is discretized with
second-order central differences and hard walls just outside the grid
ends, giving a symmetric tridiagonal eigenproblem.  Eigenvector signs
are a gauge; they are seeded at t=0 by the value at the potential
minimum and then propagated by overlap continuity in time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .potential import DoubleWellParams, evaluate_potential
from .units import SpatialGrid


class TrackingError(RuntimeError):
    """Continuity tracking between consecutive spectra broke down."""


@dataclass(frozen=True)
class InstantaneousSpectrum:
    """Lowest eigenpairs of the frozen Hamiltonian at one time.

    ``states`` has one row per eigenstate, normalized so that
    sum(|psi_i|^2) * spacing = 1 on the grid.
    """

    energies: np.ndarray
    states: np.ndarray
    t: float
    grid: SpatialGrid

    @property
    def n_states(self) -> int:
        return len(self.energies)


def hamiltonian_bands(params: DoubleWellParams, grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal) of the discretized H on the grid."""
    h = grid.spacing
    v = evaluate_potential(params, grid.points())
    diagonal = 2.0 / h**2 + v
    off_diagonal = np.full(grid.n_points - 1, -1.0 / h**2)
    return diagonal, off_diagonal


def instantaneous_spectrum(params: DoubleWellParams, grid: SpatialGrid, k: int,
                           t: float = 0.0) -> InstantaneousSpectrum:
    """Lowest k eigenpairs of the frozen Hamiltonian.

    Signs are fixed so each eigenfunction is positive at the grid point
    nearest the global potential minimum (falling back to the point of
    maximum amplitude for states with a node there).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > grid.n_points // 4:
        raise ValueError(f"k={k} too large for {grid.n_points} grid points")
    diagonal, off_diagonal = hamiltonian_bands(params, grid)
    energies, vectors = eigh_tridiagonal(diagonal, off_diagonal,
                                         select="i", select_range=(0, k - 1))
    # LAPACK returns unit 2-norm columns; rescale to unit grid quadrature.
    states = vectors.T / np.sqrt(grid.spacing)

    anchor = int(np.argmin(diagonal - 2.0 / grid.spacing**2))
    scale = np.max(np.abs(states), axis=1)
    for i in range(k):
        value = states[i, anchor]
        if abs(value) < 1e-12 * scale[i]:
            value = states[i, int(np.argmax(np.abs(states[i])))]
        if value < 0:
            states[i] = -states[i]
    states.setflags(write=False)
    energies.setflags(write=False)
    return InstantaneousSpectrum(energies=energies, states=states, t=t, grid=grid)


class AlignmentInfo(NamedTuple):
    overlaps: np.ndarray
    min_overlap: float
    min_gap: float


def align_spectrum(previous: InstantaneousSpectrum, current: InstantaneousSpectrum,
                   min_overlap: float = 0.5) -> tuple[InstantaneousSpectrum, AlignmentInfo]:
    """Fix eigenvector signs of *current* by overlap with *previous*.

    Returns the aligned spectrum together with the per-state overlaps and
    the smallest adjacent energy gap of *current*.  Raises
    :class:`TrackingError` when any overlap magnitude drops below
    ``min_overlap``, which signals a level crossing between the two times.
    """
    if previous.grid != current.grid:
        raise ValueError("spectra live on different grids")
    if previous.n_states != current.n_states:
        raise ValueError("spectra track different numbers of states")
    h = current.grid.spacing
    overlaps = np.einsum("ij,ij->i", previous.states, current.states) * h
    worst = int(np.argmin(np.abs(overlaps)))
    if abs(overlaps[worst]) < min_overlap:
        raise TrackingError(
            f"state {worst} overlap {overlaps[worst]:.3f} below {min_overlap} "
            f"between t={previous.t} and t={current.t}; level tracking lost"
        )
    states = current.states.copy()
    states[overlaps < 0] *= -1.0
    states.setflags(write=False)
    gaps = np.diff(current.energies)
    info = AlignmentInfo(overlaps=np.abs(overlaps),
                         min_overlap=float(np.min(np.abs(overlaps))),
                         min_gap=float(np.min(gaps)) if gaps.size else np.inf)
    aligned = InstantaneousSpectrum(energies=current.energies, states=states,
                                    t=current.t, grid=current.grid)
    return aligned, info
