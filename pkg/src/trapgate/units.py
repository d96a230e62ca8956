"""Unit system and discretization grids.

The simulations run in harmonic-oscillator units: lengths in units of the
oscillator length a = sqrt(hbar / (m * omega)), energies in units of
eps = hbar^2 / (2 m a^2) and times in units of hbar / eps.  A
:class:`UnitSystem` pins these scales to SI values so results can be
quoted in laboratory units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# CODATA-2018 values, full published precision.
HBAR = 1.054571817e-34          # J s
ATOMIC_MASS_KG = 1.66053906660e-27
BOHR_RADIUS_M = 5.29177210903e-11
RB87_MASS_KG = 86.909180531 * ATOMIC_MASS_KG

_CONVERSION_KINDS = ("length", "energy", "time")


@dataclass(frozen=True)
class UnitSystem:
    """Dimensionless unit scales anchored to a reference trap.

    Attributes
    ----------
    mass : float
        Atomic mass (kg).
    omega : float
        Reference angular trap frequency (rad/s).
    a : float
        Oscillator length sqrt(hbar/(m*omega)) (m).
    eps : float
        Energy unit hbar^2/(2*m*a^2) (J); algebraically equal to hbar*omega/2.
    time_unit : float
        hbar/eps (s).
    """

    mass: float
    omega: float
    a: float
    eps: float
    time_unit: float


def make_unit_system(mass: float, omega: float, *, hbar: float = HBAR) -> UnitSystem:
    """Build a :class:`UnitSystem` from an atomic mass and trap frequency.

    Passing ``hbar=1`` gives the natural-unit system (a = 1, eps = 1/2
    for mass = omega = 1); the default uses the SI value.
    """
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    a = np.sqrt(hbar / (mass * omega))
    eps = hbar**2 / (2.0 * mass * a**2)
    return UnitSystem(mass=mass, omega=omega, a=a, eps=eps, time_unit=hbar / eps)


def _scale_for(kind: str, units: UnitSystem) -> float:
    if kind == "length":
        return units.a
    if kind == "energy":
        return units.eps
    if kind == "time":
        return units.time_unit
    raise ValueError(f"unknown conversion kind {kind!r}; expected one of {_CONVERSION_KINDS}")


def to_si(value: float, kind: str, units: UnitSystem) -> float:
    """Convert a dimensionless value to SI by the scale for *kind*."""
    return value * _scale_for(kind, units)


def from_si(value: float, kind: str, units: UnitSystem) -> float:
    """Convert an SI value to dimensionless units (inverse of :func:`to_si`)."""
    return value / _scale_for(kind, units)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform position grid, in units of the oscillator length."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {self.n_points}")
        if not self.x_min < self.x_max:
            raise ValueError(f"require x_min < x_max, got [{self.x_min}, {self.x_max}]")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        """Grid coordinates; a fresh array, safe for the caller to mutate."""
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time stepping over [0, t_final], in units of hbar/eps."""

    t_final: float
    n_steps: int

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps


DEFAULT_X_MIN = -16.0
DEFAULT_X_MAX = 16.0
DEFAULT_N_POINTS = 1024
DEFAULT_DT = 0.01


def default_spatial_grid() -> SpatialGrid:
    """Grid covering the full well excursion plus several oscillator lengths of tail."""
    return SpatialGrid(DEFAULT_X_MIN, DEFAULT_X_MAX, DEFAULT_N_POINTS)


def default_time_grid(t_final: float) -> TimeGrid:
    """Time grid at the default step; n_steps rounds t_final/dt to an integer."""
    return TimeGrid(t_final=t_final, n_steps=max(1, round(t_final / DEFAULT_DT)))
