"""Time-dependent Gaussian double-well potential and pulse schedules.

The potential is a sum of two Gaussian dips: a fixed well at the origin
(depth ``right_depth``) and a second well displaced to negative x by
``separation`` (depth ``left_depth``).  Pulse schedules interpolate the
control triple (right depth, left depth, separation) through knots with a
monotone-preserving cubic, and can be perturbed by a deterministic
sinusoidal drift or reversed in time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass(frozen=True)
class DoubleWellParams:
    """Instantaneous double-well configuration.

    Lengths are in units of the oscillator length, energies in units of
    the energy unit eps.  Both depths are magnitudes of downward Gaussian
    dips; the left well is centred at ``x = -separation``.
    """

    width: float
    right_depth: float
    left_depth: float
    separation: float

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.right_depth < 0 or self.left_depth < 0:
            raise ValueError("well depths must be non-negative")
        if self.separation < 0:
            raise ValueError(f"separation must be non-negative, got {self.separation}")


def evaluate_potential(params: DoubleWellParams, x: np.ndarray | float) -> np.ndarray | float:
    """Potential energy at position(s) x.

    Returns -A*exp(-x^2/2w^2) - B*exp(-(x+d)^2/2w^2) with A, B, d, w taken
    from ``params``; vectorizes over x.
    """
    two_w_sq = 2.0 * params.width**2
    x = np.asarray(x, dtype=float)
    v = -params.right_depth * np.exp(-(x**2) / two_w_sq)
    v -= params.left_depth * np.exp(-((x + params.separation) ** 2) / two_w_sq)
    return v if v.ndim else float(v)


@dataclass(frozen=True)
class PulseSchedule:
    """Smooth pulse triple (A(t), B(t), d(t)) through time-ordered knots.

    Interpolation is shape-preserving piecewise cubic (C1), which cannot
    overshoot below the knot values, so non-negative knots guarantee
    non-negative pulses everywhere.
    """

    times: np.ndarray
    right_depth: np.ndarray
    left_depth: np.ndarray
    separation: np.ndarray
    width: float
    _splines: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.diff(times) > 0):
            raise ValueError("knot times must be strictly increasing")
        if times[0] != 0.0:
            raise ValueError(f"first knot must be at t=0, got {times[0]}")
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        channels = {}
        for name in ("right_depth", "left_depth", "separation"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.shape != times.shape:
                raise ValueError(f"{name} knots must match times, got shape {values.shape}")
            if np.any(values < 0):
                raise ValueError(f"{name} knots must be non-negative")
            channels[name] = values
            object.__setattr__(self, name, values)
        object.__setattr__(self, "times", times)
        object.__setattr__(
            self,
            "_splines",
            tuple(PchipInterpolator(times, channels[name]) for name in
                  ("right_depth", "left_depth", "separation")),
        )

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def sample(self, t: float) -> DoubleWellParams:
        """Instantaneous well parameters at time t in [0, duration]."""
        if t < 0.0 or t > self.duration:
            raise ValueError(f"t={t} outside schedule range [0, {self.duration}]")
        if t == self.duration:
            # The spline already reproduces every other knot exactly (the
            # constant coefficient of each local cubic), but evaluating the
            # final segment at its full length rounds; honor the exact
            # endpoint contract instead.
            return DoubleWellParams(width=self.width,
                                    right_depth=float(self.right_depth[-1]),
                                    left_depth=float(self.left_depth[-1]),
                                    separation=float(self.separation[-1]))
        a_spline, b_spline, d_spline = self._splines
        return DoubleWellParams(
            width=self.width,
            right_depth=float(a_spline(t)),
            left_depth=float(b_spline(t)),
            separation=float(d_spline(t)),
        )

    def values(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized (A, B, d) samples, for tabulation and plotting."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.duration):
            raise ValueError("sample times outside schedule range")
        a_spline, b_spline, d_spline = self._splines
        end = t == self.duration
        a, b, d = a_spline(t), b_spline(t), d_spline(t)
        if np.any(end):
            a = np.where(end, self.right_depth[-1], a)
            b = np.where(end, self.left_depth[-1], b)
            d = np.where(end, self.separation[-1], d)
        return a, b, d


@dataclass(frozen=True)
class NoiseSpec:
    """Deterministic sinusoidal drift of the pulse functions.

    Amplitudes are in schedule units (separation in oscillator lengths,
    depths in eps); ``angular_frequency`` is in rad per time unit.
    """

    separation_amplitude: float = 0.0
    right_depth_amplitude: float = 0.0
    left_depth_amplitude: float = 0.0
    angular_frequency: float = 0.0

    def __post_init__(self) -> None:
        for name in ("separation_amplitude", "right_depth_amplitude",
                     "left_depth_amplitude", "angular_frequency"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class _PerturbedSchedule:
    """Schedule with additive sinusoidal drift on each pulse function."""

    base: PulseSchedule
    noise: NoiseSpec

    @property
    def duration(self) -> float:
        return self.base.duration

    @property
    def width(self) -> float:
        return self.base.width

    def sample(self, t: float) -> DoubleWellParams:
        p = self.base.sample(t)
        s = np.sin(self.noise.angular_frequency * t)
        return DoubleWellParams(
            width=p.width,
            right_depth=p.right_depth + self.noise.right_depth_amplitude * s,
            left_depth=p.left_depth + self.noise.left_depth_amplitude * s,
            separation=p.separation + self.noise.separation_amplitude * s,
        )

    def values(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b, d = self.base.values(t)
        s = np.sin(self.noise.angular_frequency * np.asarray(t, dtype=float))
        return (a + self.noise.right_depth_amplitude * s,
                b + self.noise.left_depth_amplitude * s,
                d + self.noise.separation_amplitude * s)


@dataclass(frozen=True)
class _ReversedSchedule:
    """Time-inverted view of a schedule: sample(t) = base.sample(T - t)."""

    base: PulseSchedule

    @property
    def duration(self) -> float:
        return self.base.duration

    @property
    def width(self) -> float:
        return self.base.width

    def sample(self, t: float) -> DoubleWellParams:
        return self.base.sample(self.duration - t)

    def values(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.base.values(self.duration - np.asarray(t, dtype=float))


def sample_pulse(schedule, t: float) -> DoubleWellParams:
    """Instantaneous (A, B, d) of any schedule-like object at time t."""
    return schedule.sample(t)


def perturb_schedule(schedule: PulseSchedule, noise: NoiseSpec):
    """Schedule with the sinusoidal drift added to each pulse function.

    The drift is applied as-is (no clamping); the perturbed depths may in
    principle go negative if the amplitudes exceed the schedule values.
    """
    return _PerturbedSchedule(base=schedule, noise=noise)


def reverse_schedule(schedule):
    """Time inversion of the pulses; reversing twice returns the original."""
    if isinstance(schedule, _ReversedSchedule):
        return schedule.base
    return _ReversedSchedule(base=schedule)


# Default transport pulse, as knot fractions of the total duration.  The
# left well starts shallower than the right one (its ground level sits
# between the right well's first and second excited levels) and is
# deepened through the process; the separation shrinks first and is held
# low while the left-well level descends past the right well's first
# excited level, so the character exchange happens where the wells are
# merged and the avoided-crossing gap is widest.  Values are
# configuration data, validated end-to-end by the acceptance suite.
DEFAULT_WELL_WIDTH = 1.5
DEFAULT_TRANSPORT_KNOTS = {
    "fraction": (0.0, 0.15, 0.3, 0.5, 0.7, 0.85, 1.0),
    "right_depth": (130.0, 130.0, 130.0, 130.0, 130.0, 130.0, 130.0),
    "left_depth": (113.5, 114.2, 115.5, 119.0, 122.5, 123.8, 124.5),
    "separation": (6.5, 4.2, 2.0, 2.0, 2.0, 4.2, 6.5),
}


def default_transport_schedule(duration: float, *, width: float = DEFAULT_WELL_WIDTH,
                               knots: dict | None = None) -> PulseSchedule:
    """The shipped transport pulse scaled to a total duration.

    Knot times are stored as fractions of the duration so the same shape
    can be run at any speed.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    k = DEFAULT_TRANSPORT_KNOTS if knots is None else knots
    fractions = np.asarray(k["fraction"], dtype=float)
    return PulseSchedule(
        times=fractions * duration,
        right_depth=np.asarray(k["right_depth"], dtype=float),
        left_depth=np.asarray(k["left_depth"], dtype=float),
        separation=np.asarray(k["separation"], dtype=float),
        width=width,
    )
