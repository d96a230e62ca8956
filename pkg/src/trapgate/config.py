"""Declarative run configuration: strict YAML parsing and validation.

Configs are plain YAML with one block per subsystem.  Parsing is strict:
unknown keys are rejected (with a suggestion when a close match exists),
every violated invariant is reported with its location, and all defaults
that were filled in are echoed back so a run summary can record them.
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .feshbach import FieldRamp, ResonanceModel
from .potential import NoiseSpec, PulseSchedule, DEFAULT_TRANSPORT_KNOTS, DEFAULT_WELL_WIDTH
from .units import (DEFAULT_DT, DEFAULT_N_POINTS, DEFAULT_X_MAX, DEFAULT_X_MIN,
                    RB87_MASS_KG, HBAR, SpatialGrid, TimeGrid, UnitSystem,
                    make_unit_system)

EXPERIMENTS = ("spectrum", "transport", "noise-sweep", "gate", "gate-optimize")


class ConfigError(ValueError):
    """One or more field-level configuration problems."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class _Context:
    """Collects problems and tracks resolved values for the summary echo."""

    def __init__(self) -> None:
        self.problems: list[str] = []
        self.resolved: dict = {}

    def error(self, location: str, message: str) -> None:
        self.problems.append(f"{location}: {message}")


def _check_keys(block: dict, allowed: dict[str, object], location: str, ctx: _Context) -> None:
    for key in block:
        if key not in allowed:
            suggestion = difflib.get_close_matches(key, allowed, n=1, cutoff=0.5)
            hint = f" (did you mean {suggestion[0]!r}?)" if suggestion else ""
            ctx.error(location, f"unknown key {key!r}{hint}")


def _get(block: dict, key: str, default, location: str, ctx: _Context, *,
         kind=float, positive=False, non_negative=False):
    value = block.get(key, default)
    if value is None:
        return None
    try:
        value = kind(value)
    except (TypeError, ValueError):
        ctx.error(f"{location}.{key}", f"expected {kind.__name__}, got {value!r}")
        return default
    if positive and value <= 0:
        ctx.error(f"{location}.{key}", f"must be positive, got {value}")
    if non_negative and value < 0:
        ctx.error(f"{location}.{key}", f"must be non-negative, got {value}")
    return value


@dataclass
class RunConfig:
    """Fully validated run configuration with defaults resolved."""

    experiment: str
    units: UnitSystem
    grid: SpatialGrid
    time_grid: TimeGrid
    schedule: PulseSchedule | None
    noise: NoiseSpec | None
    noise_cases: list[tuple[str, NoiseSpec]]
    n_levels: int
    n_output: int
    resonance: ResonanceModel | None
    ramp: FieldRamp | None
    ramp_path: str | None
    control: dict | None
    output_dir: str
    resolved: dict = field(repr=False, default_factory=dict)


_UNIT_KEYS = {"mass_kg": RB87_MASS_KG, "omega_rad_s": 2 * np.pi * 1e5}
_GRID_KEYS = {"x_min": DEFAULT_X_MIN, "x_max": DEFAULT_X_MAX, "n_points": DEFAULT_N_POINTS}
_TIME_KEYS = {"t_final": 500.0, "n_steps": None}
_SCHEDULE_KEYS = {"width": DEFAULT_WELL_WIDTH, "knots": None}
_KNOT_KEYS = {"t_over_T": None, "right_depth": None, "left_depth": None, "separation": None}
_NOISE_KEYS = {"separation_amplitude": 0.0, "separation_amplitude_m": None,
               "right_depth_amplitude": 0.0, "left_depth_amplitude": 0.0,
               "angular_frequency": 0.0, "angular_frequency_rad_s": None}
_TRACKING_KEYS = {"n_levels": 13, "n_output": 200}
_RESONANCE_KEYS = {"resonant_field_gauss": 685.0, "width_gauss": 16e-3,
                   "slope_joule_per_gauss": None, "background_length_m": None,
                   "trap_frequency_rad_s": 2 * np.pi * 25e3, "n_levels": 20,
                   "mass_kg": RB87_MASS_KG, "frequency_ratio": 4.0}
_GATE_KEYS = {"ramp_file": None, "ramp": None, "n_output_points": 257}
_CONTROL_KEYS = {"n_segments": 64, "total_time_s": 8e-3, "b_min_gauss": None,
                 "b_max_gauss": None, "target_phase_rad": float(np.pi),
                 "tolerance": 1e-7, "max_iterations": 500, "initial_fields_gauss": None}
_TOP_KEYS = {"experiment": None, "unit_system": {}, "grid": {}, "time": {},
             "schedule": {}, "noise": {}, "noise_sweep": {}, "tracking": {},
             "resonance": {}, "gate": {}, "control": {}, "output": {}}
_OUTPUT_KEYS = {"directory": "out"}
_SWEEP_KEYS = {"cases": None}
_CASE_KEYS = {"label": None, "noise": {}}


def _parse_noise(block: dict, location: str, units: UnitSystem, ctx: _Context) -> NoiseSpec:
    _check_keys(block, _NOISE_KEYS, location, ctx)
    sep = _get(block, "separation_amplitude", 0.0, location, ctx, non_negative=True)
    sep_m = _get(block, "separation_amplitude_m", None, location, ctx, non_negative=True)
    if sep_m is not None:
        if "separation_amplitude" in block:
            ctx.error(location, "give separation_amplitude either in units of a or in metres, not both")
        sep = sep_m / units.a
    omega = _get(block, "angular_frequency", 0.0, location, ctx, non_negative=True)
    omega_si = _get(block, "angular_frequency_rad_s", None, location, ctx, non_negative=True)
    if omega_si is not None:
        if "angular_frequency" in block:
            ctx.error(location, "give angular_frequency either per time unit or in rad/s, not both")
        omega = omega_si * units.time_unit
    right = _get(block, "right_depth_amplitude", 0.0, location, ctx, non_negative=True)
    left = _get(block, "left_depth_amplitude", 0.0, location, ctx, non_negative=True)
    ctx.resolved.setdefault("noise_resolved", {})[location] = {
        "separation_amplitude": sep, "right_depth_amplitude": right,
        "left_depth_amplitude": left, "angular_frequency": omega}
    try:
        return NoiseSpec(separation_amplitude=sep, right_depth_amplitude=right,
                         left_depth_amplitude=left, angular_frequency=omega)
    except ValueError as exc:
        ctx.error(location, str(exc))
        return NoiseSpec()


def _parse_schedule(block: dict, t_final: float, location: str, ctx: _Context) -> PulseSchedule | None:
    _check_keys(block, _SCHEDULE_KEYS, location, ctx)
    width = _get(block, "width", DEFAULT_WELL_WIDTH, location, ctx, positive=True)
    knots = block.get("knots")
    if knots is None:
        k = DEFAULT_TRANSPORT_KNOTS
        fractions = list(k["fraction"])
        columns = {"right_depth": list(k["right_depth"]),
                   "left_depth": list(k["left_depth"]),
                   "separation": list(k["separation"])}
    else:
        if not isinstance(knots, list) or len(knots) < 2:
            ctx.error(f"{location}.knots", "need a list of at least two knots")
            return None
        fractions = []
        columns = {"right_depth": [], "left_depth": [], "separation": []}
        complete = True
        for i, knot in enumerate(knots):
            loc = f"{location}.knots[{i}]"
            if not isinstance(knot, dict):
                ctx.error(loc, "each knot must be a mapping")
                return None
            _check_keys(knot, _KNOT_KEYS, loc, ctx)
            for name, target in (("t_over_T", fractions),
                                 ("right_depth", columns["right_depth"]),
                                 ("left_depth", columns["left_depth"]),
                                 ("separation", columns["separation"])):
                if name not in knot:
                    ctx.error(loc, f"missing key {name!r}")
                    complete = False
                    continue
                value = _get(knot, name, None, loc, ctx, non_negative=True)
                if value is None:
                    complete = False
                target.append(value)
        if not complete or any(v is None for v in fractions):
            return None
    if fractions[0] != 0.0 or fractions[-1] != 1.0:
        ctx.error(f"{location}.knots", "knot fractions must start at 0 and end at 1")
        return None
    try:
        return PulseSchedule(times=np.asarray(fractions) * t_final,
                             right_depth=np.asarray(columns["right_depth"]),
                             left_depth=np.asarray(columns["left_depth"]),
                             separation=np.asarray(columns["separation"]),
                             width=width)
    except ValueError as exc:
        ctx.error(location, str(exc))
        return None


def _parse_resonance(block: dict, location: str, ctx: _Context) -> ResonanceModel | None:
    _check_keys(block, _RESONANCE_KEYS, location, ctx)
    nu = _get(block, "trap_frequency_rad_s", _RESONANCE_KEYS["trap_frequency_rad_s"],
              location, ctx, positive=True)
    width = _get(block, "width_gauss", _RESONANCE_KEYS["width_gauss"], location, ctx,
                 positive=True)
    slope = _get(block, "slope_joule_per_gauss", None, location, ctx)
    if slope is None:
        slope = 0.016 * HBAR * nu / width
    background = _get(block, "background_length_m", None, location, ctx, positive=True)
    if background is None:
        background = 100.0 * 5.29177210903e-11
    try:
        return ResonanceModel(
            resonant_field=_get(block, "resonant_field_gauss", 685.0, location, ctx),
            width=width, slope=slope, background_length=background, trap_frequency=nu,
            n_levels=_get(block, "n_levels", 20, location, ctx, kind=int, positive=True),
            mass=_get(block, "mass_kg", RB87_MASS_KG, location, ctx, positive=True),
            frequency_ratio=_get(block, "frequency_ratio", 4.0, location, ctx, positive=True),
        )
    except ValueError as exc:
        ctx.error(location, str(exc))
        return None


def parse_ramp_file(text: str, location: str = "ramp") -> FieldRamp:
    """Parse a ramp file: one `duration_s B_gauss` pair per line."""
    durations, fields = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError([f"{location}:{lineno}: expected 'duration_s B_gauss', got {raw!r}"])
        try:
            durations.append(float(parts[0]))
            fields.append(float(parts[1]))
        except ValueError:
            raise ConfigError([f"{location}:{lineno}: non-numeric entry in {raw!r}"]) from None
    if not durations:
        raise ConfigError([f"{location}: no ramp segments found"])
    try:
        return FieldRamp(durations=np.asarray(durations), fields=np.asarray(fields))
    except ValueError as exc:
        raise ConfigError([f"{location}: {exc}"]) from None


def parse_config(text: str, base_dir: str | Path = ".",
                 external_ramp: FieldRamp | None = None) -> RunConfig:
    """Parse and validate a YAML run configuration.

    Raises :class:`ConfigError` carrying every detected problem with its
    field location.  ``external_ramp`` satisfies the gate experiment's
    ramp requirement in place of the config (used by the CLI's --ramp).
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"YAML syntax error: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])

    ctx = _Context()
    _check_keys(raw, _TOP_KEYS, "top level", ctx)

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        ctx.error("experiment", f"must be one of {EXPERIMENTS}, got {experiment!r}")
        raise ConfigError(ctx.problems)

    unit_block = raw.get("unit_system") or {}
    _check_keys(unit_block, _UNIT_KEYS, "unit_system", ctx)
    mass = _get(unit_block, "mass_kg", _UNIT_KEYS["mass_kg"], "unit_system", ctx, positive=True)
    omega = _get(unit_block, "omega_rad_s", _UNIT_KEYS["omega_rad_s"], "unit_system", ctx,
                 positive=True)
    units = make_unit_system(mass, omega) if not ctx.problems else make_unit_system(1.0, 1.0)

    grid_block = raw.get("grid") or {}
    _check_keys(grid_block, _GRID_KEYS, "grid", ctx)
    grid = None
    try:
        grid = SpatialGrid(
            x_min=_get(grid_block, "x_min", DEFAULT_X_MIN, "grid", ctx),
            x_max=_get(grid_block, "x_max", DEFAULT_X_MAX, "grid", ctx),
            n_points=_get(grid_block, "n_points", DEFAULT_N_POINTS, "grid", ctx, kind=int),
        )
    except ValueError as exc:
        ctx.error("grid", str(exc))

    time_block = raw.get("time") or {}
    _check_keys(time_block, _TIME_KEYS, "time", ctx)
    t_final = _get(time_block, "t_final", 500.0, "time", ctx, positive=True)
    n_steps = _get(time_block, "n_steps", None, "time", ctx, kind=int, positive=True)
    if n_steps is None:
        n_steps = max(1, round(t_final / DEFAULT_DT))
    time_grid = None
    try:
        time_grid = TimeGrid(t_final=t_final, n_steps=n_steps)
    except ValueError as exc:
        ctx.error("time", str(exc))

    tracking_block = raw.get("tracking") or {}
    _check_keys(tracking_block, _TRACKING_KEYS, "tracking", ctx)
    n_levels = _get(tracking_block, "n_levels", 13, "tracking", ctx, kind=int, positive=True)
    n_output = _get(tracking_block, "n_output", 200, "tracking", ctx, kind=int, positive=True)

    output_block = raw.get("output") or {}
    _check_keys(output_block, _OUTPUT_KEYS, "output", ctx)
    output_dir = str(output_block.get("directory", "out"))

    needs_schedule = experiment in ("spectrum", "transport", "noise-sweep")
    schedule = None
    if needs_schedule:
        schedule = _parse_schedule(raw.get("schedule") or {}, t_final, "schedule", ctx)

    noise = None
    if "noise" in raw and raw["noise"]:
        if experiment != "transport":
            ctx.error("noise", f"only valid for the transport experiment, not {experiment!r}")
        else:
            noise = _parse_noise(raw["noise"], "noise", units, ctx)

    noise_cases: list[tuple[str, NoiseSpec]] = []
    if experiment == "noise-sweep":
        sweep = raw.get("noise_sweep")
        if not sweep:
            ctx.error("noise_sweep", "required for the noise-sweep experiment")
        else:
            _check_keys(sweep, _SWEEP_KEYS, "noise_sweep", ctx)
            cases = sweep.get("cases")
            if not isinstance(cases, list) or not cases:
                ctx.error("noise_sweep.cases", "need a non-empty list of cases")
            else:
                for i, case in enumerate(cases):
                    loc = f"noise_sweep.cases[{i}]"
                    if not isinstance(case, dict):
                        ctx.error(loc, "each case must be a mapping")
                        continue
                    _check_keys(case, _CASE_KEYS, loc, ctx)
                    label = str(case.get("label", f"case-{i}"))
                    noise_cases.append((label, _parse_noise(case.get("noise") or {},
                                                            f"{loc}.noise", units, ctx)))

    resonance = None
    if experiment in ("gate", "gate-optimize"):
        resonance = _parse_resonance(raw.get("resonance") or {}, "resonance", ctx)

    ramp = None
    ramp_path = None
    gate_block = raw.get("gate") or {}
    if experiment == "gate":
        _check_keys(gate_block, _GATE_KEYS, "gate", ctx)
        inline = gate_block.get("ramp")
        ramp_file = gate_block.get("ramp_file")
        if external_ramp is not None:
            ramp = external_ramp
        elif inline is not None and ramp_file is not None:
            ctx.error("gate", "give either ramp or ramp_file, not both")
        elif inline is not None:
            try:
                pairs = np.asarray(inline, dtype=float)
                if pairs.ndim != 2 or pairs.shape[1] != 2:
                    raise ValueError("ramp must be a list of [duration_s, B_gauss] pairs")
                ramp = FieldRamp(durations=pairs[:, 0], fields=pairs[:, 1])
            except ValueError as exc:
                ctx.error("gate.ramp", str(exc))
        elif ramp_file is not None:
            ramp_path = str(Path(base_dir) / ramp_file)
            try:
                ramp = parse_ramp_file(Path(ramp_path).read_text(), ramp_path)
            except OSError as exc:
                ctx.error("gate.ramp_file", f"cannot read {ramp_path}: {exc}")
            except ConfigError as exc:
                ctx.problems.extend(exc.problems)
        else:
            ctx.error("gate", "a ramp is required (ramp or ramp_file)")
        n_output = _get(gate_block, "n_output_points", 257, "gate", ctx, kind=int, positive=True)

    control = None
    if experiment == "gate-optimize":
        block = raw.get("control") or {}
        _check_keys(block, _CONTROL_KEYS, "control", ctx)
        span = 50.0 * (resonance.width if resonance else 16e-3)
        b0 = resonance.resonant_field if resonance else 685.0
        b_min = _get(block, "b_min_gauss", b0 - span, "control", ctx)
        b_max = _get(block, "b_max_gauss", b0 + span, "control", ctx)
        initial = block.get("initial_fields_gauss")
        control = {
            "n_segments": _get(block, "n_segments", 64, "control", ctx, kind=int),
            "total_time": _get(block, "total_time_s", 8e-3, "control", ctx, positive=True),
            "bounds": (b_min, b_max),
            "target_phase": _get(block, "target_phase_rad", float(np.pi), "control", ctx),
            "tolerance": _get(block, "tolerance", 1e-7, "control", ctx, positive=True),
            "max_iterations": _get(block, "max_iterations", 500, "control", ctx,
                                   kind=int, positive=True),
            "initial_fields": None if initial is None else np.asarray(initial, dtype=float),
        }
        if b_min >= b_max:
            ctx.error("control", f"require b_min_gauss < b_max_gauss, got {b_min} >= {b_max}")

    if ctx.problems:
        raise ConfigError(ctx.problems)

    resolved = {
        "experiment": experiment,
        "unit_system": {"mass_kg": mass, "omega_rad_s": omega,
                        "a_m": units.a, "eps_joule": units.eps,
                        "time_unit_s": units.time_unit},
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max, "n_points": grid.n_points},
        "time": {"t_final": time_grid.t_final, "n_steps": time_grid.n_steps,
                 "dt": time_grid.dt},
        "tracking": {"n_levels": n_levels, "n_output": n_output},
        "output": {"directory": output_dir},
    }
    if schedule is not None:
        resolved["schedule"] = {
            "width": schedule.width,
            "knots": [
                {"t_over_T": float(f / time_grid.t_final), "right_depth": float(a),
                 "left_depth": float(b), "separation": float(d)}
                for f, a, b, d in zip(schedule.times, schedule.right_depth,
                                      schedule.left_depth, schedule.separation)
            ],
        }
    if noise is not None:
        resolved["noise"] = ctx.resolved.get("noise_resolved", {}).get("noise", {})
    if noise_cases:
        resolved["noise_sweep"] = {
            "cases": [{"label": label,
                       **ctx.resolved.get("noise_resolved", {}).get(
                           f"noise_sweep.cases[{i}].noise", {})}
                      for i, (label, _) in enumerate(noise_cases)]
        }
    if resonance is not None:
        resolved["resonance"] = {
            "resonant_field_gauss": resonance.resonant_field,
            "width_gauss": resonance.width,
            "slope_joule_per_gauss": resonance.slope,
            "background_length_m": resonance.background_length,
            "trap_frequency_rad_s": resonance.trap_frequency,
            "n_levels": resonance.n_levels,
            "mass_kg": resonance.mass,
            "frequency_ratio": resonance.frequency_ratio,
            "dimensionless_background_length": resonance.dimensionless_background_length,
            "dimensionless_width": resonance.dimensionless_width,
        }
    if control is not None:
        resolved["control"] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                               for k, v in control.items()}
    if ramp is not None:
        resolved["gate"] = {"ramp_path": ramp_path, "n_segments": int(len(ramp.durations)),
                            "total_time_s": ramp.total_time, "n_output_points": n_output}

    return RunConfig(
        experiment=experiment, units=units, grid=grid, time_grid=time_grid,
        schedule=schedule, noise=noise, noise_cases=noise_cases,
        n_levels=n_levels, n_output=n_output, resonance=resonance,
        ramp=ramp, ramp_path=ramp_path, control=control,
        output_dir=output_dir, resolved=resolved,
    )
