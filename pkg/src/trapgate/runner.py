"""Experiment dispatch and deterministic, plot-ready output files.

Every float written to a data file uses 12 significant digits in
scientific notation so that repeated runs of the same configuration are
byte-identical; the run summary additionally records the wall-clock time
and the fully resolved configuration (every default echoed).
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .feshbach import evolve_gate, sample_gate_trajectory
from .optimize import ControlProblem, optimize, ramp_from_fields
from .propagate import run_transport
from .spectral import align_spectrum, instantaneous_spectrum

FLOAT_FORMAT = "%.11e"   # 12 significant digits


@dataclass(frozen=True)
class RunSummary:
    """Headline record of one experiment run."""

    experiment: str
    input_sha256: str
    metrics: dict
    duration_s: float
    outputs: list[str]
    resolved_config: dict

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "input_sha256": self.input_sha256,
            "metrics": self.metrics,
            "duration_s": self.duration_s,
            "outputs": self.outputs,
            "resolved_config": self.resolved_config,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _format_row(values) -> str:
    return ",".join(FLOAT_FORMAT % v for v in values)


def _write_csv(path: Path, header: list[str], rows: np.ndarray) -> None:
    lines = [",".join(header)]
    lines.extend(_format_row(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _run_spectrum(config: RunConfig, out_dir: Path, threads: int) -> tuple[dict, list[Path]]:
    times = np.linspace(0.0, config.time_grid.t_final, config.n_output)
    spectrum = None
    rows = np.empty((len(times), 1 + config.n_levels))
    min_gap = np.inf
    for j, t in enumerate(times):
        current = instantaneous_spectrum(config.schedule.sample(float(t)), config.grid,
                                         config.n_levels, t=float(t))
        if spectrum is None:
            spectrum = current
        else:
            spectrum, info = align_spectrum(spectrum, current, min_overlap=0.0)
            min_gap = min(min_gap, info.min_gap)
        rows[j, 0] = t
        rows[j, 1:] = spectrum.energies
    path = out_dir / "spectrum.csv"
    header = ["t_hbar_over_eps"] + [f"E_{n}_eps" for n in range(config.n_levels)]
    _write_csv(path, header, rows)

    # sampled pulse functions, for plotting alongside the level diagram
    a, b, d = config.schedule.values(times)
    pulses = out_dir / "pulses.csv"
    _write_csv(pulses, ["t_hbar_over_eps", "right_depth_eps", "left_depth_eps",
                        "separation_a"], np.column_stack([times, a, b, d]))
    metrics = {"min_adjacent_gap_eps": float(min_gap),
               "n_levels": config.n_levels}
    return metrics, [path, pulses]


def _transport_csv(report, path: Path) -> None:
    k = report.n_levels
    header = (["t_hbar_over_eps"]
              + [f"P_M_{n}" for n in range(k)]
              + [f"P_R_{n}" for n in range(k)])
    rows = np.column_stack([report.times, report.occupations_moving,
                            report.occupations_register])
    _write_csv(path, header, rows)


def _run_transport(config: RunConfig, out_dir: Path, threads: int) -> tuple[dict, list[Path]]:
    report = run_transport(config.schedule, config.time_grid, config.noise,
                           grid=config.grid, n_levels=config.n_levels,
                           n_output=config.n_output)
    trajectory = out_dir / "transport.csv"
    _transport_csv(report, trajectory)
    metrics = {
        "F_M": report.fidelity_moving,
        "F_R": report.fidelity_register,
        "max_high_state_occupation": report.max_high_state_occupation,
        "max_norm_error": report.max_norm_error,
        "min_tracking_overlap": report.min_tracking_overlap,
    }
    return metrics, [trajectory]


def _run_noise_sweep(config: RunConfig, out_dir: Path, threads: int) -> tuple[dict, list[Path]]:
    def one(case):
        label, noise = case
        report = run_transport(config.schedule, config.time_grid, noise,
                               grid=config.grid, n_levels=config.n_levels,
                               n_output=config.n_output)
        return label, noise, report

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, config.noise_cases))
    else:
        results = [one(case) for case in config.noise_cases]

    path = out_dir / "noise_sweep.csv"
    header = ["case", "separation_amplitude_a", "right_depth_amplitude_eps",
              "left_depth_amplitude_eps", "angular_frequency_per_time_unit",
              "F_M", "F_R", "max_high_state_occupation"]
    lines = [",".join(header)]
    metrics = {"cases": {}}
    for label, noise, report in results:
        row = _format_row([noise.separation_amplitude, noise.right_depth_amplitude,
                           noise.left_depth_amplitude, noise.angular_frequency,
                           report.fidelity_moving, report.fidelity_register,
                           report.max_high_state_occupation])
        lines.append(f"{label},{row}")
        metrics["cases"][label] = {"F_M": report.fidelity_moving,
                                   "F_R": report.fidelity_register}
    path.write_text("\n".join(lines) + "\n")
    return metrics, [path]


def _run_gate(config: RunConfig, out_dir: Path, threads: int) -> tuple[dict, list[Path]]:
    times, ground, phase = sample_gate_trajectory(config.ramp, config.resonance,
                                                  n_times=config.n_output)
    path = out_dir / "gate.csv"
    _write_csv(path, ["t_s", "ground_return", "phase_rad"],
               np.column_stack([times, ground, phase]))
    result, _ = evolve_gate(config.ramp, config.resonance)
    metrics = {"phase_rad": result.phase,
               "ground_return": result.ground_return,
               "infidelity": result.infidelity}
    return metrics, [path]


def write_ramp_file(path: Path, durations: np.ndarray, fields: np.ndarray) -> None:
    lines = ["# duration_s B_gauss"]
    lines.extend(f"{FLOAT_FORMAT % d} {FLOAT_FORMAT % b}"
                 for d, b in zip(durations, fields))
    path.write_text("\n".join(lines) + "\n")


def _run_gate_optimize(config: RunConfig, out_dir: Path, threads: int) -> tuple[dict, list[Path]]:
    problem = ControlProblem(model=config.resonance, **config.control)
    trace = optimize(problem)

    trace_path = out_dir / "iterations.csv"
    _write_csv(trace_path, ["iteration", "cost", "infidelity", "phase_error_rad"],
               np.column_stack([trace.iterations, trace.costs, trace.infidelities,
                                trace.phase_errors]))
    ramp = ramp_from_fields(trace.best_fields, problem)
    ramp_path = out_dir / "optimized.ramp"
    write_ramp_file(ramp_path, ramp.durations, ramp.fields)

    gate_result, _ = evolve_gate(ramp, config.resonance)
    metrics = {
        "converged": trace.converged,
        "iterations": int(trace.iterations[-1]),
        "final_cost": trace.best_cost,
        "infidelity": gate_result.infidelity,
        "phase_rad": gate_result.phase,
    }
    # Non-convergence is not a failure at this level: outputs and summary
    # are still written, and the CLI maps the flag to its own exit status.
    return metrics, [trace_path, ramp_path]


_RUNNERS = {
    "spectrum": _run_spectrum,
    "transport": _run_transport,
    "noise-sweep": _run_noise_sweep,
    "gate": _run_gate,
    "gate-optimize": _run_gate_optimize,
}


def run(config: RunConfig, config_text: str, out_dir: str | Path | None = None,
        threads: int = 1, verbose: bool = False) -> RunSummary:
    """Execute the configured experiment and write its output files."""
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    metrics, outputs = _RUNNERS[config.experiment](config, target, threads)
    duration = time.perf_counter() - started

    summary = RunSummary(
        experiment=config.experiment,
        input_sha256=hashlib.sha256(config_text.encode()).hexdigest(),
        metrics=metrics,
        duration_s=duration,
        outputs=[p.name for p in outputs],
        resolved_config=config.resolved,
    )
    (target / "run_summary.json").write_text(summary.to_json() + "\n")
    for path in outputs:
        if not path.exists() or path.stat().st_size == 0:
            raise RuntimeError(f"output file {path} missing or empty")
    if verbose:
        print(summary.to_json())
    return summary
