"""Benchmark orchestration: single runs, the compliance-vs-volume sweep,
the stress/compliance alternation experiment, and artifact output.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import outputs
from .analysis import contrast_index
from .filters import build_filter
from .oc import OcConfig, run_oc
from .optimizers import IterationRecord, OptimizerConfig, Problem, RunResult, run
from .problems import InvalidSpecError, ProblemSpec, build_problem

__all__ = [
    "METHODS",
    "RunSummary",
    "SweepRow",
    "AlternationResult",
    "setup_problem",
    "run_benchmark",
    "run_sweep",
    "run_alternation",
    "run_compare",
]

METHODS = ("ptos", "ptoc", "oc")

Progress = Callable[[IterationRecord], None]


@dataclass(frozen=True)
class RunSummary:
    """Headline numbers of one optimization run."""

    problem: str
    method: str
    iterations: int
    volume_fraction: float
    compliance: float
    max_von_mises: float
    contrast_index: float
    reason: str
    wall_time: float

    def as_dict(self) -> dict:
        return {
            "problem": self.problem,
            "method": self.method,
            "iterations": self.iterations,
            "volume_fraction": self.volume_fraction,
            "compliance": self.compliance,
            "max_von_mises": self.max_von_mises,
            "contrast_index": self.contrast_index,
            "termination": self.reason,
            "wall_time_s": self.wall_time,
        }


@dataclass(frozen=True)
class SweepRow:
    volume_fraction: float
    method: str
    iterations: int
    compliance: float
    max_von_mises: float
    contrast_index: float
    reason: str


@dataclass(frozen=True)
class AlternationResult:
    """Alternating PTOc/PTOs chain and the per-exchange improvements (%)."""

    summaries: list[RunSummary]
    volume_path: list[float]  # volume fractions fed to successive PTOc runs
    stress_path: list[float]  # stresses produced by successive PTOc runs
    stress_improvements: list[float]
    volume_improvements: list[float]

    @property
    def mean_stress_improvement(self) -> float:
        return float(np.mean(self.stress_improvements))

    @property
    def mean_volume_improvement(self) -> float:
        return float(np.mean(self.volume_improvements))


def setup_problem(spec: ProblemSpec) -> Problem:
    grid, bc = build_problem(spec)
    return Problem(grid=grid, material=spec.material, bc=bc, filter_op=build_filter(grid, spec.rmin))


def _optimizer_config(spec: ProblemSpec, method: str, overrides: dict) -> OptimizerConfig | OcConfig:
    common = dict(density_bounds=spec.density_bounds)
    common.update(overrides)
    if method == "ptos":
        if spec.stress_limit is None:
            raise InvalidSpecError("ptos needs a stress_limit in the problem spec")
        return OptimizerConfig.for_stress(spec.stress_limit, **common)
    if spec.volume_fraction is None:
        raise InvalidSpecError(f"{method} needs a volume_fraction in the problem spec")
    if method == "ptoc":
        return OptimizerConfig.for_compliance(spec.volume_fraction, **common)
    return OcConfig(volume_fraction=spec.volume_fraction, **common)


def run_benchmark(
    spec: ProblemSpec,
    method: str,
    out_dir: str | Path | None = None,
    progress: Progress | None = None,
    **config_overrides,
) -> tuple[RunSummary, RunResult]:
    """Execute one benchmark run and optionally write its artifacts.

    Artifacts: density/stress/compliance fields as text grids and PGM
    images, the iteration log, and a key/value summary.
    """
    if method not in METHODS:
        raise InvalidSpecError(f"unknown method {method!r}, expected one of {METHODS}")
    problem = setup_problem(spec)
    config = _optimizer_config(spec, method, config_overrides)
    started = time.perf_counter()
    if method == "oc":
        result = run_oc(problem, config, progress=progress)
    else:
        result = run(problem, config, progress=progress)
    elapsed = time.perf_counter() - started
    grid = problem.grid
    active = grid.active_mask
    summary = RunSummary(
        problem=spec.kind,
        method=method,
        iterations=result.iterations,
        volume_fraction=float(result.density[active].mean()),
        compliance=result.compliance.total,
        max_von_mises=float(result.stress.von_mises[active].max()),
        contrast_index=contrast_index(result.density, active),
        reason=result.reason,
        wall_time=elapsed,
    )
    if out_dir is not None:
        _write_run_artifacts(Path(out_dir), spec, method, summary, result, grid)
    return summary, result


def _write_run_artifacts(out_dir, spec, method, summary, result, grid):
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs.write_field_txt(out_dir / "density.txt", grid, result.density)
    outputs.write_field_txt(out_dir / "stress.txt", grid, result.stress.von_mises)
    outputs.write_field_txt(out_dir / "compliance.txt", grid, result.compliance.elemental)
    outputs.write_field_pgm(out_dir / "density.pgm", grid, result.density)
    outputs.write_field_pgm(out_dir / "stress.pgm", grid, result.stress.von_mises)
    outputs.write_field_pgm(out_dir / "compliance.pgm", grid, result.compliance.elemental)
    mode = "stress" if method == "ptos" else "compliance"
    outputs.write_log(out_dir / "log.txt", result.records, mode)
    entries = summary.as_dict()
    entries.update(
        nelx=grid.nelx,
        nely=grid.nely,
        rmin=spec.rmin,
        constraint=spec.stress_limit if method == "ptos" else spec.volume_fraction,
    )
    outputs.write_summary(out_dir / "summary.txt", entries)


def run_sweep(
    spec: ProblemSpec,
    volume_fractions: Sequence[float],
    methods: Sequence[str] = ("ptoc", "oc"),
    out_dir: str | Path | None = None,
    progress: Progress | None = None,
    **config_overrides,
) -> list[SweepRow]:
    """Compliance-vs-volume table over the given volume fractions."""
    for vf in volume_fractions:
        if not 0 < vf <= 1:
            raise InvalidSpecError(f"volume fraction {vf} outside (0, 1]")
    rows: list[SweepRow] = []
    for vf in volume_fractions:
        vf_spec = spec.with_constraint(volume_fraction=vf)
        for method in methods:
            run_out = None
            if out_dir is not None:
                run_out = Path(out_dir) / f"{spec.kind}_{method}_vf{vf:.2f}"
            summary, _ = run_benchmark(vf_spec, method, out_dir=run_out, progress=progress, **config_overrides)
            rows.append(
                SweepRow(
                    volume_fraction=vf,
                    method=method,
                    iterations=summary.iterations,
                    compliance=summary.compliance,
                    max_von_mises=summary.max_von_mises,
                    contrast_index=summary.contrast_index,
                    reason=summary.reason,
                )
            )
    if out_dir is not None:
        _write_sweep_table(Path(out_dir) / f"{spec.kind}_sweep.csv", rows)
    return rows


def _write_sweep_table(path: Path, rows: list[SweepRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    outputs.write_csv(
        path,
        ["volume_fraction", "method", "iterations", "compliance", "max_von_mises", "contrast_index"],
        [
            [r.volume_fraction, r.method, r.iterations, r.compliance, r.max_von_mises, r.contrast_index]
            for r in rows
        ],
    )


def run_alternation(
    spec: ProblemSpec,
    start_volume_fraction: float = 0.5,
    rounds: int = 3,
    out_dir: str | Path | None = None,
    progress: Progress | None = None,
    **config_overrides,
) -> AlternationResult:
    """Alternate PTOc and PTOs, feeding each run's output to the next.

    Starting from a volume-constrained run, the produced maximum stress
    becomes the next stress-constrained run's limit, whose final volume
    fraction feeds the next volume-constrained run, and so on. A closing
    volume-constrained run pairs off the last stress exchange.

    Improvements are reported in percent: for each exchanged value, how
    much lower the stress-constrained run's stress (at equal volume) or
    volume (at equal stress) is than the volume-constrained run's.
    """
    if rounds < 1:
        raise InvalidSpecError("rounds must be at least 1")
    summaries: list[RunSummary] = []
    volume_path = [start_volume_fraction]
    stress_path: list[float] = []
    stress_improvements: list[float] = []
    volume_improvements: list[float] = []

    def out_for(index: int, method: str):
        if out_dir is None:
            return None
        return Path(out_dir) / f"{spec.kind}_step{index:02d}_{method}"

    vf = start_volume_fraction
    prev_stress = None
    step = 0
    for _ in range(rounds):
        summary, _ = run_benchmark(
            spec.with_constraint(volume_fraction=vf), "ptoc", out_dir=out_for(step, "ptoc"),
            progress=progress, **config_overrides,
        )
        summaries.append(summary)
        sigma = summary.max_von_mises
        stress_path.append(sigma)
        if prev_stress is not None:
            stress_improvements.append(100.0 * (sigma - prev_stress) / sigma)
        step += 1
        summary, _ = run_benchmark(
            spec.with_constraint(stress_limit=sigma), "ptos", out_dir=out_for(step, "ptos"),
            progress=progress, **config_overrides,
        )
        summaries.append(summary)
        new_vf = summary.volume_fraction
        volume_improvements.append(100.0 * (vf - new_vf) / vf)
        volume_path.append(new_vf)
        prev_stress = sigma
        vf = new_vf
        step += 1
    summary, _ = run_benchmark(
        spec.with_constraint(volume_fraction=vf), "ptoc", out_dir=out_for(step, "ptoc"),
        progress=progress, **config_overrides,
    )
    summaries.append(summary)
    stress_path.append(summary.max_von_mises)
    stress_improvements.append(100.0 * (summary.max_von_mises - prev_stress) / summary.max_von_mises)

    result = AlternationResult(
        summaries=summaries,
        volume_path=volume_path,
        stress_path=stress_path,
        stress_improvements=stress_improvements,
        volume_improvements=volume_improvements,
    )
    if out_dir is not None:
        _write_alternation_table(Path(out_dir) / f"{spec.kind}_alternation.csv", result)
    return result


def _write_alternation_table(path: Path, result: AlternationResult) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        [s.method, s.iterations, s.volume_fraction, s.compliance, s.max_von_mises, s.contrast_index]
        for s in result.summaries
    ]
    outputs.write_csv(
        path,
        ["method", "iterations", "volume_fraction", "compliance", "max_von_mises", "contrast_index"],
        rows,
    )


def run_compare(
    spec: ProblemSpec,
    volume_fraction: float | None = None,
    out_dir: str | Path | None = None,
    progress: Progress | None = None,
    **config_overrides,
) -> list[RunSummary]:
    """Side-by-side proportional vs optimality-criteria run at one volume."""
    vf = volume_fraction if volume_fraction is not None else spec.volume_fraction
    if vf is None:
        raise InvalidSpecError("compare needs a volume fraction")
    vf_spec = spec.with_constraint(volume_fraction=vf)
    summaries = []
    for method in ("ptoc", "oc"):
        run_out = None if out_dir is None else Path(out_dir) / f"{spec.kind}_{method}"
        summary, _ = run_benchmark(vf_spec, method, out_dir=run_out, progress=progress, **config_overrides)
        summaries.append(summary)
    if out_dir is not None:
        rows = [
            [s.method, s.iterations, s.volume_fraction, s.compliance, s.max_von_mises, s.contrast_index]
            for s in summaries
        ]
        outputs.write_csv(
            Path(out_dir) / f"{spec.kind}_compare.csv",
            ["method", "iterations", "volume_fraction", "compliance", "max_von_mises", "contrast_index"],
            rows,
        )
    return summaries
