"""Proportional material-distribution optimizers.

Two outer loops share one inner routine: a volume-minimizing run that
walks the material amount up or down until the maximum von Mises stress
sits on the allowed limit (``stress`` mode), and a compliance-minimizing
run that keeps the material amount fixed at the volume constraint
(``compliance`` mode). Each outer iteration redistributes the target
amount from scratch, proportionally to a per-element merit field (stress
or compliance raised to an exponent), filtering and clamping inside an
inner loop until the distributed mass matches the target.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import ComplianceField, StressField, elemental_compliance, recover_stress
from .filters import FilterOperator, apply_filter
from .grid import (
    BoundaryConditions,
    FemModel,
    FemSolution,
    MaterialModel,
    StructuredGrid,
    interpolate_modulus,
)

__all__ = [
    "UnreachableTargetError",
    "StagnantInnerLoopError",
    "OptimizerConfig",
    "IterationRecord",
    "DistributionResult",
    "Problem",
    "RunResult",
    "distribute",
    "ptos_step",
    "ptoc_step",
    "run",
]

INNER_LOOP_CAP = 200_000


class UnreachableTargetError(ValueError):
    """Target material amount lies outside what the bounds can hold."""


class StagnantInnerLoopError(RuntimeError):
    """Distribution inner loop failed to reach its target within the cap."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Control parameters for one optimization run.

    ``move_per_element`` scales with the active element count to give the
    per-step material move amount; ``inner_tolerance`` bounds the mass
    mismatch the distribution loop may leave behind. Stress runs stop once
    the maximum von Mises stress is within ``stress_stop_tolerance`` of
    the limit; compliance runs stop once the largest per-element density
    change drops below ``change_stop_tolerance``. Both stop rules only
    fire after ``min_iterations`` outer iterations.
    """

    mode: str  # "stress" or "compliance"
    proportion_exponent: float = 2.0
    history_alpha: float = 0.0
    stress_limit: float | None = None
    volume_fraction: float | None = None
    density_bounds: tuple[float, float] = (0.0, 1.0)
    move_per_element: float = 0.001
    inner_tolerance: float = 0.001
    stress_stop_tolerance: float = 0.001
    stress_stop_relative: bool = False
    change_stop_tolerance: float = 0.01
    min_iterations: int = 50
    max_iterations: int = 2000

    def __post_init__(self):
        if self.mode not in ("stress", "compliance"):
            raise ValueError(f"mode must be 'stress' or 'compliance', got {self.mode!r}")
        if self.proportion_exponent <= 0:
            raise ValueError("proportion_exponent must be positive")
        if not 0 <= self.history_alpha < 1:
            raise ValueError("history_alpha must lie in [0, 1)")
        lo, hi = self.density_bounds
        if not 0 <= lo < hi <= 1:
            raise ValueError(f"density_bounds must satisfy 0 <= lo < hi <= 1, got {self.density_bounds}")
        if self.mode == "stress" and (self.stress_limit is None or self.stress_limit <= 0):
            raise ValueError("stress mode needs a positive stress_limit")
        if self.mode == "compliance":
            if self.volume_fraction is None or not lo < self.volume_fraction <= hi:
                raise ValueError("compliance mode needs a volume_fraction within the density bounds")
        for name in ("move_per_element", "inner_tolerance", "stress_stop_tolerance", "change_stop_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_stress(cls, stress_limit: float, **overrides) -> "OptimizerConfig":
        """Stress-constrained defaults: quadratic proportion, no history."""
        overrides.setdefault("proportion_exponent", 2.0)
        overrides.setdefault("history_alpha", 0.0)
        return cls(mode="stress", stress_limit=stress_limit, **overrides)

    @classmethod
    def for_compliance(cls, volume_fraction: float, **overrides) -> "OptimizerConfig":
        """Compliance defaults: linear proportion, history blending 0.5."""
        overrides.setdefault("proportion_exponent", 1.0)
        overrides.setdefault("history_alpha", 0.5)
        return cls(mode="compliance", volume_fraction=volume_fraction, **overrides)


@dataclass
class IterationRecord:
    """One outer-iteration log entry.

    ``metric`` is the stress residual |max_vm - limit| in stress mode and
    the previous iteration's max density change in compliance mode.
    ``remaining`` is the signed mass mismatch left by the distribution
    performed at the end of this iteration (None on the final iteration,
    which performs no update).
    """

    iteration: int
    max_von_mises: float
    compliance: float
    volume_fraction: float
    metric: float
    remaining: float | None = None

    def format_line(self, mode: str) -> str:
        label = "Res" if mode == "stress" else "Ch"
        return (
            f"It:{self.iteration:5d} Max_vms:{self.max_von_mises:5.2f} "
            f"Comp:{self.compliance:8.2f} Vol:{self.volume_fraction:5.2f} "
            f"{label}:{self.metric:6.3f}"
        )


@dataclass(frozen=True, eq=False)
class DistributionResult:
    """Outcome of one inner distribution loop."""

    density: np.ndarray
    remaining: float  # signed target - achieved mass on exit
    passes: int
    uniform_fallback: bool = False


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything an optimizer run needs besides its config."""

    grid: StructuredGrid
    material: MaterialModel
    bc: BoundaryConditions
    filter_op: FilterOperator


@dataclass(eq=False)
class RunResult:
    """Final state of an optimization run plus its iteration history.

    The stress, compliance, and displacement fields are those of the
    final density field.
    """

    density: np.ndarray
    records: list[IterationRecord]
    reason: str  # "converged" or "max_iterations"
    stress: StressField
    compliance: ComplianceField
    solution: FemSolution

    @property
    def iterations(self) -> int:
        return len(self.records)


def distribute(
    target: float,
    weights: np.ndarray,
    exponent: float,
    filter_op: FilterOperator,
    bounds: tuple[float, float],
    active_mask: np.ndarray | None = None,
    inner_tolerance: float = 0.001,
    max_passes: int = INNER_LOOP_CAP,
) -> DistributionResult:
    """Distribute ``target`` material proportionally to ``weights**exponent``.

    Starting from a zero field, each pass spreads the remaining amount in
    proportion to the merit weights, filters the increment, clamps to the
    density bounds, pins passive elements at the lower bound, and
    recomputes the remaining amount. The loop exits as soon as the
    remaining amount is at or below ``inner_tolerance``; filtering after
    clamping can leave it slightly negative, which is reported as-is.

    The distribution is invariant to positive scaling of the weights.

    Raises
    ------
    UnreachableTargetError
        If ``target`` is outside what the bounds can hold on the active
        elements.
    StagnantInnerLoopError
        If ``max_passes`` passes do not reach the target.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    if active_mask is None:
        active = np.ones(n, dtype=bool)
    else:
        active = np.asarray(active_mask, dtype=bool)
    lo, hi = bounds
    n_active = int(active.sum())
    attainable = (n_active * lo, n_active * hi)
    if not attainable[0] <= target <= attainable[1]:
        raise UnreachableTargetError(
            f"target mass {target:g} outside attainable range "
            f"[{attainable[0]:g}, {attainable[1]:g}] for {n_active} active elements"
        )

    merit = np.zeros(n)
    merit[active] = weights[active] ** exponent
    total = merit.sum()
    fallback = False
    if not np.isfinite(total) or total <= 0:
        merit[active] = 1.0
        total = float(n_active)
        fallback = True
        warnings.warn("all distribution weights vanished; falling back to uniform", RuntimeWarning)
    proportion = merit / total

    # The proportion is fixed for the whole loop, so filtering commutes
    # with the remaining-amount scaling and is hoisted out.
    spread = apply_filter(filter_op, proportion)
    x = np.zeros(n)
    remaining = float(target)
    passes = 0
    while remaining > inner_tolerance:
        if passes >= max_passes:
            raise StagnantInnerLoopError(
                f"distribution stuck after {passes} passes, remaining {remaining:g} of target {target:g}"
            )
        x += remaining * spread
        np.clip(x, lo, hi, out=x)
        x[~active] = lo
        remaining = target - x[active].sum()
        passes += 1
    return DistributionResult(density=x, remaining=remaining, passes=passes, uniform_fallback=fallback)


def _blend(previous: np.ndarray, optimized: np.ndarray, alpha: float) -> np.ndarray:
    return alpha * previous + (1.0 - alpha) * optimized


def ptos_step(
    rho: np.ndarray,
    von_mises_stress: np.ndarray,
    config: OptimizerConfig,
    filter_op: FilterOperator,
    active_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, DistributionResult]:
    """One stress-mode update: move the material amount toward the limit.

    If the maximum active von Mises stress exceeds the limit, the target
    amount is the current amount plus one move; otherwise minus one move.
    The new field is the proportional redistribution of that target
    (blended with the previous field when history_alpha > 0; the stress
    problem's tuned value is 0, which returns the redistribution as-is).
    """
    rho = np.asarray(rho, dtype=float)
    active = np.ones(rho.size, dtype=bool) if active_mask is None else np.asarray(active_mask, bool)
    current = rho[active].sum()
    move = config.move_per_element * active.sum()
    if von_mises_stress[active].max() > config.stress_limit:
        target = current + move
    else:
        target = current - move
    result = distribute(
        target,
        von_mises_stress,
        config.proportion_exponent,
        filter_op,
        config.density_bounds,
        active_mask=active,
        inner_tolerance=config.inner_tolerance,
    )
    rho_new = _blend(rho, result.density, config.history_alpha)
    rho_new[~active] = config.density_bounds[0]
    return rho_new, result


def ptoc_step(
    rho: np.ndarray,
    compliance: np.ndarray,
    target: float,
    config: OptimizerConfig,
    filter_op: FilterOperator,
    active_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, float, DistributionResult]:
    """One compliance-mode update: redistribute the fixed target amount.

    The redistribution is proportional to elemental compliance and
    blended with the previous field through the history coefficient:
    rho_new = alpha * rho_prev + (1 - alpha) * rho_opt. The returned
    change metric is max|rho_new - rho_prev|, which equals
    (1/alpha - 1) * max|rho_opt - rho_new| because
    rho_opt - rho_new = alpha * (rho_opt - rho_prev) while
    rho_new - rho_prev = (1 - alpha) * (rho_opt - rho_prev).
    """
    rho = np.asarray(rho, dtype=float)
    active = np.ones(rho.size, dtype=bool) if active_mask is None else np.asarray(active_mask, bool)
    result = distribute(
        target,
        compliance,
        config.proportion_exponent,
        filter_op,
        config.density_bounds,
        active_mask=active,
        inner_tolerance=config.inner_tolerance,
    )
    rho_new = _blend(rho, result.density, config.history_alpha)
    rho_new[~active] = config.density_bounds[0]
    change = float(np.abs(rho_new - rho).max())
    return rho_new, change, result


def run(
    problem: Problem,
    config: OptimizerConfig,
    progress: Callable[[IterationRecord], None] | None = None,
) -> RunResult:
    """Run the outer loop until the mode's stop rule fires.

    Each iteration solves the FE system for the current density field,
    records stress/compliance/volume, checks the stop rule, and performs
    one distribution step. Stress runs start from uniform density 0.5;
    compliance runs start from the uniform volume fraction (already
    satisfying the mass constraint). If ``max_iterations`` is reached the
    best-so-far field is returned with reason "max_iterations".
    """
    grid, material, bc = problem.grid, problem.material, problem.bc
    filter_op = problem.filter_op
    active = grid.active_mask
    n_active = grid.n_active
    lo, hi = config.density_bounds

    rho = np.full(grid.n_elements, lo)
    if config.mode == "stress":
        rho[active] = 0.5
    else:
        rho[active] = config.volume_fraction
    target_mass = None if config.mode == "stress" else n_active * config.volume_fraction

    model = FemModel(grid, material, bc)
    records: list[IterationRecord] = []
    reason = "max_iterations"
    change = np.inf

    for iteration in range(1, config.max_iterations + 1):
        moduli = interpolate_modulus(rho, material)
        solution = model.solve(moduli)
        stress = recover_stress(grid, solution, moduli, material.nu)
        comp = elemental_compliance(grid, solution, moduli, material)
        max_vm = float(stress.von_mises[active].max())
        if config.mode == "stress":
            metric = abs(max_vm - config.stress_limit)
            if config.stress_stop_relative:
                metric /= config.stress_limit
            stop = metric < config.stress_stop_tolerance
        else:
            metric = change
            stop = change < config.change_stop_tolerance
        record = IterationRecord(
            iteration=iteration,
            max_von_mises=max_vm,
            compliance=comp.total,
            volume_fraction=float(rho[active].mean()),
            metric=float(metric),
        )
        records.append(record)
        if progress is not None:
            progress(record)
        if stop and iteration > config.min_iterations:
            reason = "converged"
            break
        if config.mode == "stress":
            rho, dist = ptos_step(rho, stress.von_mises, config, filter_op, active)
        else:
            rho, change, dist = ptoc_step(rho, comp.elemental, target_mass, config, filter_op, active)
        record.remaining = dist.remaining

    moduli = interpolate_modulus(rho, material)
    solution = model.solve(moduli)
    return RunResult(
        density=rho,
        records=records,
        reason=reason,
        stress=recover_stress(grid, solution, moduli, material.nu),
        compliance=elemental_compliance(grid, solution, moduli, material),
        solution=solution,
    )
