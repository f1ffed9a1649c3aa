"""Optimality-criteria compliance minimizer used as a gradient baseline.

Shares the FE core and the cone filter operator with the proportional
optimizers so that comparison runs differ only in the update rule: a
multiplicative density update driven by compliance sensitivities, with a
bisected Lagrange multiplier enforcing the volume constraint.

Two filtering schemes are available. The default, classic sensitivity
filtering, smooths the compliance gradient with the cone weights and
updates the densities directly; it reproduces the behavior of the
comparison baseline (compliance and contrast track the proportional
compliance runs closely). The alternative density scheme treats the
filter as a design-to-physical map, chains the gradient through it, and
enforces the volume constraint on the filtered field.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import elemental_compliance, recover_stress
from .filters import FilterOperator, apply_filter
from .grid import (
    FemModel,
    FemSolution,
    MaterialModel,
    StructuredGrid,
    build_connectivity,
    element_stiffness,
    interpolate_modulus,
)
from .optimizers import IterationRecord, Problem, RunResult

__all__ = [
    "BisectionFailureError",
    "OcConfig",
    "compliance_sensitivities",
    "filter_sensitivities",
    "chain_through_filter",
    "oc_update",
    "run_oc",
]

_BISECTION_CAP = 500


class BisectionFailureError(RuntimeError):
    """The Lagrange-multiplier bisection could not meet the volume target."""


@dataclass(frozen=True)
class OcConfig:
    """Optimality-criteria controls.

    ``move_limit`` bounds the per-iteration design change, ``damping``
    is the exponent on the sensitivity ratio, and the bisection runs
    until the multiplier interval is within ``bisection_tol`` relative
    width (then further until the volume is met within 1e-3 per element).
    """

    volume_fraction: float
    move_limit: float = 0.2
    damping: float = 0.5
    bisection_tol: float = 1e-3
    filtering: str = "sensitivity"  # "sensitivity" or "density"
    density_bounds: tuple[float, float] = (0.0, 1.0)
    change_stop_tolerance: float = 0.01
    min_iterations: int = 50
    max_iterations: int = 2000

    def __post_init__(self):
        if not 0 < self.move_limit <= 1:
            raise ValueError(f"move_limit must be in (0, 1], got {self.move_limit}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")
        if self.filtering not in ("sensitivity", "density"):
            raise ValueError(f"filtering must be 'sensitivity' or 'density', got {self.filtering!r}")
        lo, hi = self.density_bounds
        if not lo < self.volume_fraction <= hi:
            raise ValueError("volume_fraction must lie within the density bounds")


def compliance_sensitivities(
    grid: StructuredGrid,
    solution: FemSolution,
    rho: np.ndarray,
    material: MaterialModel,
) -> np.ndarray:
    """dC/drho_e = -penal * rho**(penal-1) * (e0 - e_min) * u_e.KE.u_e.

    The self-adjoint form of the compliance gradient under modified SIMP;
    always non-positive. No filter chain is applied here.
    """
    ke = element_stiffness(material)
    ue = solution.displacements[build_connectivity(grid)]
    energy = np.einsum("ij,jk,ik->i", ue, ke, ue)
    rho = np.asarray(rho, dtype=float)
    return -material.penal * rho ** (material.penal - 1) * (material.e0 - material.e_min) * energy


def filter_sensitivities(
    filter_op: FilterOperator,
    rho: np.ndarray,
    sensitivities: np.ndarray,
) -> np.ndarray:
    """Classic sensitivity smoothing: W @ (rho * dc) / max(1e-3, rho)."""
    rho = np.asarray(rho, dtype=float)
    smoothed = apply_filter(filter_op, rho * np.asarray(sensitivities, dtype=float))
    return smoothed / np.maximum(1e-3, rho)


def chain_through_filter(filter_op: FilterOperator, sensitivities: np.ndarray) -> np.ndarray:
    """Pull a physical-field gradient back to the design field.

    For physical = W @ design with W the row-normalized filter, the chain
    rule gives d/d(design) = W.T @ d/d(physical).
    """
    return filter_op.weights.T @ np.asarray(sensitivities, dtype=float)


def oc_update(
    rho: np.ndarray,
    sensitivities: np.ndarray,
    volume_target: float,
    config: OcConfig,
    filter_op: FilterOperator | None = None,
    active_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One multiplicative update; returns (design, physical) fields.

    The candidate rho * (-dC/drho / lam)**damping is clamped to the move
    limit and the density bounds; lam is bisected until the volume target
    is met within 1e-3 per active element. When ``filter_op`` is given
    (density scheme) the physical field is the filtered candidate and the
    volume constraint acts on it; otherwise physical == design.
    """
    rho = np.asarray(rho, dtype=float)
    sens = np.asarray(sensitivities, dtype=float)
    active = np.ones(rho.size, dtype=bool) if active_mask is None else np.asarray(active_mask, bool)
    lo, hi = config.density_bounds
    ratio = np.maximum(-sens, 0.0)
    vol_tol = 1e-3 * active.sum()

    def candidate(lam: float) -> tuple[np.ndarray, np.ndarray]:
        step = rho * (ratio / lam) ** config.damping
        step = np.maximum(rho - config.move_limit, np.minimum(rho + config.move_limit, step))
        step = np.clip(step, lo, hi)
        step[~active] = lo
        if filter_op is None:
            return step, step
        physical = apply_filter(filter_op, step)
        physical[~active] = lo
        return step, physical

    l1, l2 = 0.0, 1e9
    design = physical = rho
    for _ in range(_BISECTION_CAP):
        lam = 0.5 * (l1 + l2)
        design, physical = candidate(lam)
        volume = physical[active].sum()
        if volume > volume_target:
            l1 = lam
        else:
            l2 = lam
        interval_tight = (l2 - l1) / (l1 + l2) < config.bisection_tol
        if interval_tight and abs(volume - volume_target) <= vol_tol:
            return design, physical
    raise BisectionFailureError(
        f"volume target {volume_target:g} not met within {vol_tol:g} "
        f"(got {physical[active].sum():g}) after {_BISECTION_CAP} bisection steps"
    )


def run_oc(
    problem: Problem,
    config: OcConfig,
    progress: Callable[[IterationRecord], None] | None = None,
) -> RunResult:
    """OC outer loop with the same scaffolding as the proportional runs.

    Starts from the uniform volume fraction and stops once the maximum
    design change falls below the tolerance (after the minimum iteration
    count) or the iteration cap is hit. Records and the returned density
    describe the field the FE system saw.
    """
    grid, material = problem.grid, problem.material
    filter_op = problem.filter_op
    active = grid.active_mask
    lo = config.density_bounds[0]
    density_scheme = config.filtering == "density"
    design = np.full(grid.n_elements, lo)
    design[active] = config.volume_fraction
    if density_scheme:
        physical = apply_filter(filter_op, design)
        physical[~active] = lo
    else:
        physical = design
    volume_target = config.volume_fraction * grid.n_active

    model = FemModel(grid, material, problem.bc)
    records: list[IterationRecord] = []
    reason = "max_iterations"
    change = np.inf

    for iteration in range(1, config.max_iterations + 1):
        moduli = interpolate_modulus(physical, material)
        solution = model.solve(moduli)
        stress = recover_stress(grid, solution, moduli, material.nu)
        comp = elemental_compliance(grid, solution, moduli, material)
        record = IterationRecord(
            iteration=iteration,
            max_von_mises=float(stress.von_mises[active].max()),
            compliance=comp.total,
            volume_fraction=float(physical[active].mean()),
            metric=float(change),
        )
        records.append(record)
        if progress is not None:
            progress(record)
        if change < config.change_stop_tolerance and iteration > config.min_iterations:
            reason = "converged"
            break
        sens = compliance_sensitivities(grid, solution, physical, material)
        if density_scheme:
            sens = chain_through_filter(filter_op, sens)
            new_design, new_physical = oc_update(design, sens, volume_target, config, filter_op, active)
        else:
            sens = filter_sensitivities(filter_op, physical, sens)
            new_design, new_physical = oc_update(design, sens, volume_target, config, None, active)
        change = float(np.abs(new_design - design).max())
        design, physical = new_design, new_physical

    moduli = interpolate_modulus(physical, material)
    solution = model.solve(moduli)
    return RunResult(
        density=physical,
        records=records,
        reason=reason,
        stress=recover_stress(grid, solution, moduli, material.nu),
        compliance=elemental_compliance(grid, solution, moduli, material),
        solution=solution,
    )
