"""Benchmark problem definitions: half MBB beam, cantilever beam, and
L bracket, each mapped to a structured grid plus fixed-DOF/load recipes.

All counts (ld, nelx, nely, rmin) are in element units regardless of the
element edge length; load and density limits are normalized.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import BoundaryConditions, MaterialModel, StructuredGrid

__all__ = ["InvalidSpecError", "ProblemSpec", "build_problem", "preset"]

KINDS = ("mbb", "cantilever", "lbracket")


class InvalidSpecError(ValueError):
    """Problem specification is inconsistent (sizes, counts, limits)."""


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark instance: geometry, material, loads, and constraints.

    For the L bracket, ``nelx``/``nely`` are the bounding-square edge
    (the long-edge count) and ``leg_width`` the short-edge count; the
    upper-right (nelx - leg_width)^2 block is passive void.
    """

    kind: str
    nelx: int
    nely: int
    leg_width: int | None = None  # L bracket only
    load_value: float = 1.0
    load_spread: int = 3  # nodes the load (and support, for mbb) spans
    edge_length: float = 1.0
    material: MaterialModel = MaterialModel()
    rmin: float = 1.5
    density_bounds: tuple[float, float] = (0.0, 1.0)
    stress_limit: float | None = None
    volume_fraction: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown problem kind {self.kind!r}, expected one of {KINDS}")
        if self.nelx < 1 or self.nely < 1:
            raise InvalidSpecError("element counts must be at least 1")
        if self.load_spread < 1:
            raise InvalidSpecError("load_spread must be at least 1")
        if self.kind == "lbracket":
            if self.leg_width is None or not 0 < self.leg_width < self.nelx:
                raise InvalidSpecError("lbracket needs 0 < leg_width < nelx")
            if self.nelx != self.nely:
                raise InvalidSpecError("lbracket uses a square bounding grid (nelx == nely)")

    def with_constraint(
        self,
        stress_limit: float | None = None,
        volume_fraction: float | None = None,
    ) -> "ProblemSpec":
        spec = self
        if stress_limit is not None:
            spec = replace(spec, stress_limit=stress_limit)
        if volume_fraction is not None:
            spec = replace(spec, volume_fraction=volume_fraction)
        return spec


def preset(kind: str) -> ProblemSpec:
    """Benchmark presets with their reference constraint values."""
    if kind == "mbb":
        return ProblemSpec(kind="mbb", nelx=120, nely=40, stress_limit=1.08, volume_fraction=0.35)
    if kind == "cantilever":
        return ProblemSpec(kind="cantilever", nelx=120, nely=60, stress_limit=0.57, volume_fraction=0.35)
    if kind == "lbracket":
        return ProblemSpec(
            kind="lbracket", nelx=100, nely=100, leg_width=40, stress_limit=1.05, volume_fraction=0.35
        )
    raise InvalidSpecError(f"unknown problem kind {kind!r}, expected one of {KINDS}")


def _mbb(spec: ProblemSpec) -> tuple[StructuredGrid, BoundaryConditions]:
    # Right half of the beam: x-symmetry on the left edge, roller support
    # (y only) under the last load_spread nodes of the bottom-right corner,
    # downward load spread over the first load_spread top-edge nodes.
    nelx, nely, ld = spec.nelx, spec.nely, spec.load_spread
    if ld > nelx + 1 or ld > nely + 1:
        raise InvalidSpecError(f"load_spread {ld} does not fit a {nelx}x{nely} mbb grid")
    grid = StructuredGrid(nelx, nely, spec.edge_length)
    n_nodes = grid.n_nodes
    left_x = 2 * np.arange(nely + 1)
    support_y = 2 * np.arange(n_nodes - ld, n_nodes) + 1
    fixed = np.union1d(left_x, support_y)
    loads = np.zeros(grid.dof_count)
    top_nodes = np.arange(ld) * (nely + 1)
    loads[2 * top_nodes + 1] = -spec.load_value / ld
    return grid, BoundaryConditions(fixed_dofs=fixed, loads=loads)


def _cantilever(spec: ProblemSpec) -> tuple[StructuredGrid, BoundaryConditions]:
    # Clamped left edge; downward (shear) load centered on the right edge.
    nelx, nely, ld = spec.nelx, spec.nely, spec.load_spread
    if ld > nely + 1:
        raise InvalidSpecError(f"load_spread {ld} exceeds the right edge ({nely + 1} nodes)")
    grid = StructuredGrid(nelx, nely, spec.edge_length)
    fixed = np.arange(2 * (nely + 1))
    loads = np.zeros(grid.dof_count)
    start = (nely + 1 - ld) // 2
    right_nodes = nelx * (nely + 1) + start + np.arange(ld)
    loads[2 * right_nodes + 1] = -spec.load_value / ld
    return grid, BoundaryConditions(fixed_dofs=fixed, loads=loads)


def _lbracket(spec: ProblemSpec) -> tuple[StructuredGrid, BoundaryConditions]:
    # Square bounding grid with the upper-right block void. The vertical
    # leg (left leg_width columns) is clamped along its top edge; the load
    # acts downward on the horizontal leg's top surface, on the
    # load_spread nodes hugging the top of the rightmost edge.
    n, leg, ld = spec.nelx, spec.leg_width, spec.load_spread
    corner = n - leg  # first element row of the horizontal leg
    if ld > n - leg + 1:
        raise InvalidSpecError(
            f"load_spread {ld} exceeds the horizontal leg's top surface ({n - leg + 1} nodes)"
        )
    ex, ey = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    passive = ((ex >= leg) & (ey < corner)).ravel()
    grid = StructuredGrid(n, n, spec.edge_length, passive_mask=passive)
    top_nodes = np.arange(leg + 1) * (n + 1)
    fixed = np.sort(np.concatenate([2 * top_nodes, 2 * top_nodes + 1]))
    loads = np.zeros(grid.dof_count)
    load_nodes = np.arange(n - ld + 1, n + 1) * (n + 1) + corner
    loads[2 * load_nodes + 1] = -spec.load_value / ld
    return grid, BoundaryConditions(fixed_dofs=fixed, loads=loads)


def build_problem(spec: ProblemSpec) -> tuple[StructuredGrid, BoundaryConditions]:
    """Grid and boundary conditions for a benchmark spec."""
    if spec.kind == "mbb":
        return _mbb(spec)
    if spec.kind == "cantilever":
        return _cantilever(spec)
    return _lbracket(spec)
