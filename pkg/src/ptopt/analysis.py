"""Per-element field analysis: center-point stress recovery (von Mises),
elemental and total compliance, and the black-and-white contrast index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FemSolution, MaterialModel, StructuredGrid, build_connectivity, element_stiffness

__all__ = [
    "StressField",
    "ComplianceField",
    "strain_displacement_matrix",
    "plane_stress_matrix",
    "von_mises",
    "recover_stress",
    "elemental_compliance",
    "contrast_index",
]


def strain_displacement_matrix(edge_length: float) -> np.ndarray:
    """Shape-function derivative matrix B (3x8) of the square bilinear
    element, evaluated at the element center. Rows: eps_x, eps_y, gamma_xy.
    """
    b = np.array(
        [
            [-1, 0, 1, 0, 1, 0, -1, 0],
            [0, -1, 0, -1, 0, 1, 0, 1],
            [-1, -1, -1, 1, 1, 1, 1, -1],
        ],
        dtype=float,
    )
    return b / (2.0 * edge_length)


def plane_stress_matrix(nu: float) -> np.ndarray:
    """Unit-modulus plane-stress constitutive matrix (3x3)."""
    return (1.0 / (1.0 - nu**2)) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
    )


@dataclass(frozen=True, eq=False)
class StressField:
    """Center-point stress triples (sx, sy, sxy) and von Mises scalars."""

    components: np.ndarray  # (n_elements, 3)
    von_mises: np.ndarray  # (n_elements,)


@dataclass(frozen=True, eq=False)
class ComplianceField:
    """Elemental strain-energy contributions; total equals f.u."""

    elemental: np.ndarray  # (n_elements,)

    @property
    def total(self) -> float:
        return float(self.elemental.sum())


def von_mises(components: np.ndarray) -> np.ndarray:
    """Von Mises equivalent stress sqrt(sx^2 + sy^2 - sx*sy + 3*sxy^2).

    ``components`` holds (sx, sy, sxy) along the last axis.
    """
    c = np.asarray(components, dtype=float)
    sx, sy, sxy = c[..., 0], c[..., 1], c[..., 2]
    return np.sqrt(sx**2 + sy**2 - sx * sy + 3.0 * sxy**2)


def recover_stress(
    grid: StructuredGrid,
    solution: FemSolution,
    moduli: np.ndarray,
    nu: float,
) -> StressField:
    """Per-element stress at the geometric center: sigma_e = E_e * D B u_e.

    D is the unit-modulus plane-stress matrix; the element modulus is
    applied multiplicatively, so intermediate-density elements report the
    stress of the interpolated material, not the solid one.
    """
    edof = build_connectivity(grid)
    db = plane_stress_matrix(nu) @ strain_displacement_matrix(grid.edge_length)
    ue = solution.displacements[edof]  # (n, 8)
    components = (ue @ db.T) * np.asarray(moduli, dtype=float)[:, None]
    return StressField(components=components, von_mises=von_mises(components))


def elemental_compliance(
    grid: StructuredGrid,
    solution: FemSolution,
    moduli: np.ndarray,
    material: MaterialModel,
) -> ComplianceField:
    """Elemental compliance C_e = E_e * u_e.KE.u_e (unit-modulus KE)."""
    ke = element_stiffness(material)
    ue = solution.displacements[build_connectivity(grid)]
    ce = np.asarray(moduli, dtype=float) * np.einsum("ij,jk,ik->i", ue, ke, ue)
    return ComplianceField(elemental=ce)


def contrast_index(rho: np.ndarray, active_mask: np.ndarray | None = None) -> float:
    """Fraction of (active) elements with density below 0.01 or above 0.99."""
    rho = np.asarray(rho, dtype=float)
    if active_mask is not None:
        rho = rho[np.asarray(active_mask, dtype=bool)]
    if rho.size == 0:
        raise ValueError("contrast_index needs at least one element")
    return float(((rho < 0.01) | (rho > 0.99)).mean())
