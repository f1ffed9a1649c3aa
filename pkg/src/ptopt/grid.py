"""Structured-grid plane-stress FEM: mesh bookkeeping, element stiffness,
SIMP material interpolation, global assembly, and the linear solve.

The domain is a rectangle of square bilinear elements with unit thickness.
Nodes, degrees of freedom, and elements are numbered starting at the
top-left corner and proceeding down each column before moving right, so
element ``e`` at grid column ``ex`` and row ``ey`` has flat index
``ex * nely + ey`` and all per-element arrays use that order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SingularSystemError",
    "StructuredGrid",
    "MaterialModel",
    "BoundaryConditions",
    "FemSolution",
    "element_stiffness",
    "build_connectivity",
    "interpolate_modulus",
    "FemModel",
    "assemble_and_solve",
]

SOLVE_RTOL = 1e-9


class SingularSystemError(RuntimeError):
    """The constrained stiffness system could not be solved reliably."""


@dataclass(frozen=True, eq=False)
class StructuredGrid:
    """Rectangular element grid with an optional passive (pinned-void) mask.

    Parameters
    ----------
    nelx, nely : int
        Element counts along x and y.
    edge_length : float
        Side length of every square element. Affects recovered stresses
        only; the stiffness of a square plane-stress element is
        scale-invariant in 2-D.
    passive_mask : ndarray of bool, optional
        Flat per-element flags, True where the element is excluded from
        design and pinned at the lower density bound.
    """

    nelx: int
    nely: int
    edge_length: float = 1.0
    passive_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.nelx < 1 or self.nely < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.nelx}x{self.nely}")
        if self.edge_length <= 0:
            raise ValueError(f"edge_length must be positive, got {self.edge_length}")
        if self.passive_mask is not None:
            mask = np.asarray(self.passive_mask, dtype=bool)
            if mask.shape != (self.n_elements,):
                raise ValueError(
                    f"passive_mask has shape {mask.shape}, expected ({self.n_elements},)"
                )
            if mask.all():
                raise ValueError("passive_mask leaves no active elements")
            object.__setattr__(self, "passive_mask", mask)

    @property
    def n_elements(self) -> int:
        return self.nelx * self.nely

    @property
    def n_nodes(self) -> int:
        return (self.nelx + 1) * (self.nely + 1)

    @property
    def dof_count(self) -> int:
        return 2 * self.n_nodes

    @property
    def active_mask(self) -> np.ndarray:
        """Boolean flags of designable elements (flat, column-major order)."""
        if self.passive_mask is None:
            return np.ones(self.n_elements, dtype=bool)
        return ~self.passive_mask

    @property
    def n_active(self) -> int:
        return int(self.active_mask.sum())

    def to_matrix(self, field: np.ndarray) -> np.ndarray:
        """Reshape a flat per-element field to (nely, nelx) grid layout."""
        return np.asarray(field).reshape(self.nely, self.nelx, order="F")


@dataclass(frozen=True)
class MaterialModel:
    """Modified-SIMP material: E(rho) = e_min + rho**penal * (e0 - e_min)."""

    e0: float = 1.0
    e_min: float = 1e-9
    nu: float = 0.3
    penal: float = 3.0

    def __post_init__(self):
        if not self.e0 > self.e_min > 0:
            raise ValueError(f"need e0 > e_min > 0, got e0={self.e0}, e_min={self.e_min}")
        if not 0 <= self.nu < 0.5:
            raise ValueError(f"nu must be in [0, 0.5), got {self.nu}")
        if self.penal < 1:
            raise ValueError(f"penal must be >= 1, got {self.penal}")


@dataclass(frozen=True, eq=False)
class BoundaryConditions:
    """Fixed DOF set and dense nodal load vector for one load case."""

    fixed_dofs: np.ndarray
    loads: np.ndarray

    def __post_init__(self):
        fixed = np.unique(np.asarray(self.fixed_dofs, dtype=np.int64))
        loads = np.asarray(self.loads, dtype=float)
        if fixed.size == 0:
            raise ValueError("fixed_dofs must not be empty")
        if fixed.min() < 0 or fixed.max() >= loads.size:
            raise ValueError("fixed_dofs indices out of range for the load vector")
        object.__setattr__(self, "fixed_dofs", fixed)
        object.__setattr__(self, "loads", loads)

    @property
    def dof_count(self) -> int:
        return self.loads.size

    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.dof_count), self.fixed_dofs)


@dataclass(frozen=True, eq=False)
class FemSolution:
    """Nodal displacement vector; zero at every fixed DOF."""

    displacements: np.ndarray


def element_stiffness(material: MaterialModel) -> np.ndarray:
    """Unit-modulus stiffness of a square bilinear plane-stress element.

    Returns the symmetric 8x8 matrix to be scaled by the element Young's
    modulus at assembly time. Independent of the element edge length.
    """
    nu = material.nu
    a11 = np.array([[12, 3, -6, -3], [3, 12, 3, 0], [-6, 3, 12, -3], [-3, 0, -3, 12]])
    a12 = np.array([[-6, -3, 0, 3], [-3, -6, -3, -6], [0, -3, -6, 3], [3, -6, 3, -6]])
    b11 = np.array([[-4, 3, -2, 9], [3, -4, -9, 4], [-2, -9, -4, -3], [9, 4, -3, -4]])
    b12 = np.array([[2, -3, 4, -9], [-3, 2, 9, -2], [4, 9, 2, 3], [-9, -2, 3, 2]])
    ka = np.block([[a11, a12], [a12.T, a11]])
    kb = np.block([[b11, b12], [b12.T, b11]])
    return (ka + nu * kb) / ((1 - nu**2) * 24.0)


def build_connectivity(grid: StructuredGrid) -> np.ndarray:
    """Per-element global DOF indices, shape (n_elements, 8).

    Row ``e`` lists the element's corner DOFs in the order bottom-left,
    bottom-right, top-right, top-left (x then y at each corner), where
    "top" is grid row 0.
    """
    nely = grid.nely
    cols = np.arange(grid.nelx)
    rows = np.arange(nely)
    # top-left node of each element, elements in column-major order
    n1 = (cols[:, None] * (nely + 1) + rows[None, :]).ravel()
    offsets = np.array([0, 1, 2 * nely + 2, 2 * nely + 3, 2 * nely, 2 * nely + 1, -2, -1])
    return (2 * n1 + 2)[:, None] + offsets[None, :]


def interpolate_modulus(rho: np.ndarray, material: MaterialModel) -> np.ndarray:
    """Per-element Young's modulus e_min + rho**penal * (e0 - e_min)."""
    rho = np.asarray(rho, dtype=float)
    return material.e_min + rho**material.penal * (material.e0 - material.e_min)


class FemModel:
    """Reusable assembly/solve workspace for one grid + material + loads.

    Precomputes the connectivity table, triplet index vectors, and free
    DOF set so repeated solves only rebuild the value array.
    """

    def __init__(self, grid: StructuredGrid, material: MaterialModel, bc: BoundaryConditions):
        if bc.dof_count != grid.dof_count:
            raise ValueError(
                f"load vector has {bc.dof_count} DOFs, grid has {grid.dof_count}"
            )
        self.grid = grid
        self.material = material
        self.bc = bc
        self.ke = element_stiffness(material)
        self.edof = build_connectivity(grid)
        self._i = np.tile(self.edof, (1, 8)).ravel()
        self._j = np.repeat(self.edof, 8, axis=1).ravel()
        self._ke_flat = self.ke.ravel(order="F")
        self.free = bc.free_dofs()
        self._f_free = bc.loads[self.free]
        # free-DOF triplets with indices renumbered into the reduced system
        renumber = np.full(grid.dof_count, -1, dtype=np.int64)
        renumber[self.free] = np.arange(self.free.size)
        self._keep = (renumber[self._i] >= 0) & (renumber[self._j] >= 0)
        self._i_free = renumber[self._i[self._keep]]
        self._j_free = renumber[self._j[self._keep]]
        self._element_of_triplet = np.repeat(np.arange(grid.n_elements), 64)[self._keep]
        self._ke_kept = np.tile(self._ke_flat, grid.n_elements)[self._keep]

    def assemble(self, moduli: np.ndarray) -> sp.csc_matrix:
        """Global stiffness, symmetrized as (K + K.T) / 2."""
        vals = (np.asarray(moduli, dtype=float)[:, None] * self._ke_flat[None, :]).ravel()
        n = self.grid.dof_count
        k = sp.coo_matrix((vals, (self._i, self._j)), shape=(n, n)).tocsc()
        return (k + k.T) / 2.0

    def _assemble_free(self, moduli: np.ndarray) -> sp.csc_matrix:
        """Stiffness restricted to free DOFs, symmetrized."""
        vals = np.asarray(moduli, dtype=float)[self._element_of_triplet] * self._ke_kept
        n = self.free.size
        k = sp.coo_matrix((vals, (self._i_free, self._j_free)), shape=(n, n)).tocsc()
        return (k + k.T) / 2.0

    def solve(self, moduli: np.ndarray) -> FemSolution:
        """Solve K u = f on the free DOFs; fixed DOFs stay zero.

        Raises
        ------
        SingularSystemError
            If the factorization fails or the relative residual on the
            free system exceeds 1e-9.
        """
        moduli = np.asarray(moduli, dtype=float)
        if moduli.shape != (self.grid.n_elements,):
            raise ValueError(f"moduli has shape {moduli.shape}, expected ({self.grid.n_elements},)")
        if not (moduli > 0).all():
            raise SingularSystemError("all element moduli must be strictly positive")
        kff = self._assemble_free(moduli)
        u = np.zeros(self.grid.dof_count)
        f = self._f_free
        if f.size == 0:
            return FemSolution(u)
        try:
            with np.errstate(all="ignore"):
                uf = spla.splu(kff, permc_spec="MMD_AT_PLUS_A").solve(f)
        except RuntimeError as exc:  # SuperLU reports exactly singular factors
            raise SingularSystemError(
                f"factorization failed: {exc} "
                f"({self.free.size} free / {self.grid.dof_count} total DOFs)"
            ) from exc
        norm_f = np.linalg.norm(f)
        residual = np.linalg.norm(kff @ uf - f)
        if norm_f > 0:
            residual /= norm_f
        if not np.all(np.isfinite(uf)) or residual > SOLVE_RTOL:
            raise SingularSystemError(
                f"free-DOF solve failed: residual {residual:.3e} "
                f"({self.free.size} free / {self.grid.dof_count} total DOFs, "
                f"moduli range [{moduli.min():.3e}, {moduli.max():.3e}])"
            )
        u[self.free] = uf
        return FemSolution(u)


def assemble_and_solve(
    grid: StructuredGrid,
    bc: BoundaryConditions,
    moduli: np.ndarray,
    material: MaterialModel,
) -> FemSolution:
    """One-shot assemble-and-solve; see FemModel for the reusable form."""
    return FemModel(grid, material, bc).solve(moduli)
