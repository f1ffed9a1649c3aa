"""Cone-weighted density filter: sparse neighborhood averaging with
row-normalized weights, built once per grid and reused every iteration.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
import scipy.sparse as sp

from .grid import StructuredGrid

__all__ = ["FilterOperator", "build_filter", "apply_filter"]


@dataclass(frozen=True, eq=False)
class FilterOperator:
    """Row-stochastic neighborhood-averaging operator.

    ``raw`` holds the unnormalized cone weights max(0, radius - r_ij);
    ``weights`` is ``raw`` with each row divided by its own sum.
    """

    weights: sp.csr_matrix
    raw: sp.csr_matrix
    radius: float

    @property
    def n_elements(self) -> int:
        return self.weights.shape[0]


def build_filter(grid: StructuredGrid, rmin: float) -> FilterOperator:
    """Cone filter over the square neighborhood of half-width ceil(rmin)-1.

    The weight of the pair (i, j) is max(0, rmin - r_ij) with r_ij the
    center-to-center distance in element units; that is the full support
    of the cone, since any element outside the square is at least
    ceil(rmin) >= rmin away.
    """
    if rmin <= 0:
        raise ValueError(f"filter radius must be positive, got {rmin}")
    nelx, nely = grid.nelx, grid.nely
    half = ceil(rmin) - 1
    ex = np.arange(nelx)
    ey = np.arange(nely)
    rows_i: list[np.ndarray] = []
    rows_j: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for di in range(-half, half + 1):
        for dj in range(-half, half + 1):
            w = rmin - np.hypot(di, dj)
            if w <= 0:
                continue
            cx = ex[(ex + di >= 0) & (ex + di < nelx)]
            cy = ey[(ey + dj >= 0) & (ey + dj < nely)]
            if cx.size == 0 or cy.size == 0:
                continue
            e1 = (cx[:, None] * nely + cy[None, :]).ravel()
            e2 = ((cx[:, None] + di) * nely + (cy[None, :] + dj)).ravel()
            rows_i.append(e1)
            rows_j.append(e2)
            vals.append(np.full(e1.size, w))
    n = grid.n_elements
    raw = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(rows_j))),
        shape=(n, n),
    ).tocsr()
    row_sums = np.asarray(raw.sum(axis=1)).ravel()
    weights = sp.diags(1.0 / row_sums) @ raw
    return FilterOperator(weights=weights.tocsr(), raw=raw, radius=float(rmin))


def apply_filter(filter_op: FilterOperator, field: np.ndarray) -> np.ndarray:
    """Row-stochastic averaging; output_i is a convex combination of the
    inputs in the neighborhood of i, so bounds are preserved."""
    field = np.asarray(field, dtype=float)
    if field.shape != (filter_op.n_elements,):
        raise ValueError(
            f"field has shape {field.shape}, expected ({filter_op.n_elements},)"
        )
    return filter_op.weights @ field
