"""Artifact writers: ASCII field grids, grayscale PGM images, iteration
logs, and key/value summaries. All output is locale-independent and
byte-stable across reruns of the same inputs.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import StructuredGrid
from .optimizers import IterationRecord

__all__ = [
    "write_field_txt",
    "write_field_pgm",
    "write_log",
    "write_summary",
    "write_csv",
]


def write_field_txt(path: str | Path, grid: StructuredGrid, field: np.ndarray) -> None:
    """One text line per grid row, space-separated scientific notation."""
    matrix = grid.to_matrix(field)
    lines = [" ".join(f"{v:.9e}" for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def write_field_pgm(path: str | Path, grid: StructuredGrid, field: np.ndarray) -> None:
    """8-bit binary PGM, normalized by the field maximum with a flipped
    gray map (maximum value renders black, zero renders white)."""
    matrix = grid.to_matrix(field)
    peak = matrix.max()
    scaled = matrix / peak if peak > 0 else np.zeros_like(matrix)
    gray = (255 - np.rint(255 * scaled)).astype(np.uint8)
    header = f"P5\n{grid.nelx} {grid.nely}\n255\n".encode("ascii")
    Path(path).write_bytes(header + gray.tobytes())


def write_log(path: str | Path, records: list[IterationRecord], mode: str) -> None:
    """Iteration log, one formatted line per outer iteration."""
    lines = [record.format_line(mode) for record in records]
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary(path: str | Path, entries: dict) -> None:
    """Plain ``key = value`` record."""
    lines = [f"{key} = {_fmt(value)}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(cell) for cell in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
