"""Artifact writers: text grids, PGM images, logs, summaries."""
import numpy as np
import pytest

from ptopt.grid import StructuredGrid
from ptopt.optimizers import IterationRecord
from ptopt.outputs import write_csv, write_field_pgm, write_field_txt, write_log, write_summary


@pytest.fixture
def grid():
    return StructuredGrid(4, 3)


@pytest.fixture
def field(grid):
    return np.linspace(0.0, 1.0, grid.n_elements)


class TestFieldTxt:
    def test_roundtrip(self, tmp_path, grid, field):
        path = tmp_path / "density.txt"
        write_field_txt(path, grid, field)
        back = np.loadtxt(path)
        assert back.shape == (3, 4)
        assert back == pytest.approx(grid.to_matrix(field), rel=1e-9)

    def test_grid_layout(self, tmp_path, grid):
        # element e = column*nely + row; row-major lines follow grid rows
        field = np.arange(12, dtype=float)
        path = tmp_path / "f.txt"
        write_field_txt(path, grid, field)
        first_line = path.read_text().splitlines()[0].split()
        assert [float(v) for v in first_line] == [0.0, 3.0, 6.0, 9.0]

    def test_byte_identical_rewrites(self, tmp_path, grid, field):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        write_field_txt(a, grid, field)
        write_field_txt(b, grid, field)
        assert a.read_bytes() == b.read_bytes()


class TestPgm:
    def test_header_and_size(self, tmp_path, grid, field):
        path = tmp_path / "density.pgm"
        write_field_pgm(path, grid, field)
        data = path.read_bytes()
        assert data.startswith(b"P5\n4 3\n255\n")
        assert len(data) == len(b"P5\n4 3\n255\n") + 12

    def test_flipped_gray_map(self, tmp_path, grid):
        # maximum value renders black (0), zero renders white (255)
        field = np.zeros(12)
        field[5] = 2.0
        path = tmp_path / "f.pgm"
        write_field_pgm(path, grid, field)
        pixels = np.frombuffer(path.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8)
        assert pixels.min() == 0 and pixels.max() == 255
        matrix = pixels.reshape(3, 4)
        assert matrix[2, 1] == 0  # element 5 = column 1, row 2

    def test_zero_field_is_white(self, tmp_path, grid):
        path = tmp_path / "z.pgm"
        write_field_pgm(path, grid, np.zeros(12))
        pixels = np.frombuffer(path.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8)
        assert (pixels == 255).all()


class TestLogAndSummary:
    def test_log_lines(self, tmp_path):
        records = [
            IterationRecord(iteration=1, max_von_mises=1.5, compliance=300.0,
                            volume_fraction=0.5, metric=np.inf),
            IterationRecord(iteration=2, max_von_mises=1.2, compliance=290.0,
                            volume_fraction=0.49, metric=0.031),
        ]
        path = tmp_path / "log.txt"
        write_log(path, records, "compliance")
        lines = path.read_text().splitlines()
        assert lines == [r.format_line("compliance") for r in records]

    def test_summary_keys(self, tmp_path):
        path = tmp_path / "summary.txt"
        write_summary(path, {"problem": "mbb", "iterations": 170, "compliance": 266.609374})
        text = path.read_text()
        assert "problem = mbb" in text
        assert "iterations = 170" in text
        assert "compliance = 266.609" in text

    def test_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["a", "b"], [[1, 2.5], ["x", 3]])
        assert path.read_text() == "a,b\n1,2.5\nx,3\n"
