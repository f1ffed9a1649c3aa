import numpy as np
import pytest

from ptopt.grid import BoundaryConditions, MaterialModel, StructuredGrid


@pytest.fixture
def material():
    return MaterialModel()


@pytest.fixture
def single_element():
    """1x1 grid clamped on the left edge, unit x-load on both right nodes."""
    grid = StructuredGrid(1, 1)
    # nodes: 0 top-left, 1 bottom-left, 2 top-right, 3 bottom-right
    fixed = np.array([0, 1, 2, 3])
    loads = np.zeros(grid.dof_count)
    loads[[4, 6]] = 1.0
    return grid, BoundaryConditions(fixed_dofs=fixed, loads=loads)


def small_mbb(nelx=6, nely=4, ld=3):
    """Half-beam recipe on a small grid, matching the benchmark layout."""
    from ptopt.problems import ProblemSpec, build_problem

    spec = ProblemSpec(kind="mbb", nelx=nelx, nely=nely, load_spread=ld,
                       stress_limit=1.0, volume_fraction=0.5)
    return build_problem(spec)
