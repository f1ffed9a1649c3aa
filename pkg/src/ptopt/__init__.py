"""Proportional topology optimization on structured 2-D plane-stress grids.

Volume minimization under a maximum von Mises stress constraint and
compliance minimization under a volume constraint, both driven by
proportional material redistribution, plus an optimality-criteria
baseline and a benchmark harness (half MBB beam, cantilever, L bracket).
"""
from .analysis import (
    ComplianceField,
    StressField,
    contrast_index,
    elemental_compliance,
    recover_stress,
    von_mises,
)
from .bench import (
    AlternationResult,
    RunSummary,
    SweepRow,
    run_alternation,
    run_benchmark,
    run_compare,
    run_sweep,
    setup_problem,
)
from .filters import FilterOperator, apply_filter, build_filter
from .grid import (
    BoundaryConditions,
    FemModel,
    FemSolution,
    MaterialModel,
    SingularSystemError,
    StructuredGrid,
    assemble_and_solve,
    build_connectivity,
    element_stiffness,
    interpolate_modulus,
)
from .oc import (
    BisectionFailureError,
    OcConfig,
    chain_through_filter,
    compliance_sensitivities,
    filter_sensitivities,
    oc_update,
    run_oc,
)
from .optimizers import (
    IterationRecord,
    OptimizerConfig,
    Problem,
    RunResult,
    StagnantInnerLoopError,
    UnreachableTargetError,
    distribute,
    ptoc_step,
    ptos_step,
    run,
)
from .problems import InvalidSpecError, ProblemSpec, build_problem, preset

__version__ = "0.1.0"
