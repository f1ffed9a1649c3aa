"""Outer-loop optimizer behavior on small problems."""
import numpy as np
import pytest

from ptopt.bench import setup_problem
from ptopt.filters import build_filter
from ptopt.grid import StructuredGrid
from ptopt.optimizers import (
    IterationRecord,
    OptimizerConfig,
    Problem,
    UnreachableTargetError,
    ptoc_step,
    ptos_step,
    run,
)
from ptopt.problems import ProblemSpec


def small_problem(nelx=12, nely=6, **spec_overrides) -> Problem:
    spec = ProblemSpec(kind="mbb", nelx=nelx, nely=nely,
                       stress_limit=spec_overrides.pop("stress_limit", 3.0),
                       volume_fraction=spec_overrides.pop("volume_fraction", 0.5),
                       **spec_overrides)
    return setup_problem(spec), spec


class TestPtosStep:
    def test_target_moves_by_material_amount(self):
        grid = StructuredGrid(120, 40)
        op = build_filter(grid, 1.0)
        rho = np.full(grid.n_elements, 0.5)  # current mass 2400
        config = OptimizerConfig.for_stress(1.08)
        over = np.full(grid.n_elements, 2.0)  # max stress above the limit
        new_rho, result = ptos_step(rho, over, config, op)
        assert new_rho.sum() == pytest.approx(2400 + 4.8, abs=0.001 + 1e-9)
        under = np.full(grid.n_elements, 0.5)
        new_rho, result = ptos_step(rho, under, config, op)
        assert new_rho.sum() == pytest.approx(2400 - 4.8, abs=0.001 + 1e-9)

    def test_no_history_returns_distribution(self):
        grid = StructuredGrid(4, 1)
        op = build_filter(grid, 1.0)
        rho = np.array([0.9, 0.1, 0.1, 0.1])
        stress = np.array([1.0, 1.0, 1.0, 1.0])
        config = OptimizerConfig.for_stress(10.0)  # below limit: remove material
        new_rho, result = ptos_step(rho, stress, config, op)
        assert new_rho == pytest.approx(result.density)  # alpha = 0


class TestPtocStep:
    def test_history_blend(self):
        grid = StructuredGrid(1, 1)
        op = build_filter(grid, 1.0)
        config = OptimizerConfig.for_compliance(0.6)
        rho_prev = np.array([0.2])
        new_rho, change, result = ptoc_step(rho_prev, np.array([1.0]), 0.6, config, op)
        assert result.density == pytest.approx([0.6])
        assert new_rho == pytest.approx([0.4])  # 0.5*0.2 + 0.5*0.6
        assert change == pytest.approx(0.2)

    def test_alpha_zero_no_history(self):
        grid = StructuredGrid(1, 1)
        op = build_filter(grid, 1.0)
        config = OptimizerConfig.for_compliance(0.6, history_alpha=0.0)
        new_rho, change, result = ptoc_step(np.array([0.2]), np.array([1.0]), 0.6, config, op)
        assert new_rho == pytest.approx(result.density)

    def test_change_metric_identity(self):
        # (1/alpha - 1) * max|opt - new| equals max|new - prev| because
        # opt - new = alpha*(opt - prev) and new - prev = (1-alpha)*(opt - prev)
        rng = np.random.default_rng(31)
        for alpha in (0.25, 0.5, 0.9):
            prev = rng.uniform(0, 1, 100)
            opt = rng.uniform(0, 1, 100)
            new = alpha * prev + (1 - alpha) * opt
            direct = np.abs(new - prev).max()
            listing_form = (1 / alpha - 1) * np.abs(opt - new).max()
            assert direct == pytest.approx(listing_form, abs=1e-12)


class TestRun:
    def test_compliance_run_conserves_mass(self):
        problem, spec = small_problem(volume_fraction=0.4)
        config = OptimizerConfig.for_compliance(0.4, max_iterations=80)
        result = run(problem, config)
        target = 0.4 * problem.grid.n_active
        for record in result.records:
            assert abs(record.volume_fraction * problem.grid.n_active - target) <= 2 * 0.001

    def test_bounds_hold_after_run(self):
        problem, spec = small_problem(volume_fraction=0.4)
        result = run(problem, OptimizerConfig.for_compliance(0.4, max_iterations=60))
        assert result.density.min() >= 0.0
        assert result.density.max() <= 1.0

    def test_deterministic_records(self):
        problem, _ = small_problem(volume_fraction=0.45)
        config = OptimizerConfig.for_compliance(0.45, max_iterations=70)
        r1 = run(problem, config)
        r2 = run(problem, config)
        assert len(r1.records) == len(r2.records)
        for a, b in zip(r1.records, r2.records):
            assert (a.iteration, a.max_von_mises, a.compliance, a.volume_fraction, a.metric) == (
                b.iteration, b.max_von_mises, b.compliance, b.volume_fraction, b.metric)
        assert (r1.density == r2.density).all()

    def test_saturated_compliance_target_stops_at_min_iterations(self):
        problem, _ = small_problem(nelx=8, nely=4, volume_fraction=1.0)
        config = OptimizerConfig.for_compliance(1.0)
        result = run(problem, config)
        assert result.reason == "converged"
        assert result.iterations == 51
        assert result.records[-1].metric == 0.0
        # solid up to the inner loop's mass tolerance
        assert result.density == pytest.approx(np.ones(32), abs=2e-3)

    def test_stress_mode_stop_consistency(self):
        problem, _ = small_problem(nelx=10, nely=5, stress_limit=2.0)
        config = OptimizerConfig.for_stress(2.0, max_iterations=400)
        result = run(problem, config)
        if result.reason == "converged":
            assert result.iterations > config.min_iterations
            assert result.records[-1].metric < config.stress_stop_tolerance
        else:
            assert result.iterations == 400

    def test_max_iterations_reason(self):
        problem, _ = small_problem(volume_fraction=0.4)
        result = run(problem, OptimizerConfig.for_compliance(0.4, max_iterations=5))
        assert result.reason == "max_iterations"
        assert result.iterations == 5

    def test_stress_run_unreachable_target_propagates(self):
        # a huge limit keeps removing material until the target drops
        # below what the bounds can hold
        problem, _ = small_problem(nelx=6, nely=3, stress_limit=1e9)
        config = OptimizerConfig.for_stress(1e9, max_iterations=2000)
        with pytest.raises(UnreachableTargetError):
            run(problem, config)

    def test_records_carry_inner_loop_remainder(self):
        problem, _ = small_problem(volume_fraction=0.4)
        result = run(problem, OptimizerConfig.for_compliance(0.4, max_iterations=10))
        assert all(r.remaining is not None for r in result.records[:-1])
        assert all(r.remaining <= 0.001 for r in result.records if r.remaining is not None)

    def test_final_fields_consistent(self):
        problem, _ = small_problem(volume_fraction=0.5)
        result = run(problem, OptimizerConfig.for_compliance(0.5, max_iterations=60))
        assert result.compliance.total == pytest.approx(
            problem.bc.loads @ result.solution.displacements, rel=1e-8)
        assert result.stress.von_mises.shape == (problem.grid.n_elements,)

    def test_progress_callback_sees_every_record(self):
        problem, _ = small_problem(volume_fraction=0.4)
        seen: list[IterationRecord] = []
        result = run(problem, OptimizerConfig.for_compliance(0.4, max_iterations=8), progress=seen.append)
        assert [r.iteration for r in seen] == [r.iteration for r in result.records]


class TestConfigValidation:
    def test_mode_required_fields(self):
        with pytest.raises(ValueError):
            OptimizerConfig(mode="stress")  # no stress limit
        with pytest.raises(ValueError):
            OptimizerConfig(mode="compliance")  # no volume fraction
        with pytest.raises(ValueError):
            OptimizerConfig(mode="both", stress_limit=1.0)

    def test_alpha_and_exponent_ranges(self):
        with pytest.raises(ValueError):
            OptimizerConfig.for_stress(1.0, history_alpha=1.0)
        with pytest.raises(ValueError):
            OptimizerConfig.for_stress(1.0, proportion_exponent=0.0)

    def test_defaults_per_mode(self):
        stress = OptimizerConfig.for_stress(1.08)
        assert stress.proportion_exponent == 2.0 and stress.history_alpha == 0.0
        compliance = OptimizerConfig.for_compliance(0.35)
        assert compliance.proportion_exponent == 1.0 and compliance.history_alpha == 0.5

    def test_log_line_format(self):
        record = IterationRecord(iteration=12, max_von_mises=1.2345, compliance=266.612,
                                 volume_fraction=0.351, metric=0.0123)
        assert record.format_line("stress") == "It:   12 Max_vms: 1.23 Comp:  266.61 Vol: 0.35 Res: 0.012"
        assert record.format_line("compliance") == "It:   12 Max_vms: 1.23 Comp:  266.61 Vol: 0.35 Ch: 0.012"
