"""Explorer: the perturbed homogeneous family, its objectives, the search and the scan."""

from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from qgaf import explorer as ex
from qgaf import funcalg as fa

coarse = fa.log_grid(1e-2, 1.0, 32)


def quick(**kw):
    base = dict(restarts=2, max_iter=150, grid=coarse)
    base.update(kw)
    return ex.SearchConfig(**base)


class TestFamily:
    @pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
    def test_zero_perturbation_is_homogeneous(self, a):
        pt = ex.FamilyPoint(a, (0.0, 0.0, 0.0, 0.0))
        xs = coarse.points
        assert np.allclose(pt.g()(xs), a * xs, rtol=1e-12, atol=0)
        assert ex.objective_eval(pt, ex.SearchConfig()) <= 1e-15

    def test_single_harmonic_leaves_a_residual(self):
        pt = ex.FamilyPoint(0.5, (0.1, 0.0, 0.0, 0.0))
        assert ex.objective_eval(pt, ex.SearchConfig()) > 1e-4

    def test_amplitude_at_the_bound_stays_in_the_cone(self):
        pt = ex.FamilyPoint(0.5, (0.15, 0.0, 0.0, 0.0))
        assert pt.feasible(0.15) and pt.periodic().certified_positive()
        value = ex.objective_eval(pt, ex.SearchConfig())
        assert math.isfinite(value) and value > 0
        rep = fa.cone_check(pt.g(), "pos", coarse, strict=True)
        assert rep.strict

    def test_outside_the_chart_is_infinite(self):
        assert ex.objective_eval(ex.FamilyPoint(0.5, (0.3, 0.0)), ex.SearchConfig()) == math.inf
        assert ex.objective_eval(ex.FamilyPoint(0.99, (0.0,)), ex.SearchConfig()) == math.inf


class TestSearch:
    def test_default_shape_finds_nothing(self):
        out = ex.search(quick())
        assert out.verdict == ex.VERDICT_NONE
        assert out.best_residual > ex.VERDICT_THRESHOLD
        assert out.best.sup_norm >= quick().delta - 1e-12

    def test_deterministic_for_a_seed(self):
        a, b = ex.search(quick()), ex.search(quick())
        assert a.best_residual == b.best_residual
        assert a.trace_csv() == b.trace_csv()

    def test_degenerate_configuration_collapses_to_homogeneous(self):
        out = ex.search(quick(coeffs=1, amplitude=0.0, delta=0.0))
        assert out.best_residual <= 1e-15
        assert out.best.coeffs == (0.0,)

    def test_branch_sum_objective_finds_the_known_solution(self):
        out = ex.search(quick(objective="eq12", coeffs=1, amplitude=0.0, delta=0.0))
        assert out.best_residual <= 1e-15

    def test_report_carries_the_caveats(self):
        d = ex.search(quick()).to_dict()
        assert "not prove" in d["evidence_note"]
        assert d["verdict_threshold"] == ex.VERDICT_THRESHOLD
        assert d["config"]["seed"] == 42

    def test_trace_columns(self):
        rows = list(csv.reader(io.StringIO(ex.search(quick(restarts=1)).trace_csv())))
        assert rows[0] == ["restart", "iteration", "objective", "residual"]
        assert len(rows) > 2


class TestNelderMead:
    def test_quadratic_bowl(self):
        fun = lambda t: float(np.sum((t - np.array([1.0, -2.0])) ** 2))
        run = ex.nelder_mead(fun, np.zeros(2), np.full(2, 0.5), ex.SearchConfig())
        assert run.converged
        assert np.allclose(run.best, [1.0, -2.0], atol=1e-6)


class TestScan:
    def test_zero_amplitude(self):
        assert ex.perturbation_scan(0.5, [0.0])[0][1] <= 1e-15

    def test_residuals_grow_with_amplitude(self):
        rows = ex.perturbation_scan(0.5, [1e-3, 1e-2, 1e-1])
        values = [r for _, r in rows]
        assert all(v > 0 for v in values)
        assert values == sorted(values)

    @pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
    def test_scan_csv(self, a):
        text = ex.scan_csv(ex.perturbation_scan(a, [0.0, 0.05]))
        rows = list(csv.reader(io.StringIO(text)))
        assert len(rows) == 3

    def test_amplitude_beyond_the_chart(self):
        with pytest.raises(ValueError):
            ex.perturbation_scan(0.5, [1.5])
