"""Abel conjugacies, periodic displacements, branches and the fixed-point/zero pairing."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgaf import abel
from qgaf import funcalg as fa
from qgaf import solutions as so
from qgaf.errors import AbelError, ConeViolation, MonotonicityError, SpecError

HALF = fa.Linear(0.5, fa.POSITIVE)
grid = fa.log_grid(1e-3, 1e3, 257)


def rational_map():
    return fa.Closed(lambda x: x * (1 + x) / (2 + x), fa.POSITIVE, "x(1+x)/(2+x)")


def wavy(period=1.0, amp=0.3):
    return abel.PeriodicFunction.harmonic(period, period, [0.0, amp * period])


class TestPeriodicFunction:
    def test_periodicity_and_harmonics(self):
        P = abel.PeriodicFunction.harmonic(2.0, 1.0, [0.5, 0.25])
        assert P(0.0) == pytest.approx(1.5)
        assert P(0.5) == pytest.approx(1.25)
        us = np.linspace(-3.0, 3.0, 41)
        assert np.allclose(P(us + 2.0), P(us), atol=1e-14)

    def test_table_wraps_around(self):
        P = abel.PeriodicFunction(1.0, samples=[0.0, 1.0, 2.0, 1.0])
        assert P(0.125) == pytest.approx(0.5)
        assert P(0.875) == pytest.approx(0.5)
        assert P(-0.25) == pytest.approx(1.0)
        assert P.positivity_bound() == 0.0

    def test_positivity_certificate(self):
        assert wavy().certified_positive()
        assert not abel.PeriodicFunction.harmonic(1.0, 0.2, [0.0, 0.3]).certified_positive()
        assert abel.PeriodicFunction.const(1.0, 0.4).is_constant

    def test_json_round_trip(self):
        for P in (wavy(), abel.PeriodicFunction(1.0, samples=[1.0, 2.0, 3.0])):
            again = abel.PeriodicFunction.from_json(json.loads(json.dumps(P.to_json())))
            us = np.linspace(0, 1, 17)
            assert np.array_equal(P(us), again(us))

    def test_unknown_keys_rejected(self):
        with pytest.raises(SpecError):
            abel.PeriodicFunction.from_json({"period": 1.0, "phase": 0.2})


class TestSolveAbel:
    def test_log_gauge_is_minus_log(self):
        c = abel.solve_abel(HALF, math.log(2.0), 1.0, "log")
        xs = grid.points
        assert np.allclose(c.alpha(xs), -np.log(xs), rtol=0, atol=1e-14)
        assert c.abel_residual(grid).sup <= 1e-14

    def test_custom_seed_matching_minus_log(self):
        seed = fa.Closed(lambda x: -np.log(x), fa.POSITIVE, "-ln")
        c = abel.solve_abel(HALF, math.log(2.0), 1.0, seed)
        xs = grid.points
        assert np.allclose(c.alpha(xs), -np.log(xs), rtol=0, atol=1e-12)

    def test_linear_seed_on_half(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        xs = grid.points
        assert not np.allclose(c.alpha(xs), -np.log(xs) / math.log(2.0))
        assert c.abel_residual(grid).sup <= 1e-9
        assert np.allclose(abel.reconstruct_g(c)(xs), 0.5 * xs, rtol=1e-9, atol=0)

    def test_rational_map(self):
        g = rational_map()
        sub = fa.log_grid(1e-2, 1e2, 129)
        c = abel.solve_abel(g, 1.0, abel.balanced_base_point(g, sub.min, sub.max))
        assert c.abel_residual(sub).sup <= 1e-9

    def test_alpha_inverse_round_trip(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        us = np.linspace(-8.0, 8.0, 97)
        assert np.allclose(c.alpha(c.alpha_inverse(us)), us, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.1, 3.0))
    def test_reconstruction_of_linear_maps(self, a, omega):
        c = abel.log_conjugacy(a, omega)
        xs = grid.points
        assert np.allclose(abel.reconstruct_g(c)(xs), a * xs, rtol=1e-12, atol=0)

    def test_rejects_maps_outside_the_cone(self):
        with pytest.raises(ConeViolation):
            abel.solve_abel(fa.Linear(1.5, fa.POSITIVE))
        with pytest.raises(MonotonicityError):
            abel.solve_abel(fa.Closed(lambda x: 0.5 * x * (1 + 0.9 * np.sin(x)), fa.POSITIVE))

    def test_iteration_cap_is_reported(self):
        c = abel.solve_abel(fa.Linear(0.99, fa.POSITIVE), 1.0, 1.0, "linear", max_steps=50)
        with pytest.raises(AbelError):
            c.alpha(1e-6)

    def test_json_round_trip(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        again = abel.AbelConjugacy.from_json(json.loads(json.dumps(c.to_json())))
        xs = grid.points
        assert np.array_equal(c.alpha(xs), again.alpha(xs))

    def test_json_rejects_unknown_keys(self):
        spec = abel.solve_abel(HALF).to_json()
        spec["colour"] = "red"
        with pytest.raises(SpecError):
            abel.AbelConjugacy.from_json(spec)


class TestBranches:
    def test_period_constant_gives_g(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        h = abel.build_branch(c, abel.PeriodicFunction.const(1.0, 1.0))
        xs = grid.points
        assert np.allclose(h(xs), 0.5 * xs, rtol=1e-9, atol=0)

    @pytest.mark.parametrize("a,p", [(0.3, 0.5), (0.6, 2.0)])
    def test_constant_displacement_gives_homogeneous_branch(self, a, p):
        c = abel.log_conjugacy(1 - a)
        h = abel.build_branch(c, abel.PeriodicFunction.const(1.0, p))
        xs = grid.points
        assert np.allclose(h(xs), (1 - a) ** p * xs, rtol=1e-12, atol=0)

    def test_wavy_displacement_commutes(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        h = abel.build_branch(c, wavy())
        xs = grid.points
        assert not np.allclose(h(xs) / xs, h(xs[0]) / xs[0], rtol=1e-3)
        assert fa.commutator_residual(HALF, h, grid).sup <= 1e-8

    def test_period_mismatch_rejected(self):
        with pytest.raises(ValueError):
            abel.build_branch(abel.log_conjugacy(0.5), abel.PeriodicFunction.const(2.0, 1.0))


class TestExtract:
    def test_g_itself(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        P, rep = abel.extract_periodic(HALF, c, 64)
        assert np.allclose(P.samples, 1.0, atol=1e-12)
        assert rep.sup <= 1e-12

    def test_round_trip(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        P0 = wavy()
        P, rep = abel.extract_periodic(abel.build_branch(c, P0), c, 128)
        assert np.max(np.abs(P.samples - P0(P.table_nodes()))) <= 1e-8
        assert rep.sup <= 1e-8

    def test_square_does_not_commute(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        square = fa.Closed(lambda x: x * x, fa.POSITIVE)
        _, rep = abel.extract_periodic(square, c, 64)
        assert rep.sup > 1e-3


class TestFixedZeroCorrespondence:
    def test_positive_displacement_has_neither(self):
        c = abel.log_conjugacy(0.5)
        rep = abel.fixed_zero_correspondence(abel.build_branch(c, wavy()), c, grid)
        assert rep.fixed_points == [] and rep.zeros == [] and rep.consistent

    def test_identity_is_fixed_everywhere(self):
        c = abel.log_conjugacy(0.5)
        rep = abel.fixed_zero_correspondence(fa.identity(fa.POSITIVE), c, grid)
        assert rep.identically_fixed and rep.consistent
        assert len(rep.fixed_points) == grid.points.size

    def test_touching_zeros_match_the_orbit(self):
        c = abel.log_conjugacy(0.5)
        P = abel.PeriodicFunction(1.0, 0.5, [-0.5])
        h = abel.build_branch(c, P)
        rep = abel.fixed_zero_correspondence(h, c, fa.log_grid(1e-2, 1e2, 301))
        assert rep.consistent
        assert rep.zeros == pytest.approx([0.0], abs=1e-6)
        orbit = [2.0 ** k for k in range(-6, 7)]
        assert rep.fixed_points == pytest.approx(orbit, rel=1e-6)


class TestPositiveBranch:
    def test_constant_displacement_homogeneous(self):
        a, p = 0.4, 0.7
        res = abel.theorem2_construct(fa.Linear(a, fa.NONPOS), abel.PeriodicFunction.const(1.0, p))
        xs = fa.default_positive_grid().points
        assert np.allclose(res.candidate.pos(xs), (1 - a) ** p * xs, rtol=1e-12, atol=0)
        assert res.report.sup <= 1e-12 * xs.max()
        assert so.eq1_residual(res.candidate).sup <= 1e-9

    def test_wavy_displacement_breaks_the_second_commutator(self):
        res = abel.theorem2_construct(fa.Linear(0.3, fa.NONPOS), wavy())
        assert res.first.sup <= 1e-8
        assert res.report.sup > 1e-4

    def test_symmetric_slope_accepts_any_commuting_branch(self):
        # with psi = x/2 both pairs share x/2, so id - h commutes whenever h does
        res = abel.theorem2_construct(fa.Linear(0.5, fa.NONPOS), wavy())
        assert res.report.sup <= 1e-8

    def test_rational_generator_reproduces_extension(self):
        sub = fa.log_grid(1e-2, 1e2, 129)
        res = abel.theorem2_construct(fa.RationalNeg(), abel.PeriodicFunction.const(1.0, 1.0), sub)
        xs = sub.points
        ext = so.corollary1_extend(fa.RationalNeg())
        assert np.allclose(res.candidate.pos(xs), ext.pos(xs), rtol=1e-9, atol=0)
        assert res.report.sup <= 1e-9

    def test_non_positive_displacement_rejected(self):
        with pytest.raises(ConeViolation):
            abel.theorem2_construct(fa.Linear(0.5, fa.NONPOS), abel.PeriodicFunction.const(1.0, 0.0))


class TestBranchSum:
    def test_homogeneous_identity_vanishes(self):
        a, p, omega2 = 0.3, 0.8, 2.0
        q = omega2 * math.log(1 - a ** p) / math.log(1 - a)
        cA = abel.log_conjugacy(a)
        cB = abel.log_conjugacy(1 - a, omega2)
        rep = abel.eq12_residual(cA, abel.PeriodicFunction.const(1.0, p),
                                 cB, abel.PeriodicFunction.const(omega2, q), grid)
        assert rep.sup <= 1e-12 * grid.max

    def test_two_halves_make_the_identity(self):
        c = abel.solve_abel(HALF, 1.0, 1.0, "linear")
        P = abel.PeriodicFunction.const(1.0, 1.0)
        assert abel.eq12_residual(c, P, c, P, grid).sup <= 1e-9

    def test_nonconstant_pair_leaves_a_residual(self):
        c = abel.log_conjugacy(0.5)
        rep = abel.eq12_residual(c, wavy(), c, abel.PeriodicFunction.const(1.0, 1.0), grid)
        assert rep.sup > 1e-4
