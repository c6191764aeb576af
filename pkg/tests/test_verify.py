import math

import numpy as np
import pytest

from lrts import (Box, BumpFunction, DiffusionSpec, DomainError, ExpPolyCurve,
                  SimulationConfig, WeightSpec, check_invariance_conditions,
                  invariance_residual, martingale_test,
                  power_independence_test, segment_degeneracy_test,
                  span_condition_test)
from lrts.quadrature import composite_gauss_legendre, weighted_projection


def demo_config(manifold, diffusion, **overrides):
    base = dict(manifold=manifold, diffusion=diffusion, z0=[0.3], horizon=1.0,
                n_steps=200, n_paths=4000, seed=77, record_maturities=(5.0,))
    base.update(overrides)
    return SimulationConfig(**base)


class TestInvarianceConditions:
    def test_exponential_family_membership(self, exp_family_manifold):
        # lam = -0.6 < -alpha/2 keeps the chart derivative inside the
        # weighted space for alpha = 1
        import lrts
        m6 = lrts.from_curves(ExpPolyCurve.zero(),
                              [ExpPolyCurve.exponential(1.0, -0.6)],
                              Box((-math.inf,), (0.0,)))
        f = m6.chart([-0.5])
        w = WeightSpec(alpha=1.0)
        assert math.isfinite(lrts.hw_norm(f.derivative(), w))

    def test_matrix_family_passes_all(self, nilpotent_manifold,
                                      nilpotent_diffusion):
        rng = np.random.default_rng(3)
        zs = [rng.uniform(0.2, 8.0, size=1) for _ in range(10)]
        report = check_invariance_conditions(
            nilpotent_manifold, nilpotent_diffusion, zs, WeightSpec(alpha=0.5))
        by_name = {c.name: c for c in report.checks}
        # u_1 = -x has polynomial growth: not in the exponentially
        # weighted space, so membership fails while (b), (c) pass
        assert by_name["tangential_columns"].passed
        assert by_name["drift_tangency"].passed

    def test_demo_family_passes_all(self, demo_manifold, demo_diffusion):
        zs = [np.array([z]) for z in (-0.4, 0.0, 0.3, 1.0, 1.8)]
        report = check_invariance_conditions(
            demo_manifold, demo_diffusion, zs, WeightSpec(alpha=0.5))
        assert report.ok
        assert all(c.verdict == "pass" for c in report.checks)

    def test_quadratic_family_fails_drift_tangency(self, quadratic_manifold):
        m = quadratic_manifold
        bump = BumpFunction(Box((0.3,), (0.6,)), Box((0.1,), (0.9,)))
        spec = DiffusionSpec(manifold=m, a=np.eye(1), bump=bump)
        zs = [np.array([z]) for z in np.linspace(0.1, 0.9, 9)]
        report = check_invariance_conditions(
            m, spec, zs, WeightSpec(alpha=1.0), x_max=10.0,
            expected={"drift_tangency": "fail", "domain_membership": "fail"})
        by_name = {c.name: c for c in report.checks}
        assert by_name["drift_tangency"].verdict == "expected_failure"
        assert by_name["drift_tangency"].statistic > 0.05
        assert by_name["tangential_columns"].verdict == "pass"
        # the chart derivative has a polynomial tail: membership fails
        # as the weighted-space analysis predicts
        assert by_name["domain_membership"].verdict == "expected_failure"
        assert report.ok

    def test_empty_sample_list_rejected(self, demo_manifold, demo_diffusion):
        with pytest.raises(DomainError):
            check_invariance_conditions(demo_manifold, demo_diffusion, [],
                                        WeightSpec(alpha=1.0))


class TestMartingale:
    def test_zero_volatility_single_path(self, demo_manifold, demo_bump):
        spec = DiffusionSpec(manifold=demo_manifold, a=np.zeros((1, 1)),
                             bump=demo_bump)
        cfg = demo_config(demo_manifold, spec, n_paths=1, n_steps=10_000)
        res = martingale_test(cfg, 5.0)
        assert abs(res.estimate - res.reference) <= 1e-5
        assert res.std_error == 0.0

    def test_consistent_drift_statistic(self, demo_manifold, demo_diffusion):
        cfg = demo_config(demo_manifold, demo_diffusion, n_paths=4000,
                          n_steps=250)
        res = martingale_test(cfg, 5.0)
        assert abs(res.z_score) <= 4.0
        assert res.std_error > 0

    def test_flipped_drift_is_detected(self, demo_manifold, demo_diffusion):
        cfg = demo_config(demo_manifold, demo_diffusion, n_paths=4000,
                          n_steps=250, drift_flip=True)
        res = martingale_test(cfg, 5.0)
        assert abs(res.z_score) > 10.0

    def test_degenerate_start_reference(self, nilpotent_manifold):
        # z0 near 0 gives h ~ 0: the reference price is 1 and rates vanish
        m = nilpotent_manifold
        bump = BumpFunction(Box((1.0,), (2.0,)), Box((0.5,), (9.0,)))
        spec = DiffusionSpec(manifold=m, a=np.zeros((1, 1)), bump=bump)
        cfg = demo_config(m, spec, z0=[1e-12], n_paths=1, n_steps=100)
        res = martingale_test(cfg, 5.0)
        assert res.reference == pytest.approx(1.0, abs=1e-11)
        assert abs(res.estimate - 1.0) <= 1e-9

    def test_maturity_before_horizon_rejected(self, demo_manifold,
                                              demo_diffusion):
        cfg = demo_config(demo_manifold, demo_diffusion, n_paths=2)
        with pytest.raises(DomainError):
            martingale_test(cfg, 0.5)


class TestPowerIndependence:
    def test_constant_has_rank_one(self):
        res = power_independence_test(ExpPolyCurve.constant(0.7), 4, 10.0)
        assert res.rank == 1

    def test_exponential_has_full_rank(self):
        res = power_independence_test(ExpPolyCurve.exponential(1.0, -1.0), 4, 10.0)
        assert res.rank == 4
        assert res.min_eigenvalue > 0

    def test_shifted_exponential_rank(self):
        g = ExpPolyCurve.constant(1.0) + ExpPolyCurve.exponential(1.0, -1.0)
        res = power_independence_test(g, 3, 10.0)
        assert res.rank == 3

    def test_rank_against_closed_form_gram(self):
        # oracle: for g = e^(-x), G_ij = (1 - e^(-(i+j)X)) / (i+j)
        n, X = 4, 10.0
        nodes, w = composite_gauss_legendre(0.0, X, 256)
        gv = np.exp(-nodes)
        powers = gv[:, None] ** np.arange(1, n + 1)[None, :]
        gram = powers.T @ (w[:, None] * powers)
        i = np.arange(1, n + 1)
        closed = (1.0 - np.exp(-(i[:, None] + i[None, :]) * X)) / (i[:, None] + i[None, :])
        assert np.max(np.abs(gram - closed)) <= 1e-12


class TestSegmentDegeneracy:
    def test_stationary_segment(self, nilpotent_manifold):
        m = nilpotent_manifold
        h0 = m.chart([0.5])
        h1 = ExpPolyCurve.zero()
        worst = segment_degeneracy_test(m, h0, h1, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert worst <= 1e-8

    def test_transverse_direction_detected(self, nilpotent_manifold):
        m = nilpotent_manifold
        h0 = m.chart([0.5])
        h1 = ExpPolyCurve.exponential(0.1, -1.0)
        worst = segment_degeneracy_test(m, h0, h1, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert worst > 1e-3

    def test_affine_family_collapses(self, nilpotent_manifold):
        # two distinct members of a candidate affine family of forward
        # curves: the segment between them leaves the rational span
        m = nilpotent_manifold
        h0 = ExpPolyCurve.constant(0.02)
        h1 = ExpPolyCurve.constant(0.015)  # direction = second point - first
        worst = segment_degeneracy_test(m, h0, h1, [0.0, 0.5, 1.0])
        assert worst > 1e-3


class TestSpanConditions:
    def test_affine_chart_second_derivatives_vanish(self, demo_manifold):
        res = span_condition_test(demo_manifold, [0.3])
        assert np.max(res.residuals_yy) <= 1e-12

    def test_matrix_family_x_residual(self, demo_manifold):
        res = span_condition_test(demo_manifold, [0.3])
        ref = invariance_residual(demo_manifold, [0.3])
        assert res.residual_x <= 1e-8
        assert res.residual_x == ref.residual

    def test_quadratic_family_x_residual(self, quadratic_manifold):
        res = span_condition_test(quadratic_manifold, [0.5], x_max=10.0)
        assert res.residual_x > 0.05


class TestReportPlumbing:
    def test_verdict_logic(self, demo_manifold, demo_diffusion):
        zs = [np.array([0.3])]
        report = check_invariance_conditions(
            demo_manifold, demo_diffusion, zs, WeightSpec(alpha=0.5),
            expected={"drift_tangency": "fail"})
        by_name = {c.name: c for c in report.checks}
        assert by_name["drift_tangency"].verdict == "unexpected_pass"
        assert not report.ok

    def test_json_shape(self, demo_manifold, demo_diffusion):
        zs = [np.array([0.3])]
        report = check_invariance_conditions(
            demo_manifold, demo_diffusion, zs, WeightSpec(alpha=0.5))
        data = report.to_json()
        assert data["ok"] is True
        for entry in data["checks"]:
            assert {"name", "anchor", "statistic", "threshold",
                    "verdict"} <= set(entry)
