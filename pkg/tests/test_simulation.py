import io
import math

import numpy as np
import pytest

from lrts import (Box, BumpFunction, DiffusionSpec, DomainError,
                  SimulationConfig, UnsupportedManifoldError, simulate,
                  reconstruct_forward, write_paths_csv)


def make_config(manifold, diffusion, **overrides):
    base = dict(manifold=manifold, diffusion=diffusion, z0=[0.3], horizon=1.0,
                n_steps=200, n_paths=16, seed=123, record_maturities=(5.0,))
    base.update(overrides)
    return SimulationConfig(**base)


def zero_diffusion(manifold, bump):
    return DiffusionSpec(manifold=manifold, a=np.zeros((1, 1)), bump=bump)


class TestSimulate:
    def test_no_dynamics_at_fixed_point(self, nilpotent_manifold,
                                        nilpotent_diffusion):
        # on the nilpotent family b(z) = -z^2: freeze the state by using
        # zero volatility and a state close to the fixed point 0
        m = nilpotent_manifold
        spec = DiffusionSpec(manifold=m, a=np.zeros((1, 1)),
                             bump=nilpotent_diffusion.bump)
        cfg = make_config(m, spec, z0=[1e-14], n_paths=2, n_steps=50)
        out = simulate(cfg)
        assert np.max(np.abs(out.states - 1e-14)) <= 1e-13
        assert np.max(np.abs(out.short_rates)) <= 1e-12
        assert np.max(np.abs(out.deflators - 1.0)) <= 1e-12

    def test_euler_matches_rk4_oracle(self, demo_manifold, demo_bump):
        m = demo_manifold
        spec = zero_diffusion(m, demo_bump)
        cfg = make_config(m, spec, n_steps=10_000, n_paths=1)
        out = simulate(cfg)
        z_end = out.states[0, -1, 0]

        def drift(z):
            w = np.array([1.0, z]) @ m.matrix
            return w[1] - w[0] * z

        z = 0.3
        n = 4096
        dt = 1.0 / n
        for _ in range(n):
            k1 = drift(z)
            k2 = drift(z + 0.5 * dt * k1)
            k3 = drift(z + 0.5 * dt * k2)
            k4 = drift(z + dt * k3)
            z += dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        assert abs(z_end - z) <= 1e-5

    def test_determinism_across_thread_counts(self, demo_manifold,
                                              demo_diffusion):
        cfg = make_config(demo_manifold, demo_diffusion, n_paths=32)
        a = simulate(cfg, n_threads=1)
        b = simulate(cfg, n_threads=8)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.deflators, b.deflators)
        buf_a, buf_b = io.StringIO(), io.StringIO()
        write_paths_csv(a, buf_a)
        write_paths_csv(b, buf_b)
        assert buf_a.getvalue() == buf_b.getvalue()

    def test_initial_state_outside_domain(self, demo_manifold, demo_diffusion):
        with pytest.raises(DomainError):
            make_config(demo_manifold, demo_diffusion, z0=[9.0])
        cfg = make_config(demo_manifold, demo_diffusion)
        object.__setattr__(cfg, "z0", np.array([9.0]))
        with pytest.raises(DomainError):
            simulate(cfg)

    def test_non_matrix_manifold_rejected(self, quadratic_manifold):
        bump = BumpFunction(Box((0.3,), (0.6,)), Box((0.2,), (0.8,)))
        spec = DiffusionSpec(manifold=quadratic_manifold, a=np.eye(1), bump=bump)
        with pytest.raises(UnsupportedManifoldError):
            simulate(make_config(quadratic_manifold, spec, z0=[0.5]))

    def test_exit_flagging(self, nilpotent_manifold):
        # b = -z^2 with a coarse step overshoots the lower edge of (0, 10)
        m = nilpotent_manifold
        bump = BumpFunction(Box((4.0,), (6.0,)), Box((0.5,), (9.0,)))
        spec = DiffusionSpec(manifold=m, a=np.zeros((1, 1)), bump=bump)
        cfg = make_config(m, spec, z0=[9.5], n_paths=1, n_steps=10,
                          horizon=10.0)
        out = simulate(cfg)
        assert out.exited[0]
        assert out.exit_step[0] > 0
        k = out.exit_step[0]
        frozen = out.states[0, k - 1, 0]
        assert np.all(out.states[0, k:, 0] == frozen)

    def test_bond_price_nan_after_maturity(self, demo_manifold, demo_diffusion):
        cfg = make_config(demo_manifold, demo_diffusion, n_paths=2,
                          record_maturities=(0.5, 5.0))
        out = simulate(cfg)
        grid = out.bond_prices[0.5]
        assert np.isnan(grid[:, -1]).all()
        assert np.isfinite(grid[:, 0]).all()
        # price at issue equals the discount chart value
        h = demo_manifold.chart_h(cfg.z0)
        assert grid[0, 0] == pytest.approx(1.0 - float(h.value(0.5)), abs=1e-12)


class TestNoArbitrageIdentity:
    def test_zero_volatility_deflated_price_is_constant(self, demo_manifold,
                                                        demo_bump):
        spec = zero_diffusion(demo_manifold, demo_bump)
        cfg = make_config(demo_manifold, spec, n_paths=1, n_steps=10_000)
        out = simulate(cfg)
        dp = out.deflators[0] * out.bond_prices[5.0][0]
        assert np.max(np.abs(dp - dp[0])) <= 1e-5

    def test_refinement_halves_the_error(self, demo_manifold, demo_bump):
        spec = zero_diffusion(demo_manifold, demo_bump)
        errs = []
        for n_steps in (1000, 2000, 4000):
            cfg = make_config(demo_manifold, spec, n_paths=1, n_steps=n_steps)
            out = simulate(cfg)
            dp = out.deflators[0] * out.bond_prices[5.0][0]
            errs.append(np.max(np.abs(dp - dp[0])))
        for coarse, fine in zip(errs, errs[1:]):
            assert 1.6 <= coarse / fine <= 2.4


class TestReconstruction:
    def test_reconstruct_forward_is_chart(self, demo_manifold):
        f1 = reconstruct_forward(demo_manifold, [0.3])
        f2 = demo_manifold.chart([0.3])
        xs = np.linspace(0.0, 10.0, 41)
        assert np.array_equal(np.asarray(f1.value(xs)), np.asarray(f2.value(xs)))

    def test_reconstruct_forward_domain_error(self, demo_manifold):
        with pytest.raises(DomainError):
            reconstruct_forward(demo_manifold, [7.0])


class TestCsvFormat:
    def test_header_and_ordering(self, demo_manifold, demo_diffusion):
        cfg = make_config(demo_manifold, demo_diffusion, n_paths=3, n_steps=4,
                          record_maturities=(2.0, 5.0))
        out = simulate(cfg)
        buf = io.StringIO()
        write_paths_csv(out, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,path,z_1,r,D,P_T1,P_T2"
        assert len(lines) == 1 + 3 * 5
        first = lines[1].split(",")
        assert float(first[0]) == 0.0 and int(first[1]) == 0
        # rows ordered by (path, t)
        order = [(int(l.split(",")[1]), float(l.split(",")[0])) for l in lines[1:]]
        assert order == sorted(order)

    def test_float_precision_round_trips(self, demo_manifold, demo_diffusion):
        cfg = make_config(demo_manifold, demo_diffusion, n_paths=1, n_steps=3)
        out = simulate(cfg)
        buf = io.StringIO()
        write_paths_csv(out, buf)
        rows = buf.getvalue().strip().split("\n")[1:]
        parsed = np.array([[float(v) for v in row.split(",")] for row in rows])
        assert np.array_equal(parsed[:, 2], out.states[0, :, 0])
        assert np.array_equal(parsed[:, 4], out.deflators[0])
