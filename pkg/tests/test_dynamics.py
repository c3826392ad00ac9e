import math

import numpy as np
import pytest

from ttkd.dynamics import (
    FlowConfig,
    SdeConfig,
    abc_rhs,
    generate_abc_dataset,
    integrate,
    simulate_double_well,
)
from ttkd.errors import ValidationError

ABC = FlowConfig()  # paper constants A=sqrt(3), B=sqrt(2), C=1


class TestAbcRhs:
    def test_origin(self):
        v = abc_rhs(np.zeros(3), ABC)
        assert np.allclose(v, [1.0, math.sqrt(3.0), math.sqrt(2.0)])

    def test_quarter_turn(self):
        v = abc_rhs(np.array([np.pi / 2] * 3), ABC)
        assert np.allclose(v, [ABC.a, ABC.b, ABC.c], atol=1e-12)

    def test_divergence_free(self):
        rng = np.random.default_rng(0)
        h = 1e-6
        for _ in range(100):
            z = rng.uniform(0, 2 * np.pi, 3)
            div = 0.0
            for i in range(3):
                dz = np.zeros(3)
                dz[i] = h
                div += (abc_rhs(z + dz, ABC)[i] - abc_rhs(z - dz, ABC)[i]) / (2 * h)
            assert abs(div) <= 1e-6


class TestIntegrate:
    def test_zero_time(self):
        cfg = FlowConfig(tau=0.0)
        z0 = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(integrate(z0, cfg), z0)

    def test_zero_field(self):
        cfg = FlowConfig(a=0.0, b=0.0, c=0.0, tau=7.0)
        z0 = np.array([1.0, 2.0, 3.0])
        assert np.allclose(integrate(z0, cfg), z0)

    def test_tolerance_self_convergence(self):
        # halving the tolerances moves the endpoint by at most 10*atol
        rng = np.random.default_rng(1)
        coarse = FlowConfig(atol=1e-6, rtol=1e-6)
        halved = FlowConfig(atol=5e-7, rtol=5e-7)
        for _ in range(20):
            z0 = rng.uniform(0, 2 * np.pi, 3)
            diff = np.abs(
                integrate(z0, coarse, wrap=False) - integrate(z0, halved, wrap=False)
            ).max()
            assert diff <= 10 * coarse.atol

    def test_fixed_step_order(self):
        # 5th-order propagation: halving the step shrinks the error by >= 4x
        z0 = np.array([0.3, 1.1, 2.0])
        cfg = FlowConfig(tau=2.0)
        ref = integrate(z0, FlowConfig(tau=2.0, atol=1e-13, rtol=1e-13), wrap=False)
        errs = [
            np.abs(integrate(z0, cfg, wrap=False, n_fixed_steps=n) - ref).max()
            for n in (8, 16, 32)
        ]
        assert errs[0] / errs[1] >= 4.0
        assert errs[1] / errs[2] >= 4.0

    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        z0 = rng.uniform(0, 2 * np.pi, (3, 5))
        batch = integrate(z0, ABC)
        for j in range(5):
            single = integrate(z0[:, j], ABC)
            assert np.allclose(batch[:, j], single, atol=1e-6)


class TestAbcDataset:
    def test_counts(self):
        cfg = FlowConfig(tau=0.5, atol=1e-6, rtol=1e-6)
        x, y = generate_abc_dataset(2, cfg)
        assert x.shape == y.shape == (3, 8)
        corners = {tuple(np.round(c, 12)) for c in x.T}
        assert len(corners) == 8

    def test_wrap_into_torus(self):
        cfg = FlowConfig(tau=5.0, atol=1e-6, rtol=1e-6)
        x, y = generate_abc_dataset(3, cfg)
        assert np.all((y >= 0) & (y < 2 * np.pi))
        assert np.all((x >= 0) & (x < 2 * np.pi))

    def test_random_mode_deterministic(self):
        cfg = FlowConfig(tau=0.2, atol=1e-6, rtol=1e-6)
        x1, y1 = generate_abc_dataset(3, cfg, mode="random", seed=42)
        x2, y2 = generate_abc_dataset(3, cfg, mode="random", seed=42)
        assert np.array_equal(x1, x2) and np.array_equal(y1, y2)

    def test_bad_mode(self):
        with pytest.raises(ValidationError):
            generate_abc_dataset(3, ABC, mode="sobol")


class TestDoubleWell:
    def test_deterministic_per_seed(self):
        cfg = SdeConfig(beta=3.0, dt=1e-3, n_steps=5000, seed=7)
        assert np.array_equal(simulate_double_well(cfg), simulate_double_well(cfg))

    def test_gradient_flow_fixed_point(self):
        cfg = SdeConfig(beta=math.inf, dt=1e-3, n_steps=20_000, x0=0.3)
        traj = simulate_double_well(cfg)
        assert abs(traj[0, -1] - 1.0) <= 1e-6

    def test_stays_in_well_at_low_temperature(self):
        for seed in range(5):
            cfg = SdeConfig(beta=100.0, dt=1e-3, n_steps=10_000, x0=1.0, seed=seed)
            traj = simulate_double_well(cfg)
            assert traj.min() >= 0.5 and traj.max() <= 1.5

    def test_occupation_symmetry(self):
        cfg = SdeConfig(beta=1.0, dt=1e-3, n_steps=1_000_000, x0=1.0, seed=123)
        traj = simulate_double_well(cfg)[0]
        frac_right = np.mean(traj > 0)
        assert abs(frac_right - 0.5) <= 0.05
