import math

import numpy as np
import pytest

from errors import ConfigurationError, DomainError
from levy import ModelParams
from sampler import (BROWNIAN_BARRIER_SHIFT, Brownian, ExitBall, ExitHalfLine, ExitLevelSet, HitBall, SeedSpec,
                     StepConfig, as_point, relativistic_increment, relativistic_subordinator_sample,
                     sample_rows, simulate, stable_increment, stable_subordinator_sample, stream_sizes,
                     tilting_acceptance, walk_batch, walk_until)


class TestConfigObjects:
    def test_seed_range(self):
        with pytest.raises(DomainError):
            SeedSpec(-1)
        with pytest.raises(DomainError):
            SeedSpec(2 ** 64)
        with pytest.raises(DomainError):
            SeedSpec(1, stream=-1)

    def test_substreams_differ(self):
        a = SeedSpec(7, 0).generator().random(4)
        b = SeedSpec(7, 1).generator().random(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, SeedSpec(7, 0).generator().random(4))

    def test_step_config(self):
        assert StepConfig(0.1, 1.0).steps == 10
        with pytest.raises(DomainError):
            StepConfig(0.0, 1.0)
        with pytest.raises(DomainError):
            StepConfig(2.0, 1.0)
        assert StepConfig(0.5, 10.0).with_horizon(0.2) == StepConfig(0.2, 0.2)

    def test_stream_sizes(self):
        assert stream_sizes(10, 3) == [4, 3, 3]
        assert sum(stream_sizes(1001, 8)) == 1001
        with pytest.raises(DomainError):
            stream_sizes(10, 0)

    def test_as_point(self):
        np.testing.assert_array_equal(as_point(2.0, 3), [2.0, 0.0, 0.0])
        with pytest.raises(DomainError):
            as_point([1.0, 2.0], 3)


class TestSubordinators:
    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
    def test_laplace_transform(self, beta):
        rng = np.random.default_rng(11)
        s = stable_subordinator_sample(beta, 0.7, 1.3, rng, 200_000)
        assert np.all(s > 0)
        assert np.mean(np.exp(-s)) == pytest.approx(math.exp(-0.7 * 1.3), abs=0.01)

    def test_scalar_draw(self):
        assert isinstance(stable_subordinator_sample(0.5, 1.0, 1.0, np.random.default_rng(0)), float)

    def test_relativistic_laplace(self):
        alpha, m, t = 1.2, 0.8, 0.5
        rng = np.random.default_rng(5)
        s = relativistic_subordinator_sample(alpha, m, t, rng, 100_000)
        w = 0.6
        expected = math.exp(-t * ((2.0 * w + m ** (2.0 / alpha)) ** (alpha / 2.0) - m))
        assert np.mean(np.exp(-w * s)) == pytest.approx(expected, abs=0.01)

    def test_acceptance(self):
        rate = tilting_acceptance(1.0, 1.0, 0.5, np.random.default_rng(3), 100_000)
        assert rate == pytest.approx(math.exp(-0.5), abs=0.01)

    def test_acceptance_floor(self):
        with pytest.raises(ConfigurationError):
            relativistic_subordinator_sample(1.0, 10.0, 10.0, np.random.default_rng(0), 10)


class TestIncrements:
    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.7])
    def test_stable_characteristic_function(self, alpha):
        p = ModelParams(1, alpha)
        x = stable_increment(p, 0.4, np.random.default_rng(21), 200_000)
        assert x.shape == (200_000, 1)
        for u in (0.5, 1.0, 2.0):
            assert np.mean(np.cos(u * x[:, 0])) == pytest.approx(math.exp(-0.4 * u ** alpha), abs=0.01)

    def test_relativistic_characteristic_function(self):
        p = ModelParams(2, 1.0, 1.5)
        x = relativistic_increment(p, 0.3, np.random.default_rng(8), 100_000)
        assert x.shape == (100_000, 2)
        for u in (0.5, 2.0):
            expected = math.exp(-0.3 * float(p.exponent(u)))
            assert np.mean(np.cos(u * x[:, 1])) == pytest.approx(expected, abs=0.015)

    def test_wrong_process(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            stable_increment(ModelParams(1, 1.0, 1.0), 0.1, rng)
        with pytest.raises(DomainError):
            relativistic_increment(ModelParams(1, 1.0), 0.1, rng)


class TestRegions:
    x = np.array([[0.5, 0.0], [1.0, 0.0], [2.0, 0.0], [-0.5, 0.0]])

    def test_predicates(self):
        assert ExitBall(1.0).fired(self.x).tolist() == [False, True, True, False]
        assert HitBall(1.0).fired(self.x).tolist() == [True, True, False, True]
        assert ExitLevelSet(0.6).fired(self.x).tolist() == [False, True, True, False]
        assert ExitHalfLine().fired(self.x).tolist() == [False, False, False, True]

    def test_monitored_moves_barrier_inward(self):
        assert ExitBall(1.0).monitored(0.1) == ExitBall(0.9)
        assert HitBall(1.0).monitored(0.1) == HitBall(1.1)
        assert ExitLevelSet(2.0).monitored(0.5) == ExitLevelSet(1.5)
        assert ExitHalfLine().monitored(0.2) == ExitHalfLine(0.2)

    def test_occupation_radius(self):
        assert ExitBall(2.0).occupation_radius == 2.0
        assert HitBall(2.0).occupation_radius is None


class TestWalker:
    def test_start_outside_stops_at_once(self):
        batch = walk_batch(ModelParams(1, 1.0), 2.0, ExitBall(1.0), StepConfig(0.01, 1.0), SeedSpec(1), 5)
        np.testing.assert_array_equal(batch.tau_hat, 0.0)
        assert not batch.truncated.any()

    def test_stopping_data(self):
        batch = walk_batch(ModelParams(2, 1.2), [0.1, 0.2], ExitBall(1.0), StepConfig(0.01, 50.0), SeedSpec(4), 500)
        assert np.all(batch.x_after_norm >= 1.0)
        assert np.all(np.linalg.norm(batch.x_before, axis=1) < 1.0)
        assert np.all(batch.occupation <= batch.tau_hat + 1e-12)
        np.testing.assert_allclose(batch.tau_hat / 0.01, np.round(batch.tau_hat / 0.01))

    def test_truncation(self):
        batch = walk_batch(ModelParams(1, 1.0), 0.0, ExitBall(1e6), StepConfig(0.1, 1.0), SeedSpec(2), 10)
        assert batch.truncated.all()
        np.testing.assert_allclose(batch.tau_hat, 1.0)
        assert batch.truncated_fraction == 1.0

    def test_potential_weight(self):
        batch = walk_batch(ModelParams(1, 1.0), 0.0, ExitBall(1e6), StepConfig(0.1, 1.0), SeedSpec(2), 3,
                           potential=lambda r: np.full_like(r, 2.0))
        np.testing.assert_allclose(batch.log_weight, 2.0)

    def test_walk_until(self):
        sample = walk_until(ModelParams(1, 1.5), 0.0, ExitBall(1.0), StepConfig(0.01, 20.0), SeedSpec(9))
        assert sample.tau_hat > 0

    def test_brownian_mean_exit(self):
        batch = simulate(Brownian(1), 0.0, ExitBall(1.0), StepConfig(1e-3, 20.0), seed=13, n=4000, streams=4)
        assert np.mean(batch.tau_hat) == pytest.approx(1.0, rel=0.05)

    @pytest.mark.parametrize("process", [ModelParams(1, 1.0), ModelParams(2, 1.5, 1.0), Brownian(1), Brownian(2)])
    def test_exit_straddles_recorded_barrier(self, process):
        batch = walk_batch(process, 0.0, ExitBall(1.0), StepConfig(1e-2, 10.0), SeedSpec(1), 2000)
        exited = ~batch.truncated
        barrier = batch.region.R
        assert barrier <= 1.0
        assert np.all(np.linalg.norm(batch.x_before[exited], axis=1) < barrier)
        assert np.all(batch.x_after_norm[exited] >= barrier)

    def test_brownian_barrier_recorded(self):
        batch = walk_batch(Brownian(1), 0.0, ExitBall(1.0), StepConfig(1e-2, 10.0), SeedSpec(1), 10)
        assert batch.region == ExitBall(1.0).monitored(BROWNIAN_BARRIER_SHIFT * math.sqrt(1e-2))
        jump = walk_batch(ModelParams(1, 1.0), 0.0, ExitBall(1.0), StepConfig(1e-2, 10.0), SeedSpec(1), 10)
        assert jump.region == ExitBall(1.0)

    def test_brownian_start_near_barrier_not_stopped_at_once(self):
        batch = walk_batch(Brownian(1), 0.99, ExitBall(1.0), StepConfig(1e-2, 10.0), SeedSpec(3), 50)
        assert np.all(batch.tau_hat > 0)

    def test_pooled_batch_keeps_region(self):
        batch = simulate(Brownian(1), 0.0, ExitBall(1.0), StepConfig(1e-2, 10.0), seed=2, n=20, streams=3)
        assert batch.region.R < 1.0

    def test_barrier_shift_constant(self):
        assert BROWNIAN_BARRIER_SHIFT == pytest.approx(0.5826, abs=1e-4)


class TestSimulate:
    def test_independent_of_workers(self):
        args = (ModelParams(2, 1.0, 0.5), 0.0, ExitBall(1.0), StepConfig(0.02, 20.0))
        one = simulate(*args, seed=99, n=400, streams=4, workers=1)
        many = simulate(*args, seed=99, n=400, streams=4, workers=4)
        np.testing.assert_array_equal(one.tau_hat, many.tau_hat)
        np.testing.assert_array_equal(one.x_after, many.x_after)
        np.testing.assert_array_equal(one.stream, many.stream)

    def test_stream_order(self):
        batch = simulate(ModelParams(1, 1.0), 0.0, ExitBall(1.0), StepConfig(0.05, 10.0), seed=1, n=10, streams=3)
        assert batch.stream.tolist() == [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
        assert batch.path_id.tolist() == [0, 1, 2, 3, 0, 1, 2, 0, 1, 2]

    def test_needs_paths(self):
        with pytest.raises(DomainError):
            simulate(ModelParams(1, 1.0), 0.0, ExitBall(1.0), StepConfig(0.05, 1.0), seed=1, n=0)

    def test_sample_rows(self):
        batch = simulate(ModelParams(1, 1.0), 0.0, ExitBall(1.0), StepConfig(0.05, 10.0), seed=1, n=3)
        rows = sample_rows(batch)
        assert list(rows[0]) == ["stream", "path_id", "tau_hat", "occupation", "x_after_norm", "truncated"]
        assert len(rows) == 3
