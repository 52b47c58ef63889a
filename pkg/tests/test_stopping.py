import math

import numpy as np
import pytest

from errors import DomainError
from levy import ModelParams
from oracles import brownian_exit_mgf, brownian_hit_laplace, brownian_mean_exit
from sampler import Brownian, StepConfig, StoppedBatch
from stopping import (ESTIMATE_COLUMNS, Estimate, StoppingEstimator, estimate_exit_mgf, estimate_halfline_survival,
                      estimate_hitting_laplace, estimate_mean_exit, estimate_survival, exit_jump_containment,
                      mgf_curve, partial_mgf, pooled_z, survival_curve, weighted_estimate)


def fixed_batch(tau, truncated=None):
    tau = np.asarray(tau, dtype=float)
    n = tau.size
    truncated = np.zeros(n, dtype=bool) if truncated is None else np.asarray(truncated)
    zeros = np.zeros((n, 1))
    return StoppedBatch(tau, zeros, zeros + 2.0, tau.copy(), truncated, np.zeros(n),
                        np.zeros(n, dtype=np.int64), np.arange(n, dtype=np.int64))


def close(est, expected, bias):
    return abs(est.value - expected) <= 4.0 * est.stderr + bias


class TestEstimate:
    @pytest.mark.parametrize("kwargs", [
        dict(stderr=-1.0),
        dict(n=0),
        dict(truncated_fraction=1.5),
        dict(tail_bound=-0.1),
    ])
    def test_rejects(self, kwargs):
        args = dict(value=1.0, stderr=0.1, n=10)
        args.update(kwargs)
        with pytest.raises(DomainError):
            Estimate(**args)

    def test_row(self):
        row = Estimate(0.5, 0.01, 100, truncated_fraction=0.1).row(0.25)
        assert list(row) == ESTIMATE_COLUMNS
        assert row["x"] == 0.25
        assert row["diverged"] is False

    def test_pooled_z(self):
        assert pooled_z(Estimate(1.0, 0.3, 5), Estimate(1.5, 0.4, 5)) == pytest.approx(1.0)
        assert pooled_z(Estimate(1.0, 0.0, 5), Estimate(1.0, 0.0, 5)) == 0.0
        assert pooled_z(Estimate(1.0, 0.0, 5), Estimate(2.0, 0.0, 5)) == math.inf

    def test_heavy_tail(self):
        weights = np.ones(50)
        assert not weighted_estimate(weights).heavy_tail
        weights[3] = 100.0
        assert weighted_estimate(weights).heavy_tail


class TestSurvival:
    process = ModelParams(1, 1.2)
    cfg = StepConfig(0.01, 5.0)

    def test_time_zero(self):
        est = estimate_survival(self.process, 1.0, 0.0, 0.0, 100, self.cfg, seed=1)
        assert est.value == 1.0
        assert est.stderr == 0.0

    def test_time_out_of_range(self):
        with pytest.raises(DomainError):
            estimate_survival(self.process, 1.0, 0.0, 6.0, 100, self.cfg, seed=1)

    def test_start_outside(self):
        with pytest.raises(DomainError):
            estimate_survival(self.process, 1.0, 1.0, 0.5, 100, self.cfg, seed=1)

    def test_curve_non_increasing(self):
        curve = survival_curve(self.process, 1.0, 0.0, [0.0, 0.1, 0.5, 1.0, 2.0], 2000, self.cfg, seed=3)
        values = [e.value for e in curve]
        assert values[0] == 1.0
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] < values[1]

    def test_halfline_needs_line(self):
        with pytest.raises(DomainError):
            estimate_halfline_survival(ModelParams(2, 1.0), 1.0, 1.0, 10, self.cfg, seed=1)

    def test_halfline_brownian(self):
        # P^r(tau > t) = erf(r / sqrt(2 t)); r = 1, t = 1
        est = estimate_halfline_survival(Brownian(1), 1.0, 1.0, 4000, StepConfig(1e-3, 1.0), seed=5)
        assert close(est, math.erf(1.0 / math.sqrt(2.0)), 0.02)


class TestExitMgf:
    def test_zero_lambda(self):
        est = estimate_exit_mgf(ModelParams(1, 1.0), 1.0, 0.0, 0.0, 50, StepConfig(0.01, 1.0), seed=1)
        assert est.value == 1.0

    def test_negative_lambda(self):
        with pytest.raises(DomainError):
            estimate_exit_mgf(ModelParams(1, 1.0), 1.0, 0.0, -0.1, 50, StepConfig(0.01, 1.0), seed=1)

    def test_monotone_in_lambda(self):
        curve = mgf_curve(ModelParams(1, 1.5), 1.0, 0.0, [0.0, 0.1, 0.3, 0.6], 1000, StepConfig(0.01, 10.0), seed=2)
        values = [e.value for e in curve]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_brownian_oracle(self, fine_cfg):
        lam = math.pi ** 2 / 18.0
        est = estimate_exit_mgf(Brownian(1), 1.0, 0.0, lam, 4000, fine_cfg, seed=7)
        expected = brownian_exit_mgf(1.0, 0.0, lam)
        assert expected == pytest.approx(2.0)
        assert close(est, expected, 0.03 * expected)
        assert not est.diverged

    def test_divergence_flagged(self):
        lam_r = math.pi ** 2 / 8.0
        est = estimate_exit_mgf(Brownian(1), 1.0, 0.0, 1.3, 500, StepConfig(1e-2, 10.0), seed=4,
                                lambda_R_hat=lam_r)
        assert est.diverged
        assert est.value >= 1.0
        assert est.tail_bound == 0.0

    def test_partial_mgf_step_survival(self):
        batch = fixed_batch(np.ones(100))
        assert partial_mgf(batch, 1.0, 2.0, math.inf) == pytest.approx(math.e, abs=2e-3)

    def test_partial_mgf_uses_exponential_continuation(self):
        tau = np.full(100, 0.5)
        truncated = np.zeros(100, dtype=bool)
        truncated[:20] = True
        tau[:20] = 4.0
        batch = fixed_batch(tau, truncated)
        without = partial_mgf(batch, 0.5, 4.0, math.inf)
        with_decay = partial_mgf(batch, 0.5, 4.0, 2.0)
        assert with_decay < without


class TestHitting:
    def test_inside_is_one(self):
        est = estimate_hitting_laplace(ModelParams(2, 1.0), 1.0, 0.5, 1.0, 10, StepConfig(0.01, 1.0), seed=1)
        assert est.value == 1.0

    def test_lambda_positive(self):
        with pytest.raises(DomainError):
            estimate_hitting_laplace(ModelParams(1, 1.0), 1.0, 2.0, 0.0, 10, StepConfig(0.01, 1.0), seed=1)

    def test_brownian_oracle(self):
        est = estimate_hitting_laplace(Brownian(1), 0.5, 1.5, 0.5, 2000, StepConfig(2e-3, 30.0), seed=11,
                                       streams=4)
        expected = brownian_hit_laplace(1.0, 0.5)
        assert close(est, expected, 0.02)
        assert est.tail_bound <= math.exp(-15.0)

    def test_short_horizon_widens_stderr(self):
        est = estimate_hitting_laplace(Brownian(1), 1.0, 3.0, 0.1, 500, StepConfig(1e-2, 1.0), seed=5)
        assert est.truncated_fraction > 0.5
        assert est.tail_bound > 0
        assert est.stderr >= est.tail_bound
        expected = brownian_hit_laplace(2.0, 0.1)
        assert est.value <= expected <= est.value + est.tail_bound + 4.0 * est.stderr


class TestMeanExit:
    def test_brownian_ball(self, fine_cfg):
        est = estimate_mean_exit(Brownian(2), 1.0, 0.0, 4000, fine_cfg, seed=17, streams=4)
        assert close(est, brownian_mean_exit(1.0, [0.0, 0.0], 2), 0.03 * 0.5)

    def test_stable_scaling(self):
        cfg = StepConfig(1e-3, 20.0)
        small = estimate_mean_exit(ModelParams(1, 1.0), 1.0, 0.0, 2000, cfg, seed=3)
        large = estimate_mean_exit(ModelParams(1, 1.0), 2.0, 0.0, 2000, cfg, seed=3)
        assert large.value == pytest.approx(2.0 * small.value, rel=0.15)


class TestContainment:
    def test_wide_factor_keeps_everything(self):
        est = exit_jump_containment(ModelParams(1, 1.5), 1.0, 0.0, 0.0, 1e3, 2000, StepConfig(0.01, 20.0), seed=5)
        assert est.value >= 0.99

    def test_factor_must_exceed_one(self):
        with pytest.raises(DomainError):
            exit_jump_containment(ModelParams(1, 1.5), 1.0, 0.0, 0.0, 1.0, 10, StepConfig(0.01, 1.0), seed=5)


def test_estimator_matches_functions():
    cfg = StepConfig(0.01, 10.0)
    estimator = StoppingEstimator(ModelParams(1, 1.0, 0.5), 300, cfg, seed=21, streams=3)
    direct = estimate_mean_exit(ModelParams(1, 1.0, 0.5), 1.0, 0.2, 300, cfg, 21, streams=3)
    assert estimator.mean_exit(1.0, 0.2) == direct
    assert estimator.exit_mgf(1.0, 0.2, 0.0).value == 1.0
