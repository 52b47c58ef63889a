# stopping.py
"""
Monte-Carlo estimators for first exit and first hitting functionals
Survival probabilities, exit-time moment generating functions, hitting-time
Laplace transforms, mean exit times and the jump-containment fraction, each
with a standard error and an account of the paths cut off at t_max
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from config import Defaults
from errors import DomainError
from sampler import (ExitBall, ExitHalfLine, HitBall, Process, StepConfig, StoppedBatch,
                     as_point, process_dimension, simulate)

logger = logging.getLogger(__name__)

# Time nodes used when integrating the survival curve for the partial MGF sum
_PARTIAL_SUM_NODES = 4001


@dataclass(frozen=True)
class Estimate:
    """Aggregated Monte-Carlo value; when diverged the value is a lower bound"""

    value: float
    stderr: float
    n: int
    truncated_fraction: float = 0.0
    tail_bound: float = 0.0
    diverged: bool = False
    heavy_tail: bool = False

    def __post_init__(self):
        if not self.stderr >= 0:
            raise DomainError(f"stderr must be non-negative, got {self.stderr}")
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if not 0.0 <= self.truncated_fraction <= 1.0:
            raise DomainError(f"truncated_fraction must lie in [0, 1], got {self.truncated_fraction}")
        if not self.tail_bound >= 0:
            raise DomainError(f"tail_bound must be non-negative, got {self.tail_bound}")

    def row(self, x) -> dict:
        return {"x": float(x), "value": float(self.value), "stderr": float(self.stderr), "n": int(self.n),
                "truncated_fraction": float(self.truncated_fraction), "tail_bound": float(self.tail_bound),
                "diverged": bool(self.diverged)}


ESTIMATE_COLUMNS = ["x", "value", "stderr", "n", "truncated_fraction", "tail_bound", "diverged"]


def pooled_z(a: Estimate, b: Estimate) -> float:
    """|a - b| in units of the pooled standard error"""
    pooled = math.hypot(a.stderr, b.stderr)
    diff = abs(a.value - b.value)
    if pooled == 0:
        return 0.0 if diff == 0 else math.inf
    return diff / pooled


def weighted_estimate(weights: np.ndarray, truncated_fraction: float = 0.0, tail_bound: float = 0.0,
                      diverged: bool = False) -> Estimate:
    n = weights.size
    value = float(np.mean(weights))
    stderr = float(np.std(weights, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    total = float(np.sum(weights))
    heavy = bool(total > 0 and np.max(weights) > Defaults.HEAVY_TAIL_FRACTION * total)
    return Estimate(value, stderr, n, truncated_fraction, tail_bound, diverged, heavy)


def _bernoulli_estimate(hits: np.ndarray) -> Estimate:
    n = hits.size
    p = float(np.mean(hits))
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)


def _inside_point(process: Process, R: float, x) -> np.ndarray:
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    point = as_point(x, process_dimension(process))
    if np.linalg.norm(point) >= R:
        raise DomainError(f"start point |x| = {np.linalg.norm(point):.6g} is not inside B_{R}")
    return point


def estimate_survival(process: Process, R: float, x, t: float, n: int, cfg: StepConfig, seed: int,
                      streams: int = 1, workers: Optional[int] = None) -> Estimate:
    """P^x(tau_R > t) as the fraction of paths still inside at time t"""
    point = _inside_point(process, R, x)
    if t < 0 or t > cfg.t_max * (1 + 1e-12):
        raise DomainError(f"t must lie in [0, t_max={cfg.t_max}], got {t}")
    if t == 0:
        return Estimate(1.0, 0.0, n)
    batch = simulate(process, point, ExitBall(R), cfg.with_horizon(t), seed, n, streams, workers)
    return _bernoulli_estimate(batch.truncated)


def survival_curve(process: Process, R: float, x, times, n: int, cfg: StepConfig, seed: int,
                   streams: int = 1, workers: Optional[int] = None) -> list:
    """Survival at several times from one set of paths (non-increasing in t by construction)"""
    point = _inside_point(process, R, x)
    times = [float(t) for t in times]
    horizon = max(times)
    if horizon > cfg.t_max * (1 + 1e-12) or min(times) < 0:
        raise DomainError(f"times must lie in [0, t_max={cfg.t_max}]")
    batch = simulate(process, point, ExitBall(R), cfg.with_horizon(horizon), seed, n, streams, workers)
    alive = np.where(batch.truncated, math.inf, batch.tau_hat)
    return [Estimate(1.0, 0.0, n) if t == 0 else _bernoulli_estimate(alive > t) for t in times]


def estimate_halfline_survival(process: Process, r: float, t: float, n: int, cfg: StepConfig, seed: int,
                               streams: int = 1, workers: Optional[int] = None) -> Estimate:
    """P^r(tau_(0,inf) > t) in d = 1"""
    if process_dimension(process) != 1:
        raise DomainError("half-line survival is defined in d = 1 only")
    if not r > 0:
        raise DomainError(f"start point must be positive, got {r}")
    if not 0 < t <= cfg.t_max * (1 + 1e-12):
        raise DomainError(f"t must lie in (0, t_max={cfg.t_max}], got {t}")
    batch = simulate(process, r, ExitHalfLine(), cfg.with_horizon(t), seed, n, streams, workers)
    return _bernoulli_estimate(batch.truncated)


# ---------------------------------------------------------------------------
# Exit-time moment generating function

def partial_mgf(batch: StoppedBatch, lam: float, horizon: float, lambda_R_hat: float) -> float:
    """Lower bound for E[e^(lam min(tau, horizon))]

    Integrates 1 + lam int_0^T e^(lam t) S(t) dt with the empirical survival S where enough
    paths remain and its exponential continuation c e^(-lambda_R t) beyond.
    """
    n = len(batch)
    exits = np.sort(np.where(batch.truncated, math.inf, batch.tau_hat))
    grid = np.linspace(0.0, horizon, _PARTIAL_SUM_NODES)
    survival = 1.0 - np.searchsorted(exits, grid, side="right") / n
    trusted = np.flatnonzero(survival * n >= Defaults.SURVIVAL_MIN_COUNT)
    last = trusted[-1] if trusted.size else 0
    t_obs, s_obs = grid[last], max(survival[last], 1.0 / n)
    if math.isfinite(lambda_R_hat):
        model = s_obs * np.exp(-lambda_R_hat * (grid - t_obs))
        survival = np.where(grid <= t_obs, survival, model)
    integrand = np.exp(lam * grid) * survival
    return 1.0 + lam * float(trapezoid(integrand, grid))


def _mgf_from_batch(batch: StoppedBatch, lam: float, t_max: float, lambda_R_hat: float) -> Estimate:
    n = len(batch)
    if lam == 0:
        return Estimate(1.0, 0.0, n)
    truncated_fraction = batch.truncated_fraction
    weights = np.exp(lam * batch.tau_hat)
    diverged = lam >= lambda_R_hat
    tail_bound = 0.0
    if not diverged and truncated_fraction > 0 and math.isfinite(lambda_R_hat):
        tail_bound = truncated_fraction * math.exp(lam * t_max) * lam / (lambda_R_hat - lam)
    if truncated_fraction > 0 and math.isfinite(lambda_R_hat):
        half = partial_mgf(batch, lam, 0.5 * t_max, lambda_R_hat)
        full = partial_mgf(batch, lam, t_max, lambda_R_hat)
        # the last half of the horizon adds more than everything before it
        if full - half > half - 1.0:
            diverged = True
    if diverged:
        value = partial_mgf(batch, lam, t_max, lambda_R_hat)
        logger.warning("exit MGF at lambda=%.6g diverges (lambda_R=%.6g); reporting partial sum %.6g",
                       lam, lambda_R_hat, value)
        est = weighted_estimate(weights, truncated_fraction, 0.0, True)
        return Estimate(max(value, est.value), est.stderr, n, truncated_fraction, 0.0, True, est.heavy_tail)
    est = weighted_estimate(weights, truncated_fraction, tail_bound)
    if est.heavy_tail:
        logger.warning("exit MGF at lambda=%.6g: one path carries over %.0f%% of the weight",
                       lam, 100 * Defaults.HEAVY_TAIL_FRACTION)
    return est


def estimate_exit_mgf(process: Process, R: float, x, lam: float, n: int, cfg: StepConfig, seed: int,
                      lambda_R_hat: float = math.inf, streams: int = 1,
                      workers: Optional[int] = None) -> Estimate:
    """E^x[e^(lam tau_R)] with per-path weight e^(lam tau_hat)"""
    return mgf_curve(process, R, x, [lam], n, cfg, seed, lambda_R_hat, streams, workers)[0]


def mgf_curve(process: Process, R: float, x, lams, n: int, cfg: StepConfig, seed: int,
              lambda_R_hat: float = math.inf, streams: int = 1, workers: Optional[int] = None) -> list:
    """Exit MGF at several lambda values from common paths"""
    point = _inside_point(process, R, x)
    lams = [float(lam) for lam in lams]
    if any(lam < 0 for lam in lams):
        raise DomainError("lambda must be non-negative")
    if all(lam == 0 for lam in lams):
        return [Estimate(1.0, 0.0, n) for _ in lams]
    batch = simulate(process, point, ExitBall(R), cfg, seed, n, streams, workers)
    return [_mgf_from_batch(batch, lam, cfg.t_max, lambda_R_hat) for lam in lams]


# ---------------------------------------------------------------------------
# Hitting, mean exit, containment

def estimate_hitting_laplace(process: Process, R: float, x, lam: float, n: int, cfg: StepConfig, seed: int,
                             streams: int = 1, workers: Optional[int] = None) -> Estimate:
    """E^x[e^(-lam T_R)]; paths cut off at t_max get weight 0 and enter tail_bound"""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    point = as_point(x, process_dimension(process))
    if np.linalg.norm(point) <= R:
        return Estimate(1.0, 0.0, n)
    batch = simulate(process, point, HitBall(R), cfg, seed, n, streams, workers)
    weights = np.where(batch.truncated, 0.0, np.exp(-lam * batch.tau_hat))
    truncated_fraction = batch.truncated_fraction
    est = weighted_estimate(weights, truncated_fraction, math.exp(-lam * cfg.t_max) * truncated_fraction)
    # the cut-off at t_max can only lower the value, by at most tail_bound
    return replace(est, stderr=math.hypot(est.stderr, est.tail_bound))


def estimate_mean_exit(process: Process, R: float, x, n: int, cfg: StepConfig, seed: int,
                       streams: int = 1, workers: Optional[int] = None) -> Estimate:
    """E^x[tau_R] as the mean of tau_hat"""
    point = _inside_point(process, R, x)
    batch = simulate(process, point, ExitBall(R), cfg, seed, n, streams, workers)
    if batch.truncated.any():
        logger.warning("mean exit: %.2f%% of paths reached t_max", 100 * batch.truncated_fraction)
    return weighted_estimate(batch.tau_hat, batch.truncated_fraction)


def exit_jump_containment(process: Process, R: float, x, weight_exponent: float, factor: float, n: int,
                          cfg: StepConfig, seed: int, streams: int = 1,
                          workers: Optional[int] = None) -> Estimate:
    """E^x[e^(w tau); R <= |X_tau| <= C R] / E^x[e^(w tau)] (ratio estimator, delta-method stderr)"""
    if not factor > 1:
        raise DomainError(f"containment factor must exceed 1, got {factor}")
    point = _inside_point(process, R, x)
    batch = simulate(process, point, ExitBall(R), cfg, seed, n, streams, workers)
    exited = ~batch.truncated
    if not exited.any():
        raise DomainError("no path exited before t_max; increase t_max")
    g = np.exp(weight_exponent * batch.tau_hat[exited])
    norms = batch.x_after_norm[exited]
    exit_radius = batch.region.R if batch.region is not None else R
    inside = (norms >= exit_radius) & (norms <= factor * R)
    numerator = g * inside
    total = float(np.sum(g))
    ratio = float(np.sum(numerator)) / total
    stderr = math.sqrt(float(np.sum((numerator - ratio * g) ** 2))) / total
    return Estimate(ratio, stderr, int(exited.sum()), batch.truncated_fraction)


@dataclass(frozen=True)
class StoppingEstimator:
    """Fixed process and Monte-Carlo plan; every method draws from the same substreams"""

    process: Process
    n: int
    cfg: StepConfig
    seed: int
    streams: int = 1
    workers: Optional[int] = None

    def _plan(self):
        return dict(n=self.n, cfg=self.cfg, seed=self.seed, streams=self.streams, workers=self.workers)

    def survival(self, R: float, x, t: float) -> Estimate:
        return estimate_survival(self.process, R, x, t, **self._plan())

    def exit_mgf(self, R: float, x, lam: float, lambda_R_hat: float = math.inf) -> Estimate:
        return estimate_exit_mgf(self.process, R, x, lam, lambda_R_hat=lambda_R_hat, **self._plan())

    def hitting_laplace(self, R: float, x, lam: float) -> Estimate:
        return estimate_hitting_laplace(self.process, R, x, lam, **self._plan())

    def mean_exit(self, R: float, x) -> Estimate:
        return estimate_mean_exit(self.process, R, x, **self._plan())

    def jump_containment(self, R: float, x, weight_exponent: float, factor: float) -> Estimate:
        return exit_jump_containment(self.process, R, x, weight_exponent, factor, **self._plan())
