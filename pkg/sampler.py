# sampler.py
"""
Path sampling for the stable, relativistic stable and Brownian processes
Increments are exact in law (Brownian motion on a subordinated clock); the
walker steps paths on the grid kh and records stopping data per path
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from config import Defaults
from errors import ConfigurationError, DomainError
from levy import ModelParams
from utils import ParallelUtils

logger = logging.getLogger(__name__)

# Half of the spacing of numpy's double grid in [0, 1); keeps uniforms off both endpoints
_HALF_ULP = 2.0 ** -54

# -zeta(1/2) / sqrt(2 pi): mean overshoot of a Gaussian walk over a flat barrier, in units of sqrt(h)
BROWNIAN_BARRIER_SHIFT = 0.5825971579390106


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus substream index; the pair fixes the whole sample sequence"""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream < 0:
            raise DomainError(f"stream must be non-negative, got {self.stream}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(sequence))


@dataclass(frozen=True)
class StepConfig:
    h: float
    t_max: float
    record_occupation: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"h must be positive, got {self.h}")
        if not self.t_max > 0:
            raise DomainError(f"t_max must be positive, got {self.t_max}")
        if self.h > self.t_max:
            raise DomainError(f"h={self.h} exceeds t_max={self.t_max}")

    @property
    def steps(self) -> int:
        return int(math.ceil(self.t_max / self.h - 1e-9))

    def with_horizon(self, t_max: float) -> "StepConfig":
        return StepConfig(min(self.h, t_max), t_max, self.record_occupation)


@dataclass(frozen=True)
class Brownian:
    """Standard Brownian motion (generator Delta/2) used as the classical oracle process"""

    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d}")


Process = Union[ModelParams, Brownian]


# ---------------------------------------------------------------------------
# Stopping regions

def _norms(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", x, x))


@dataclass(frozen=True)
class ExitBall:
    """First exit from the open ball B_R"""

    R: float

    def fired(self, x: np.ndarray) -> np.ndarray:
        return _norms(x) >= self.R

    def monitored(self, shift: float) -> "ExitBall":
        return ExitBall(self.R - shift)

    @property
    def occupation_radius(self) -> Optional[float]:
        return self.R


@dataclass(frozen=True)
class HitBall:
    """First entrance into the closed ball of radius R"""

    R: float

    def fired(self, x: np.ndarray) -> np.ndarray:
        return _norms(x) <= self.R

    def monitored(self, shift: float) -> "HitBall":
        return HitBall(self.R + shift)

    @property
    def occupation_radius(self) -> Optional[float]:
        return None


@dataclass(frozen=True)
class ExitLevelSet:
    """First exit from the level set {v > gamma} = B_{r_gamma} of a radial potential"""

    r_gamma: float

    def fired(self, x: np.ndarray) -> np.ndarray:
        return _norms(x) >= self.r_gamma

    def monitored(self, shift: float) -> "ExitLevelSet":
        return ExitLevelSet(self.r_gamma - shift)

    @property
    def occupation_radius(self) -> Optional[float]:
        return self.r_gamma


@dataclass(frozen=True)
class ExitHalfLine:
    """First exit from (0, inf) in d = 1"""

    level: float = 0.0

    def fired(self, x: np.ndarray) -> np.ndarray:
        return x[:, 0] <= self.level

    def monitored(self, shift: float) -> "ExitHalfLine":
        return ExitHalfLine(self.level + shift)

    @property
    def occupation_radius(self) -> Optional[float]:
        return None


Region = Union[ExitBall, HitBall, ExitLevelSet, ExitHalfLine]


@dataclass(frozen=True)
class StoppedSample:
    tau_hat: float
    x_before: np.ndarray
    x_after: np.ndarray
    occupation: float
    truncated: bool
    log_weight: float = 0.0


@dataclass
class StoppedBatch:
    """Column-wise stopping data of many paths"""

    tau_hat: np.ndarray
    x_before: np.ndarray
    x_after: np.ndarray
    occupation: np.ndarray
    truncated: np.ndarray
    log_weight: np.ndarray
    stream: np.ndarray
    path_id: np.ndarray
    region: Optional["Region"] = None     # the barrier the paths were stopped at

    def __len__(self) -> int:
        return int(self.tau_hat.size)

    @property
    def x_after_norm(self) -> np.ndarray:
        return _norms(self.x_after)

    @property
    def truncated_fraction(self) -> float:
        return float(np.mean(self.truncated)) if len(self) else 0.0

    def sample(self, i: int) -> StoppedSample:
        return StoppedSample(float(self.tau_hat[i]), self.x_before[i].copy(), self.x_after[i].copy(),
                             float(self.occupation[i]), bool(self.truncated[i]), float(self.log_weight[i]))

    @classmethod
    def concat(cls, batches) -> "StoppedBatch":
        batches = list(batches)
        return cls(*(np.concatenate([getattr(b, name) for b in batches])
                     for name in ("tau_hat", "x_before", "x_after", "occupation", "truncated",
                                  "log_weight", "stream", "path_id")), region=batches[0].region)


# ---------------------------------------------------------------------------
# Subordinators

def stable_subordinator_sample(beta: float, t: float, scale: float, rng: np.random.Generator, size=None):
    """One-sided beta-stable subordinator at time t, Laplace exponent scale * w^beta (Kanter)"""
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if not (t > 0 and scale > 0):
        raise DomainError(f"t and scale must be positive, got t={t}, scale={scale}")
    count = 1 if size is None else int(size)
    u = math.pi * (rng.random(count) + _HALF_ULP)
    e = rng.standard_exponential(count)
    log_a = ((np.log(np.sin(beta * u)) - np.log(np.sin(u))) / (1.0 - beta)
             + np.log(np.sin((1.0 - beta) * u)) - np.log(np.sin(beta * u)))
    s = np.exp((1.0 - beta) / beta * (log_a - np.log(e)) + math.log(scale * t) / beta)
    return float(s[0]) if size is None else s


def _tilting(alpha: float, m: float, t: float):
    if not m > 0:
        raise DomainError(f"relativistic subordinator needs m > 0, got {m}")
    acceptance = math.exp(-m * t)
    if acceptance < Defaults.REJECTION_FLOOR:
        raise ConfigurationError(f"tilting acceptance exp(-m t) = {acceptance:.3g} is below "
                                 f"{Defaults.REJECTION_FLOOR:g}; reduce the time step h")
    return 0.5 * m ** (2.0 / alpha), acceptance


def relativistic_subordinator_sample(alpha: float, m: float, t: float, rng: np.random.Generator, size=None):
    """Subordinator with Laplace exponent (2w + m^(2/alpha))^(alpha/2) - m, by exponential tilting"""
    theta, acceptance = _tilting(alpha, m, t)
    count = 1 if size is None else int(size)
    out = np.empty(count)
    filled = 0
    proposals = 0
    while filled < count:
        need = count - filled
        batch = int(math.ceil(1.1 * need / acceptance)) + 8
        s = stable_subordinator_sample(0.5 * alpha, t, 2.0 ** (0.5 * alpha), rng, batch)
        kept = s[rng.random(batch) < np.exp(-theta * s)][:need]
        out[filled:filled + kept.size] = kept
        filled += kept.size
        proposals += batch
    logger.debug("tilted subordinator: %d draws from %d proposals", count, proposals)
    return float(out[0]) if size is None else out


def tilting_acceptance(alpha: float, m: float, t: float, rng: np.random.Generator, n: int) -> float:
    """Observed acceptance fraction of n tilting proposals"""
    theta, _ = _tilting(alpha, m, t)
    s = stable_subordinator_sample(0.5 * alpha, t, 2.0 ** (0.5 * alpha), rng, n)
    return float(np.mean(rng.random(n) < np.exp(-theta * s)))


# ---------------------------------------------------------------------------
# Increments

def _subordinated(variance: np.ndarray, d: int, rng: np.random.Generator, size) -> np.ndarray:
    x = np.sqrt(variance)[:, None] * rng.standard_normal((variance.size, d))
    return x[0] if size is None else x


def stable_increment(p: ModelParams, h: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Increment of the isotropic alpha-stable process over time h"""
    if p.is_massive:
        raise DomainError("stable_increment needs m = 0")
    count = 1 if size is None else int(size)
    s = stable_subordinator_sample(0.5 * p.alpha, h, 2.0 ** (0.5 * p.alpha), rng, count)
    return _subordinated(s, p.d, rng, size)


def relativistic_increment(p: ModelParams, h: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Increment of the relativistic alpha-stable process over time h"""
    if not p.is_massive:
        raise DomainError("relativistic_increment needs m > 0")
    count = 1 if size is None else int(size)
    s = relativistic_subordinator_sample(p.alpha, p.m, h, rng, count)
    return _subordinated(s, p.d, rng, size)


def brownian_increment(d: int, h: float, rng: np.random.Generator, size=None) -> np.ndarray:
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    count = 1 if size is None else int(size)
    x = math.sqrt(h) * rng.standard_normal((count, d))
    return x[0] if size is None else x


def process_dimension(process: Process) -> int:
    return process.d


def increment_sampler(process: Process) -> Callable:
    """(h, rng, size) -> (size, d) array of increments for the given process"""
    if isinstance(process, Brownian):
        return lambda h, rng, size: brownian_increment(process.d, h, rng, size)
    if process.is_massive:
        return lambda h, rng, size: relativistic_increment(process, h, rng, size)
    return lambda h, rng, size: stable_increment(process, h, rng, size)


def as_point(x, d: int) -> np.ndarray:
    """A scalar becomes (x, 0, ..., 0); sequences must have length d"""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size == 1 and d > 1:
        arr = np.concatenate([arr, np.zeros(d - 1)])
    if arr.size != d:
        raise DomainError(f"point {x!r} does not live in dimension {d}")
    return arr


# ---------------------------------------------------------------------------
# Walker

def walk_batch(process: Process, x0, region: Region, cfg: StepConfig, seed: SeedSpec, n: int,
               potential: Optional[Callable] = None, occupation_radius: Optional[float] = None) -> StoppedBatch:
    """Step n paths from x0 until the region predicate fires or t_max is reached

    potential, when given, maps |x| to v(|x|) and accumulates h * sum v(|X_kh|) into log_weight.
    Brownian paths are monitored against a barrier moved by BROWNIAN_BARRIER_SHIFT * sqrt(h)
    so that the grid exit law matches the continuous one to first order. The batch records that
    barrier as its region; x_after lies beyond it, and so does x_before only for a path that started
    between the two barriers. Whether a path is stopped at time 0 is decided by the unshifted region.
    """
    d = process_dimension(process)
    start = as_point(x0, d)
    rng = seed.generator()
    increment = increment_sampler(process)
    radius = region.occupation_radius if occupation_radius is None else occupation_radius
    h = cfg.h
    barrier = region
    if isinstance(process, Brownian):
        # Continuity correction for the discretely monitored barrier
        barrier = region.monitored(BROWNIAN_BARRIER_SHIFT * math.sqrt(h))

    tau = np.zeros(n)
    x_before = np.tile(start, (n, 1))
    x_after = np.tile(start, (n, 1))
    occupied = np.zeros(n, dtype=np.int64)
    taken = np.zeros(n, dtype=np.int64)
    log_weight = np.zeros(n)
    truncated = np.zeros(n, dtype=bool)

    alive = ~region.fired(x_before)
    ids = np.flatnonzero(alive)
    current = x_before[ids].copy()
    for k in range(cfg.steps):
        if ids.size == 0:
            break
        norms = _norms(current)
        if cfg.record_occupation and radius is not None:
            occupied[ids] += norms <= radius
        if potential is not None:
            log_weight[ids] += h * potential(norms)
        following = current + increment(h, rng, ids.size)
        fired = barrier.fired(following)
        if fired.any():
            done = ids[fired]
            tau[done] = (k + 1) * h
            taken[done] = k + 1
            x_before[done] = current[fired]
            x_after[done] = following[fired]
        ids = ids[~fired]
        current = following[~fired]

    truncated[ids] = True
    tau[ids] = cfg.t_max
    taken[ids] = cfg.steps
    x_before[ids] = current
    x_after[ids] = current
    occupation = np.where(occupied == taken, tau, occupied * h)
    occupation = np.minimum(occupation, tau)
    return StoppedBatch(tau, x_before, x_after, occupation, truncated, log_weight,
                        np.full(n, seed.stream, dtype=np.int64), np.arange(n, dtype=np.int64), barrier)


def walk_until(process: Process, x0, region: Region, cfg: StepConfig, seed: SeedSpec,
               potential: Optional[Callable] = None) -> StoppedSample:
    """Single stopped path"""
    return walk_batch(process, x0, region, cfg, seed, 1, potential).sample(0)


def stream_sizes(n: int, streams: int) -> list:
    """Fixed split of n paths over the substreams"""
    if streams < 1:
        raise DomainError(f"streams must be >= 1, got {streams}")
    base, extra = divmod(n, streams)
    return [base + (1 if k < extra else 0) for k in range(streams)]


def simulate(process: Process, x0, region: Region, cfg: StepConfig, seed: int, n: int,
             streams: int = 1, workers: Optional[int] = None, potential: Optional[Callable] = None,
             occupation_radius: Optional[float] = None) -> StoppedBatch:
    """Run n paths over fixed substreams and pool them in stream order

    The pooled batch depends on (seed, streams) only, never on the worker count.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sizes = stream_sizes(n, streams)
    jobs = [(k, size) for k, size in enumerate(sizes) if size > 0]

    def run(job):
        stream, size = job
        return walk_batch(process, x0, region, cfg, SeedSpec(seed, stream), size, potential, occupation_radius)

    pool_size = ParallelUtils.worker_count(workers, len(jobs))
    batches = ParallelUtils.ordered_map(run, jobs, pool_size)
    return StoppedBatch.concat(batches)


def sample_rows(batch: StoppedBatch) -> list:
    """Rows stream, path_id, tau_hat, occupation, x_after_norm, truncated"""
    norms = batch.x_after_norm
    return [{"stream": int(batch.stream[i]), "path_id": int(batch.path_id[i]),
             "tau_hat": float(batch.tau_hat[i]), "occupation": float(batch.occupation[i]),
             "x_after_norm": float(norms[i]), "truncated": bool(batch.truncated[i])}
            for i in range(len(batch))]
