# config.py
"""
Configuration constants for fracwell
Contains numerical defaults, tolerances, paths, exit codes and the run configuration
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from errors import ConfigurationError

logger = logging.getLogger(__name__)


# Application Settings
class Settings:
    APP_NAME = "fracwell"
    VERSION = "1.0"
    SEED_ENV_VAR = "FW_SEED"
    CACHE_ENV_VAR = "FW_CACHE_DIR"


# File Paths
class Paths:
    CONFIG_DIR = Path.home() / '.fracwell'
    CALIBRATION_FILE_NAME = 'calibration.json'

    @classmethod
    def cache_dir(cls) -> Path:
        """Cache directory, honouring the FW_CACHE_DIR override"""
        override = os.environ.get(Settings.CACHE_ENV_VAR)
        return Path(override) if override else cls.CONFIG_DIR

    @classmethod
    def ensure_cache_dir(cls) -> Path:
        """Ensure the cache directory exists"""
        path = cls.cache_dir()
        path.mkdir(parents=True, exist_ok=True)
        return path

    @classmethod
    def calibration_file(cls) -> Path:
        return cls.cache_dir() / cls.CALIBRATION_FILE_NAME


# Numerical defaults
class Defaults:
    QUAD_ABS_TOL = 1e-12
    QUAD_REL_TOL = 1e-10
    QUAD_MAX_SUBDIVISIONS = 200

    BESSEL_ASYMPTOTIC_Z = 35.0     # K_rho switches to the exponential asymptotic above this
    BESSEL_SERIES_MAX_Z = 700.0    # I_rho / J_rho power series overflow guard
    BESSEL_TRAPEZOID_STEP = 0.1    # node spacing on the log-substituted axis
    SIGMA_SMALL_Z = 1.0            # below this sigma uses the integral form
    GAUSS_NODES = 64

    N_PATHS = 10_000
    H = 1e-3
    T_MAX = 50.0
    SEED = 20240101
    STREAMS = 8

    REJECTION_FLOOR = 1e-3
    HEAVY_TAIL_FRACTION = 0.1
    SURVIVAL_MIN_COUNT = 30        # paths needed before an empirical survival value is trusted

    SPECTRAL_HALF_WIDTH_FACTOR = 10.0
    SPECTRAL_NODES = 512
    SPECTRAL_MAX_ITER = 2000
    SPECTRAL_TOL = 1e-12
    DIRICHLET_NODES = 128

    PHI_A_SLACK = 3.0
    MOMENT_SLACK = 5.0
    # successive decade increments of the truncated moment integral at or above this ratio mean divergence
    MOMENT_GROWTH_RATIO = 0.9
    PROFILE_GRID_POINTS = 101

    CALIBRATION_PATHS = 20_000
    CALIBRATION_GRID = (0.01, 0.03, 0.1, 0.3, 1.0)


# Exit codes used by the command line front end
class ExitCodes:
    OK = 0
    USAGE = 1
    NUMERICAL = 2
    VERIFICATION = 3
    INTERRUPTED = 130


# Keys accepted in key=value config files, mapped onto RunConfig field names
CONFIG_KEY_ALIASES = {
    "alpha": "alpha",
    "d": "d",
    "m": "m",
    "a": "a",
    "v": "v",
    "x": "x",
    "lambda": "lam",
    "lam": "lam",
    "n": "n",
    "h": "h",
    "tmax": "t_max",
    "t_max": "t_max",
    "seed": "seed",
    "streams": "streams",
    "workers": "workers",
    "out": "out",
    "format": "format",
    "plot": "plot",
    "potential": "potential",
    "scale": "scale",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs: model, potential, Monte-Carlo plan and output"""

    d: int = 1
    alpha: float = 1.0
    m: float = 0.0
    a: float = 1.0
    v: float = 5.0
    potential: str = "well"         # "well" or "exp" (v(r) = v*exp(-r/scale))
    scale: float = 1.0
    x: tuple = (0.0,)
    lam: Optional[float] = None
    n: int = Defaults.N_PATHS
    h: float = Defaults.H
    t_max: float = Defaults.T_MAX
    seed: int = Defaults.SEED
    streams: int = Defaults.STREAMS
    workers: Optional[int] = None
    out: str = "-"
    format: str = "csv"
    plot: Optional[str] = None

    def __post_init__(self):
        if self.streams < 1:
            raise ConfigurationError(f"streams must be >= 1, got {self.streams}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")
        if self.potential not in ("well", "exp"):
            raise ConfigurationError(f"potential must be well or exp, got {self.potential!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def model(self):
        """ModelParams for this run"""
        # Import here to avoid circular imports
        from levy import ModelParams
        return ModelParams(self.d, self.alpha, self.m)

    def well(self):
        from groundstate import WellSpec
        return WellSpec(self.a, self.v)

    def radial_potential(self):
        from groundstate import RadialPotential
        if self.potential == "exp":
            return RadialPotential.exponential(self.v, self.scale)
        return RadialPotential.from_well(self.well())

    def step_config(self):
        from sampler import StepConfig
        return StepConfig(self.h, self.t_max)

    def as_meta(self) -> dict:
        """Plain dict echo used in JSON headers"""
        meta = {f.name: getattr(self, f.name) for f in fields(self)}
        meta["x"] = list(self.x)
        return meta

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Load a run configuration from key=value lines"""
        values = parse_config_lines(Path(path).read_text(encoding="utf-8").splitlines())
        return cls(**values)

    def merged(self, **overrides) -> "RunConfig":
        """Copy with the non-None overrides applied, then the FW_SEED override"""
        clean = {key: value for key, value in overrides.items() if value is not None}
        config = replace(self, **clean)
        env_seed = os.environ.get(Settings.SEED_ENV_VAR)
        if env_seed is not None:
            try:
                config = replace(config, seed=int(env_seed))
            except ValueError:
                raise ConfigurationError(f"{Settings.SEED_ENV_VAR} must be an integer, got {env_seed!r}")
            logger.info("seed overridden by %s=%s", Settings.SEED_ENV_VAR, env_seed)
        return config


_INT_KEYS = {"d", "n", "seed", "streams", "workers"}
_STR_KEYS = {"out", "format", "plot", "potential"}


def parse_config_lines(lines) -> dict:
    """Parse key=value lines into RunConfig keyword arguments"""
    values = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {number}: expected key=value, got {raw!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        name = CONFIG_KEY_ALIASES.get(key.lower())
        if name is None:
            raise ConfigurationError(f"line {number}: unknown key {key!r}")
        try:
            if name == "x":
                values[name] = tuple(float(item) for item in text.split(","))
            elif name in _INT_KEYS:
                values[name] = int(text)
            elif name in _STR_KEYS:
                values[name] = text
            else:
                values[name] = float(text)
        except ValueError:
            raise ConfigurationError(f"line {number}: bad value for {key!r}: {text!r}")
    return values
