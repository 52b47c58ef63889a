# levy.py
"""
Levy jump densities for the stable and relativistic stable processes
Covers the massless/massive decomposition, tail masses, the boundary rate
function and the recurrence classification
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from config import Defaults
from errors import DomainError, NumericalError
from specfun import (QuadratureSpec, gamma_fn, gauss_legendre,
                     integrate_log_axis, log_bessel_k_array, log_gamma)

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)
LOG_PI = math.log(math.pi)

# Beyond this value of m^(1/alpha) r the massive density is taken from the K asymptotic
TAIL_SPLIT_Z = 35.0
# Above this value of z the massive kernel contributes less than e^-40 to sigma
SIGMA_TAIL_Z = 40.0
# Lower cut-off for the sigma mass integral in the scaled variable z
SIGMA_MASS_Z_MIN = 1e-16

# Universal half-line survival constants (independent of m and alpha)
HALFLINE_C_LOWER = (1.0 / (2.0 * math.e)) * ((math.e - 1.0) / (8.0 * math.e ** 2)) ** 2
HALFLINE_C_UPPER = math.e / (math.e - 1.0)


@dataclass(frozen=True)
class ModelParams:
    """Dimension d, stability index alpha and mass m of L = (-Delta + m^(2/alpha))^(alpha/2) - m"""

    d: int
    alpha: float
    m: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d}")
        if not 0 < self.alpha < 2:
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not (self.m >= 0 and math.isfinite(self.m)):
            raise DomainError(f"m must be a finite non-negative number, got {self.m}")

    @property
    def is_massive(self) -> bool:
        return self.m > 0

    @property
    def nu(self) -> float:
        """Bessel order (d + alpha)/2 of the massive kernel"""
        return 0.5 * (self.d + self.alpha)

    @property
    def mass_scale(self) -> float:
        """m^(1/alpha), the inverse length scale of the massive kernel"""
        return self.m ** (1.0 / self.alpha)

    def massless(self) -> "ModelParams":
        return ModelParams(self.d, self.alpha, 0.0)

    def exponent(self, u):
        """Characteristic exponent (|u|^2 + m^(2/alpha))^(alpha/2) - m"""
        u2 = np.square(np.asarray(u, dtype=float))
        return (u2 + self.m ** (2.0 / self.alpha)) ** (0.5 * self.alpha) - self.m

    def label(self) -> str:
        return f"d={self.d} alpha={self.alpha:g} m={self.m:g}"


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] carrying a two-sided bound"""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    def contains(self, value: float, rel_slack: float = 0.0) -> bool:
        return self.lo * (1.0 - rel_slack) <= value <= self.hi * (1.0 + rel_slack)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        """Geometric centre for positive intervals, midpoint otherwise"""
        if self.lo > 0:
            return math.sqrt(self.lo * self.hi)
        return 0.5 * (self.lo + self.hi)

    def scaled(self, factor: float) -> "Interval":
        return Interval(self.lo * factor, self.hi * factor)


class Recurrence(Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"


def ball_volume(d: int) -> float:
    """omega_d = pi^(d/2) / Gamma(d/2 + 1)"""
    return math.pi ** (0.5 * d) / gamma_fn(0.5 * d + 1.0)


def sphere_area(d: int) -> float:
    """Surface measure d * omega_d of the unit sphere"""
    return d * ball_volume(d)


def log_stable_constant(p: ModelParams) -> float:
    """log of 2^alpha Gamma((d+alpha)/2) / (pi^(d/2) |Gamma(-alpha/2)|)"""
    log_abs_gamma_neg = log_gamma(1.0 - 0.5 * p.alpha) - math.log(0.5 * p.alpha)
    return p.alpha * LOG_2 + log_gamma(p.nu) - 0.5 * p.d * LOG_PI - log_abs_gamma_neg


def log_kernel_constant(p: ModelParams) -> float:
    """log of 2^((alpha-d)/2) alpha / (pi^(d/2) Gamma(1 - alpha/2)), shared by j_m and sigma"""
    return (0.5 * (p.alpha - p.d) * LOG_2 + math.log(p.alpha)
            - 0.5 * p.d * LOG_PI - log_gamma(1.0 - 0.5 * p.alpha))


def _as_radii(r):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("radius must be positive")
    return arr


def _unwrap(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def log_jump_density(p: ModelParams, r):
    """log j_{m,alpha}(r)"""
    radii = _as_radii(r)
    if not p.is_massive:
        out = log_stable_constant(p) - (p.d + p.alpha) * np.log(radii)
    else:
        log_c = log_kernel_constant(p) + (p.nu / p.alpha) * math.log(p.m)
        out = log_c - p.nu * np.log(radii) + log_bessel_k_array(p.nu, p.mass_scale * radii)
    return _unwrap(out, r)


def jump_density(p: ModelParams, r):
    """Radial density j_{m,alpha}(r) of the Levy measure"""
    return _unwrap(np.exp(log_jump_density(p, r)), r)


# ---------------------------------------------------------------------------
# sigma = j_0 - j_m = C r^-(d+alpha) F(m^(1/alpha) r),  F(z) = int_0^z w^nu K_{nu-1}(w) dw

def _kernel_integral_small(nu: float, z: np.ndarray) -> np.ndarray:
    """F(z) by Gauss-Legendre after w = z y^4 (smooths the algebraic behaviour at 0)"""
    y, wts = gauss_legendre()
    w = z[:, None] * y[None, :] ** 4
    log_f = (math.log(4.0) + np.log(z)[:, None] + 3.0 * np.log(y)[None, :]
             + nu * np.log(w) + log_bessel_k_array(nu - 1.0, w))
    return np.exp(log_f) @ wts


def _kernel_integral(nu: float, z: np.ndarray) -> np.ndarray:
    """F(z) for any z > 0: quadrature below SIGMA_SMALL_Z, closed difference above"""
    out = np.empty_like(z)
    small = z < Defaults.SIGMA_SMALL_Z
    if np.any(small):
        out[small] = _kernel_integral_small(nu, z[small])
    big = ~small
    if np.any(big):
        limit = math.exp((nu - 1.0) * LOG_2 + log_gamma(nu))
        out[big] = limit - np.exp(nu * np.log(z[big]) + log_bessel_k_array(nu, z[big]))
    return out


def _require_massive(p: ModelParams, what: str):
    if not p.is_massive:
        raise DomainError(f"{what} needs m > 0")


def sigma_density(p: ModelParams, r, q: QuadratureSpec | None = None):
    """sigma_{m,alpha}(r) = j_0(r) - j_m(r) >= 0; cross-checked against the integral form when q is given"""
    _require_massive(p, "sigma_density")
    radii = np.atleast_1d(_as_radii(r))
    z = p.mass_scale * radii
    sigma = jump_density(p.massless(), radii) - jump_density(p, radii)
    small = z < Defaults.SIGMA_SMALL_Z
    if np.any(small):
        sigma[small] = (math.exp(log_kernel_constant(p)) * radii[small] ** (-(p.d + p.alpha))
                        * _kernel_integral_small(p.nu, z[small]))
    sigma = np.maximum(sigma, 0.0)
    if q is not None:
        check = sigma_density_integral(p, radii, q)
        scale = jump_density(p.massless(), radii)
        bad = np.abs(check - sigma) > 1e-6 * np.abs(check) + 1e-12 * scale
        if np.any(bad):
            raise NumericalError(f"sigma self-check failed at r={radii[bad][0]:.6g}")
    return _unwrap(sigma if np.ndim(r) else sigma[0], r)


def sigma_density_integral(p: ModelParams, r, q: QuadratureSpec | None = None):
    """sigma from the integral form, by adaptive vector quadrature"""
    _require_massive(p, "sigma_density_integral")
    q = q or QuadratureSpec()
    radii = np.atleast_1d(_as_radii(r))
    z = p.mass_scale * radii
    nu = p.nu

    def integrand(y):
        if y <= 0.0:
            return np.zeros_like(z)
        w = z * y ** 4
        return np.exp(math.log(4.0) + np.log(z) + 3.0 * math.log(y)
                      + nu * np.log(w) + log_bessel_k_array(nu - 1.0, w))

    value, _, info = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=q.abs_tol, epsrel=q.rel_tol,
                                        limit=q.max_subdivisions, full_output=True)
    if info.status != 0:
        raise NumericalError(f"sigma integral form did not converge (status {info.status})")
    out = math.exp(log_kernel_constant(p)) * radii ** (-(p.d + p.alpha)) * value
    return _unwrap(out if np.ndim(r) else out[0], r)


def total_sigma_mass(p: ModelParams, q: QuadratureSpec | None = None) -> float:
    """Total mass of sigma over R^d; equals m"""
    _require_massive(p, "total_sigma_mass")
    nu = p.nu

    def integrand(z):
        return z ** (-1.0 - p.alpha) * float(_kernel_integral(nu, np.array([z]))[0])

    head = integrate_log_axis(integrand, SIGMA_MASS_Z_MIN, SIGMA_TAIL_Z, q, "sigma mass")
    tail = math.exp((nu - 1.0) * LOG_2 + log_gamma(nu)) * SIGMA_TAIL_Z ** (-p.alpha) / p.alpha
    # r^(d-1) dr against r^-(d+alpha) becomes m z^(-1-alpha) dz
    return sphere_area(p.d) * math.exp(log_kernel_constant(p)) * p.m * (head + tail)


def tail_mass(p: ModelParams, r: float, q: QuadratureSpec | None = None) -> float:
    """nu_{m,alpha}(B_r^c) = d omega_d int_r^inf rho^(d-1) j(rho) d rho"""
    r = float(r)
    if not r > 0:
        raise DomainError(f"tail_mass needs r > 0, got {r}")
    if not p.is_massive:
        return sphere_area(p.d) * math.exp(log_stable_constant(p)) * r ** (-p.alpha) / p.alpha

    def integrand(rho):
        return rho ** (p.d - 1) * jump_density(p, rho)

    split = TAIL_SPLIT_Z / p.mass_scale
    total = 0.0
    if r < split:
        total += integrate_log_axis(integrand, r, split, q, "tail mass")
    total += integrate_log_axis(integrand, max(r, split), math.inf, q, "tail mass")
    return sphere_area(p.d) * total


def containment_factor(p: ModelParams, R: float, q: QuadratureSpec | None = None) -> float:
    """Smallest C = 1 + s with nu(B_{sR}^c) <= nu(B_R^c)/2; 1 + 2^(1/alpha) when m = 0"""
    if not R > 0:
        raise DomainError(f"containment_factor needs R > 0, got {R}")
    if not p.is_massive:
        return 1.0 + 2.0 ** (1.0 / p.alpha)
    target = 0.5 * tail_mass(p, R, q)
    hi = 2.0
    while tail_mass(p, hi * R, q) > target:
        hi *= 2.0
    s = optimize.brentq(lambda k: tail_mass(p, k * R, q) - target, 1.0, hi, xtol=1e-10)
    return 1.0 + s


# ---------------------------------------------------------------------------
# Rate function V_{m,alpha} (d = 1)

@dataclass(frozen=True)
class RateConstants:
    """Calibrated constants of the massive rate function and the crossover radius r0"""

    alpha: float
    m: float
    c_lower: float
    c_upper: float
    r0: float
    n: int

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "m": self.m, "c_lower": self.c_lower,
                "c_upper": self.c_upper, "r0": self.r0, "n": self.n}

    @classmethod
    def from_dict(cls, data: dict) -> "RateConstants":
        return cls(float(data["alpha"]), float(data["m"]), float(data["c_lower"]),
                   float(data["c_upper"]), float(data["r0"]), int(data["n"]))


_RATE_CACHE: dict = {}
_RATE_LOCK = threading.Lock()


def survival_ratio(p: ModelParams, r: float, n: int, seed: int):
    """Ratio of massive to massless half-line survival at the self-similar time 4 r^alpha

    Returns (ratio, stderr). Both probabilities are comparable to V(r)/sqrt(t), so the
    ratio estimates V_m(r)/r^(alpha/2).
    """
    # Import here to avoid circular imports
    from sampler import StepConfig
    from stopping import estimate_halfline_survival

    t = 4.0 * r ** p.alpha
    cfg = StepConfig(h=t / 200.0, t_max=t)
    massive = estimate_halfline_survival(p, r, t, n, cfg, seed)
    reference = estimate_halfline_survival(p.massless(), 1.0, 4.0, n, StepConfig(4.0 / 200.0, 4.0), seed + 1)
    if massive.value <= 0 or reference.value <= 0:
        raise NumericalError("half-line survival estimate vanished; increase n")
    ratio = massive.value / reference.value
    stderr = ratio * math.hypot(massive.stderr / massive.value, reference.stderr / reference.value)
    return ratio, stderr


def calibrate_rate_constants(p: ModelParams, n: int = Defaults.CALIBRATION_PATHS,
                             seed: int = Defaults.SEED) -> RateConstants:
    """Fit C1, C2 of the massive rate function from half-line survival ratios on r <= r0"""
    _require_massive(p, "calibrate_rate_constants")
    r0 = 1.0 / p.mass_scale
    ratios, lows, highs = [], [], []
    for k, fraction in enumerate(Defaults.CALIBRATION_GRID):
        ratio, stderr = survival_ratio(p, fraction * r0, n, seed + 2 * k)
        ratios.append(ratio)
        lows.append(ratio - 4.0 * stderr)
        highs.append(ratio + 4.0 * stderr)
        logger.debug("rate calibration r=%.4g ratio=%.4f +- %.4f", fraction * r0, ratio, stderr)
    c_lower = min(lows)
    if c_lower <= 0:
        c_lower = 0.5 * min(ratios)
    return RateConstants(p.alpha, p.m, c_lower, max(highs), r0, n)


def rate_constants(p: ModelParams, n: int = Defaults.CALIBRATION_PATHS, seed: int = Defaults.SEED,
                   store=None) -> RateConstants:
    """Memoised calibration; the first record published for (alpha, m) is the one every caller sees

    The lock guards the cache only; the Monte-Carlo calibration runs outside it.
    """
    key = (float(p.alpha), float(p.m))
    with _RATE_LOCK:
        cached = _RATE_CACHE.get(key)
    if cached is None and store is not None:
        cached = store.get(p.alpha, p.m)
    if cached is not None:
        with _RATE_LOCK:
            return _RATE_CACHE.setdefault(key, cached)
    constants = calibrate_rate_constants(p, n, seed)
    with _RATE_LOCK:
        published = _RATE_CACHE.setdefault(key, constants)
    if published is constants:
        logger.info("calibrated rate constants for %s: [%.4f, %.4f]", p.label(),
                    constants.c_lower, constants.c_upper)
        if store is not None:
            store.put(constants)
    return published


def rate_function(p: ModelParams, r: float, constants: RateConstants | None = None) -> Interval:
    """Two-sided bound on V_{m,alpha}(r); exact r^(alpha/2) when m = 0"""
    if p.d != 1:
        raise DomainError(f"rate_function is defined for d = 1 only, got d = {p.d}")
    if r < 0:
        raise DomainError(f"rate_function needs r >= 0, got {r}")
    if r == 0:
        return Interval(0.0, 0.0)
    exact = r ** (0.5 * p.alpha)
    if not p.is_massive:
        return Interval(exact, exact)
    c = constants or rate_constants(p)
    if r <= c.r0:
        return Interval(c.c_lower * exact, c.c_upper * exact)
    at_r0 = c.r0 ** (0.5 * p.alpha)
    return Interval(c.c_lower * at_r0, c.c_upper * at_r0 * r / c.r0)


def halfline_survival_envelope(p: ModelParams, r: float, t: float,
                               constants: RateConstants | None = None) -> Interval:
    """Universal two-sided bound on P^r(tau_(0,inf) > t) built from the rate function"""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    v = rate_function(p, r, constants)
    root_t = math.sqrt(t)
    return Interval(HALFLINE_C_LOWER * min(v.lo / root_t, 1.0),
                    HALFLINE_C_UPPER * min(v.hi / root_t, 1.0))


def classify_recurrence(p: ModelParams) -> Recurrence:
    if p.is_massive:
        return Recurrence.RECURRENT if p.d <= 2 else Recurrence.TRANSIENT
    if p.d == 1 and p.alpha >= 1:
        return Recurrence.RECURRENT
    return Recurrence.TRANSIENT


def density_rows(p: ModelParams, radii, q: QuadratureSpec | None = None) -> list:
    """Rows r, j_m, j_0, sigma, tail_mass for the density/tailmass commands"""
    radii = _as_radii(np.atleast_1d(radii))
    j0 = jump_density(p.massless(), radii)
    jm = jump_density(p, radii) if p.is_massive else j0
    sigma = sigma_density(p, radii, q) if p.is_massive else np.zeros_like(radii)
    rows = []
    for i, r in enumerate(radii):
        rows.append({"r": float(r), "j_m": float(jm[i]), "j_0": float(j0[i]),
                     "sigma": float(sigma[i]), "tail_mass": tail_mass(p, float(r), q)})
    return rows
