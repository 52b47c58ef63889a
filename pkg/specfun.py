# specfun.py
"""
Special functions for fracwell
Gamma and Beta (Lanczos, log domain), modified Bessel K from its integral
representation, Bessel J and modified Bessel I from power series, and the
quadrature helpers shared by the other modules
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from config import Defaults
from errors import DomainError, NumericalError

logger = logging.getLogger(__name__)

LANCZOS_G = 7
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
SQRT_TWO_PI = 2.506628274631000502417
LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Largest argument whose Gamma value is still a finite double
GAMMA_OVERFLOW_X = 171.6

# Number of terms kept in the large-argument expansion of K_rho
ASYMPTOTIC_TERMS = 12

# Window edge for log-axis integrands, relative to the peak exponent
LOG_WINDOW_DEPTH = 50.0

_SERIES_MAX_TERMS = 2000
_BLOCK = 2048


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances handed to every adaptive quadrature"""

    abs_tol: float = Defaults.QUAD_ABS_TOL
    rel_tol: float = Defaults.QUAD_REL_TOL
    max_subdivisions: int = Defaults.QUAD_MAX_SUBDIVISIONS

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise DomainError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")


def _is_pole(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def gamma_fn(x: float) -> float:
    """Gamma function by the Lanczos approximation with reflection below 1/2"""
    x = float(x)
    if _is_pole(x):
        raise DomainError(f"Gamma has a pole at {x}")
    if x > GAMMA_OVERFLOW_X:
        raise NumericalError(f"Gamma({x}) overflows; use log_gamma")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    series = LANCZOS_COEFFS[0]
    for i in range(1, len(LANCZOS_COEFFS)):
        series += LANCZOS_COEFFS[i] / (x + i)
    t = x + LANCZOS_G + 0.5
    return SQRT_TWO_PI * t ** (x + 0.5) * math.exp(-t) * series


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0"""
    x = float(x)
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    series = LANCZOS_COEFFS[0]
    for i in range(1, len(LANCZOS_COEFFS)):
        series += LANCZOS_COEFFS[i] / (x + i)
    t = x + LANCZOS_G + 0.5
    return LOG_SQRT_TWO_PI + (x + 0.5) * math.log(t) - t + math.log(series)


def log_abs_gamma(x: float):
    """(log|Gamma(x)|, sign of Gamma(x)); sign 0 and log +inf at the poles"""
    x = float(x)
    if x > 0:
        return log_gamma(x), 1
    if _is_pole(x):
        return math.inf, 0
    value = gamma_fn(x)
    return math.log(abs(value)), (1 if value > 0 else -1)


def log_beta(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise DomainError(f"Beta needs x, y > 0, got ({x}, {y})")
    return log_gamma(x) + log_gamma(y) - log_gamma(x + y)


def beta_fn(x: float, y: float) -> float:
    """B(x, y) = Gamma(x)Gamma(y)/Gamma(x+y), evaluated in the log domain"""
    return math.exp(log_beta(x, y))


# ---------------------------------------------------------------------------
# Quadrature helpers

def integrate_adaptive(func, lo: float, hi: float, q: QuadratureSpec | None = None, what: str = "integral") -> float:
    """scipy quad with the tolerances of q; exhausting the subdivisions raises NumericalError"""
    q = q or QuadratureSpec()
    result = integrate.quad(func, lo, hi, epsabs=q.abs_tol, epsrel=q.rel_tol,
                            limit=q.max_subdivisions, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3:
        message = str(result[3])
        if "maximum number of subdivisions" in message:
            raise NumericalError(f"{what}: quadrature did not converge within "
                                 f"{q.max_subdivisions} subdivisions (error estimate {abserr:.3g})")
        logger.debug("%s: quad warning %r, error estimate %.3g", what, message.splitlines()[0], abserr)
    if not math.isfinite(value):
        raise NumericalError(f"{what}: quadrature returned {value}")
    return value


def integrate_log_axis(func, lo: float, hi: float, q: QuadratureSpec | None = None, what: str = "integral") -> float:
    """Integral of func over [lo, hi] (0 < lo, hi may be inf) after r = e^s"""
    if not lo > 0:
        raise DomainError(f"log-axis integral needs lo > 0, got {lo}")
    s_hi = math.inf if math.isinf(hi) else math.log(hi)
    return integrate_adaptive(lambda s: func(math.exp(s)) * math.exp(s), math.log(lo), s_hi, q, what)


@lru_cache(maxsize=16)
def gauss_legendre(n: int = Defaults.GAUSS_NODES):
    """Gauss-Legendre nodes and weights mapped to [0, 1]"""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


# ---------------------------------------------------------------------------
# Modified Bessel K
#
# K_rho(z) = 1/2 (z/2)^rho * int_R exp(g(s)) ds,  g(s) = -rho s - e^s - (z^2/4) e^-s
# after t = e^s.  g has a single maximum at e^s = u with u^2 + rho u = z^2/4.

def _k_peak(rho, z):
    u = z * z / (2.0 * (rho + np.sqrt(rho * rho + z * z)))
    s_star = np.log(u)
    g_star = -rho * s_star - u - z * z / (4.0 * u)
    return u, s_star, g_star


def _k_exponent(rho, z, s):
    return -rho * s - np.exp(s) - 0.25 * z * z * np.exp(-s)


def _log_k_prefactor(rho, z):
    return math.log(0.5) + rho * np.log(0.5 * z)


def _log_k_asymptotic(rho, z):
    """log K_rho(z) from the large-z expansion sqrt(pi/2z) e^-z sum a_k z^-k"""
    mu = 4.0 * rho * rho
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, ASYMPTOTIC_TERMS + 1):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        total = total + term
    return 0.5 * np.log(np.pi / (2.0 * z)) - z + np.log(total)


def _log_window(rho, u):
    """Half-widths of the region where g(s) - g* > -LOG_WINDOW_DEPTH"""
    right = np.log(LOG_WINDOW_DEPTH + 2.0 * u + rho)
    depth = np.ones_like(u)
    for _ in range(4):
        depth = np.log((LOG_WINDOW_DEPTH + 2.0 * u + rho + rho * depth) / (u + rho) + 1.0)
    return depth, right


def bessel_k(rho: float, z: float, q: QuadratureSpec | None = None) -> float:
    """K_rho(z) by adaptive quadrature of the integral representation"""
    rho = abs(float(rho))
    z = float(z)
    if not z > 0:
        raise DomainError(f"bessel_k needs z > 0, got {z}")
    if z > Defaults.BESSEL_ASYMPTOTIC_Z:
        return float(np.exp(_log_k_asymptotic(rho, np.asarray(z))))
    u, s_star, g_star = _k_peak(rho, z)

    def integrand(s):
        return math.exp(float(_k_exponent(rho, z, s)) - g_star)

    total = (integrate_adaptive(integrand, -math.inf, s_star, q, "bessel_k")
             + integrate_adaptive(integrand, s_star, math.inf, q, "bessel_k"))
    return math.exp(_log_k_prefactor(rho, z) + g_star + math.log(total))


def log_bessel_k_array(rho: float, z) -> np.ndarray:
    """log K_rho(z) for an array of z > 0 (trapezoid rule on the log axis)"""
    rho = abs(float(rho))
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("log_bessel_k_array needs z > 0")
    flat = z.ravel()
    out = np.empty_like(flat)
    large = flat > Defaults.BESSEL_ASYMPTOTIC_Z
    out[large] = _log_k_asymptotic(rho, flat[large])
    small_idx = np.flatnonzero(~large)
    for start in range(0, small_idx.size, _BLOCK):
        idx = small_idx[start:start + _BLOCK]
        zz = flat[idx]
        u, s_star, g_star = _k_peak(rho, zz)
        depth, right = _log_window(rho, u)
        lo = s_star - depth
        width = right - lo
        count = int(np.ceil(width.max() / Defaults.BESSEL_TRAPEZOID_STEP)) + 1
        grid = np.linspace(0.0, 1.0, count)
        s = lo[:, None] + width[:, None] * grid[None, :]
        g = _k_exponent(rho, zz[:, None], s) - g_star[:, None]
        weights = np.full(count, 1.0)
        weights[0] = weights[-1] = 0.5
        step = width / (count - 1)
        integral = np.exp(g) @ weights * step
        out[idx] = _log_k_prefactor(rho, zz) + g_star + np.log(integral)
    return out.reshape(z.shape)


def bessel_k_array(rho: float, z) -> np.ndarray:
    return np.exp(log_bessel_k_array(rho, z))


# ---------------------------------------------------------------------------
# Power series for I_rho and J_rho

def _power_series(rho: float, z: float, alternating: bool):
    """Sum of (+-1)^k (z/2)^(2k+rho) / (k! Gamma(k+rho+1)); returns (sum, largest |term|)"""
    log_half = math.log(0.5 * z)
    terms = []
    largest = 0.0
    for k in range(_SERIES_MAX_TERMS):
        log_den, sign = log_abs_gamma(k + rho + 1.0)
        if sign == 0:
            continue
        log_term = (2 * k + rho) * log_half - log_gamma(k + 1.0) - log_den
        term = sign * math.exp(log_term)
        if alternating and k % 2:
            term = -term
        terms.append(term)
        largest = max(largest, abs(term))
        if k + rho + 1.0 > 0 and k > 0.5 * z and abs(term) <= 1e-17 * largest:
            return math.fsum(terms), largest
    raise NumericalError(f"power series for order {rho} at z={z} did not converge")


def _check_series_argument(name: str, z: float):
    if not z > 0:
        raise DomainError(f"{name} needs z > 0, got {z}")
    if z > Defaults.BESSEL_SERIES_MAX_Z:
        raise NumericalError(f"{name}: z={z} overflows the power series; use log_bessel_i")


def bessel_i(rho: float, z: float) -> float:
    """Modified Bessel I_rho(z) by power series"""
    z = float(z)
    _check_series_argument("bessel_i", z)
    value, _ = _power_series(float(rho), z, alternating=False)
    return value


def log_bessel_i(rho: float, z: float) -> float:
    """log I_rho(z) for rho >= 0, summed relative to the largest term"""
    rho, z = float(rho), float(z)
    if not z > 0 or rho < 0:
        raise DomainError(f"log_bessel_i needs z > 0 and rho >= 0, got ({rho}, {z})")
    log_half = math.log(0.5 * z)
    logs = []
    peak = -math.inf
    for k in range(_SERIES_MAX_TERMS * 10):
        logs.append((2 * k + rho) * log_half - log_gamma(k + 1.0) - log_gamma(k + rho + 1.0))
        peak = max(peak, logs[-1])
        if k > 0.5 * z and logs[-1] < peak - 40.0:
            return peak + math.log(math.fsum(math.exp(v - peak) for v in logs))
    raise NumericalError(f"log_bessel_i series at z={z} did not converge")


def bessel_j(rho: float, z: float) -> float:
    """Bessel J_rho(z) by power series; refuses arguments where cancellation ruins the sum"""
    z = float(z)
    _check_series_argument("bessel_j", z)
    value, largest = _power_series(float(rho), z, alternating=True)
    if largest > 1e6:
        raise NumericalError(f"bessel_j: cancellation at z={z} (largest term {largest:.3g})")
    return value
