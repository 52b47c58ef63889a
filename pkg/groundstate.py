# groundstate.py
"""
Ground states of the relativistic operator with a potential well
Feynman-Kac ratios by optional stopping, the explicit profile bands, the
normalisation at the well edge, moments, boundary and symmetry diagnostics,
and level-set bounds for decaying radial potentials
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from config import Defaults
from errors import DomainError, HypothesisError, NumericalError
from levy import Interval, ModelParams, jump_density, sphere_area
from sampler import Brownian, ExitBall, HitBall, Process, StepConfig, as_point, process_dimension, simulate
from specfun import QuadratureSpec, beta_fn, integrate_adaptive, integrate_log_axis
from stopping import Estimate, estimate_exit_mgf, estimate_hitting_laplace, pooled_z, weighted_estimate

logger = logging.getLogger(__name__)

# Beyond m^(1/alpha) r = this value the squared massive kernel is negligible
_MASSIVE_CUTOFF_Z = 100.0


@dataclass(frozen=True)
class WellSpec:
    """Spherical potential well V = -v 1_{B_a}"""

    a: float
    v: float

    def __post_init__(self):
        if not (self.a > 0 and self.v > 0):
            raise DomainError(f"well needs a > 0 and v > 0, got a={self.a}, v={self.v}")

    def reference_point(self, d: int) -> np.ndarray:
        """The boundary point (a, 0, ..., 0)"""
        return as_point(self.a, d)


@dataclass(frozen=True)
class RadialPotential:
    """Non-increasing continuous v(|x|) >= 0 decaying to 0; kind is table, exp or well"""

    kind: str
    v0: float
    scale: float = 1.0
    radii: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("table", "exp", "well"):
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if not (self.v0 > 0 and self.scale > 0):
            raise DomainError(f"potential needs v(0) > 0 and scale > 0, got {self.v0}, {self.scale}")
        if self.kind == "table":
            r, v = np.asarray(self.radii), np.asarray(self.values)
            if r.size < 2 or r.size != v.size:
                raise DomainError("potential table needs at least two (r, v) pairs of equal length")
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise DomainError("potential table radii must be non-negative and increasing")
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise DomainError("potential table values must be non-negative and non-increasing")
            if v[-1] != 0:
                raise DomainError("potential table must decay to 0 at its last radius")

    @classmethod
    def from_table(cls, radii, values) -> "RadialPotential":
        radii = tuple(float(r) for r in radii)
        values = tuple(float(v) for v in values)
        return cls("table", values[0] if values else 0.0, 1.0, radii, values)

    @classmethod
    def exponential(cls, v0: float, scale: float = 1.0) -> "RadialPotential":
        """v(r) = v0 exp(-r/scale)"""
        return cls("exp", float(v0), float(scale))

    @classmethod
    def from_well(cls, well: WellSpec) -> "RadialPotential":
        """The well as a degenerate decaying potential (v on [0, a), 0 beyond)"""
        return cls("well", well.v, well.a)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "exp":
            out = self.v0 * np.exp(-r / self.scale)
        elif self.kind == "well":
            out = np.where(r < self.scale, self.v0, 0.0)
        else:
            out = np.interp(r, self.radii, self.values, left=self.values[0], right=0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def reference_radius(self) -> float:
        if self.kind in ("exp", "well"):
            return self.scale
        return level_set_radius(self, self.v0 / math.e)


def level_set_radius(pot: RadialPotential, gamma: float) -> float:
    """r_gamma = sup{r : v(r) >= gamma} by bisection on the monotone profile"""
    if not 0 < gamma < pot.v0:
        raise DomainError(f"gamma must lie in (0, v(0)={pot.v0}), got {gamma}")
    hi = 1.0
    while pot(hi) >= gamma:
        hi *= 2.0
        if hi > 1e12:
            raise NumericalError("level set is unbounded")
    return optimize.bisect(lambda r: pot(r) - gamma, 0.0, hi, xtol=1e-13, rtol=1e-13)


# ---------------------------------------------------------------------------
# Profiles

@dataclass(frozen=True)
class ProfileMeta:
    params: ModelParams
    well: WellSpec
    lambda0_abs: float
    lambda_a: float

    @property
    def gap(self) -> float:
        """lambda_a - v + |lambda0|, positive under the gap inequality"""
        return self.lambda_a - self.well.v + self.lambda0_abs

    @property
    def kappa(self) -> float:
        return (self.well.v - self.lambda0_abs) / self.gap

    def require_gap(self):
        if not self.gap > 0:
            raise DomainError(f"v - |lambda0| = {self.well.v - self.lambda0_abs:.6g} "
                              f"must stay below lambda_a = {self.lambda_a:.6g}")

    def as_dict(self) -> dict:
        return {"d": self.params.d, "alpha": self.params.alpha, "m": self.params.m, "a": self.well.a,
                "v": self.well.v, "lambda0": -self.lambda0_abs, "lambda_a": self.lambda_a}


def _radius(x) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))


def profile_inside(meta: ProfileMeta, x) -> float:
    """1 + kappa ((a - |x|)/a)^(alpha/2) for |x| <= a"""
    meta.require_gap()
    r, a = _radius(x), meta.well.a
    if r > a * (1 + 1e-12):
        raise DomainError(f"|x| = {r} lies outside the well of radius {a}")
    return 1.0 + meta.kappa * (max(a - r, 0.0) / a) ** (0.5 * meta.params.alpha)


def profile_outside(meta: ProfileMeta, x) -> float:
    """j_{m,alpha}(|x|) for |x| >= a"""
    r = _radius(x)
    if r < meta.well.a * (1 - 1e-12):
        raise DomainError(f"|x| = {r} lies inside the well of radius {meta.well.a}")
    return float(jump_density(meta.params, r))


def profile(meta: ProfileMeta, r) -> np.ndarray:
    """Both branches on an array of radii"""
    radii = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    return np.array([profile_inside(meta, v) if v <= meta.well.a else profile_outside(meta, v) for v in radii])


@dataclass(frozen=True)
class ProfileBand:
    """Envelope c_lo * profile <= phi/phi(a) <= c_hi * profile, one constant pair per branch"""

    meta: ProfileMeta
    lower_in: float
    upper_in: float
    lower_out: float
    upper_out: float

    def __post_init__(self):
        if not (0 < self.lower_in <= self.upper_in and 0 < self.lower_out <= self.upper_out):
            raise DomainError("profile band constants must satisfy 0 < lower <= upper")

    def _constants(self, radii):
        inside = radii <= self.meta.well.a
        return (np.where(inside, self.lower_in, self.lower_out),
                np.where(inside, self.upper_in, self.upper_out))

    def lower(self, r) -> np.ndarray:
        radii = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
        return self._constants(radii)[0] * profile(self.meta, radii)

    def upper(self, r) -> np.ndarray:
        radii = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
        return self._constants(radii)[1] * profile(self.meta, radii)

    def contains(self, r, values) -> np.ndarray:
        values = np.atleast_1d(np.asarray(values, dtype=float))
        return (self.lower(r) <= values) & (values <= self.upper(r))

    def rows(self, radii) -> list:
        lo, hi = self.lower(radii), self.upper(radii)
        return [{"r": float(r), "lower": float(l), "upper": float(u)} for r, l, u in zip(radii, lo, hi)]


def unit_band(meta: ProfileMeta) -> ProfileBand:
    """The bare profile with all constants 1"""
    return ProfileBand(meta, 1.0, 1.0, 1.0, 1.0)


def fit_profile_band(meta: ProfileMeta, r, values, stride: int = 4, widen: float = 1.5) -> ProfileBand:
    """Fit one constant per branch in log space on every stride-th radius and widen the spread"""
    radii = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if radii.shape != values.shape or np.any(values <= 0):
        raise DomainError("profile fit needs matching radii and positive values")
    ratios = np.log(values / profile(meta, radii))
    inside = radii <= meta.well.a
    reference = np.zeros(radii.size, dtype=bool)
    reference[::stride] = True
    constants = []
    for branch in (inside, ~inside):
        chosen = ratios[branch & reference]
        if chosen.size == 0:
            chosen = ratios[branch]
        if chosen.size == 0:
            constants.extend([1.0, 1.0])
            continue
        centre = float(np.mean(chosen))
        spread = float(np.max(np.abs(chosen - centre))) + math.log(widen)
        constants.extend([math.exp(centre - spread), math.exp(centre + spread)])
    return ProfileBand(meta, *constants)


def mean_exit_riesz_shape(alpha: float, R: float, x) -> float:
    """(R^2 - |x|^2)^(alpha/2) / R^alpha"""
    r = _radius(x)
    if r >= R:
        raise DomainError(f"|x| = {r} is not inside B_{R}")
    return (R * R - r * r) ** (0.5 * alpha) / R ** alpha


# ---------------------------------------------------------------------------
# Feynman-Kac ratios

def gap_inequality_check(well: WellSpec, lambda0_abs: float, lambda_a: float) -> bool:
    """v - |lambda0| < lambda_a"""
    holds = well.v - lambda0_abs < lambda_a
    if not holds:
        logger.warning("gap inequality fails: v - |lambda0| = %.6g >= lambda_a = %.6g",
                       well.v - lambda0_abs, lambda_a)
    return holds


def _check_lambda0(well: WellSpec, lambda0_abs: float):
    if not 0 < lambda0_abs <= well.v:
        raise DomainError(f"|lambda0| must lie in (0, v={well.v}], got {lambda0_abs}")


def fk_ratio_inside(process: Process, well: WellSpec, lambda0_abs: float, x, n: int, cfg: StepConfig,
                    seed: int, lambda_a_hat: float = math.inf, streams: int = 1,
                    workers: Optional[int] = None) -> Estimate:
    """E^x[e^((v - |lambda0|) tau_a)], the surrogate of phi0(x)/phi0(a) inside the well"""
    _check_lambda0(well, lambda0_abs)
    rate = well.v - lambda0_abs
    if rate >= lambda_a_hat:
        raise HypothesisError("v - |lambda0| < lambda_a",
                              f"v - |lambda0| = {rate:.6g}, lambda_a = {lambda_a_hat:.6g}")
    point = as_point(x, process_dimension(process))
    r = float(np.linalg.norm(point))
    if r > well.a:
        raise DomainError(f"|x| = {r} lies outside the well; use fk_ratio_outside")
    if r == well.a or rate == 0:
        return Estimate(1.0, 0.0, n)
    return estimate_exit_mgf(process, well.a, point, rate, n, cfg, seed, lambda_a_hat, streams, workers)


def fk_ratio_outside(process: Process, well: WellSpec, lambda0_abs: float, x, n: int, cfg: StepConfig,
                     seed: int, streams: int = 1, workers: Optional[int] = None) -> Estimate:
    """E^x[e^(-|lambda0| T_a)] outside the well"""
    if not lambda0_abs > 0:
        raise DomainError(f"|lambda0| must be positive, got {lambda0_abs}")
    point = as_point(x, process_dimension(process))
    if np.linalg.norm(point) < well.a:
        raise DomainError("x lies inside the well; use fk_ratio_inside")
    return estimate_hitting_laplace(process, well.a, point, lambda0_abs, n, cfg, seed, streams, workers)


def fk_ratio(process: Process, well: WellSpec, lambda0_abs: float, x, n: int, cfg: StepConfig, seed: int,
             lambda_a_hat: float = math.inf, streams: int = 1, workers: Optional[int] = None):
    """Branch by |x|; the boundary belongs to the inside branch. Returns (branch, Estimate)"""
    point = as_point(x, process_dimension(process))
    if np.linalg.norm(point) <= well.a:
        return "inside", fk_ratio_inside(process, well, lambda0_abs, point, n, cfg, seed, lambda_a_hat,
                                         streams, workers)
    return "outside", fk_ratio_outside(process, well, lambda0_abs, point, n, cfg, seed, streams, workers)


def groundstate_mc_rows(process: Process, meta: ProfileMeta, radii, n: int, cfg: StepConfig, seed: int,
                        streams: int = 1, workers: Optional[int] = None) -> list:
    """Rows r, estimate, stderr, branch, profile_lower, profile_upper along the first axis"""
    d = process_dimension(process)
    results = []
    for k, r in enumerate(radii):
        branch, est = fk_ratio(process, meta.well, meta.lambda0_abs, as_point(float(r), d), n, cfg,
                               seed + k, meta.lambda_a, streams, workers)
        results.append((float(r), branch, est))
    inside = [(r, e.value) for r, b, e in results if b == "inside" and e.value > 0]
    outside = [(r, e.value) for r, b, e in results if b == "outside" and e.value > 0]
    fitted = [*inside, *outside]
    band = unit_band(meta)
    if fitted:
        band = fit_profile_band(meta, [r for r, _ in fitted], [v for _, v in fitted], stride=1)
    lo, hi = band.lower([r for r, _, _ in results]), band.upper([r for r, _, _ in results])
    return [{"r": r, "estimate": e.value, "stderr": e.stderr, "branch": b,
             "profile_lower": float(lo[i]), "profile_upper": float(hi[i])}
            for i, (r, b, e) in enumerate(results)]


# ---------------------------------------------------------------------------
# Normalisation and moments

def _squared_kernel_integral(p: ModelParams, lo: float, power: float, q: QuadratureSpec | None) -> float:
    """int_lo^inf r^power j(r)^2 dr; inf when the integrand is not integrable"""
    if not p.is_massive:
        exponent = power - 2.0 * (p.d + p.alpha)
        if exponent >= -1.0:
            return math.inf
        c = float(jump_density(p, 1.0))
        return c * c * lo ** (exponent + 1.0) / -(exponent + 1.0)
    hi = lo + _MASSIVE_CUTOFF_Z / p.mass_scale
    return integrate_log_axis(lambda r: r ** power * float(jump_density(p, r)) ** 2, lo, hi, q,
                              "squared kernel")


def normalisation_integral(p: ModelParams, a: float, q: QuadratureSpec | None = None) -> float:
    """int_1^inf s^(d-1) j^2(a s) ds, the exterior term of the edge normalisation"""
    value = _squared_kernel_integral(p, a, p.d - 1.0, q) / a ** p.d
    if not math.isfinite(value):
        raise NumericalError("exterior normalisation integral diverged")
    return value


def phi_at_a(p: ModelParams, well: WellSpec, lambda0_abs: float, lambda_a: float,
             q: QuadratureSpec | None = None, slack: float = Defaults.PHI_A_SLACK) -> Interval:
    """Band for phi0 at the well edge from the profile normalisation"""
    meta = ProfileMeta(p, well, lambda0_abs, lambda_a)
    meta.require_gap()
    a, d, alpha, kappa = well.a, p.d, p.alpha, meta.kappa
    exterior = normalisation_integral(p, a, q)
    total = (1.0 / d + 2.0 * kappa * beta_fn(d, 1.0 + 0.5 * alpha)
             + kappa * kappa * beta_fn(d, 1.0 + alpha) + exterior)
    central = (a ** d * sphere_area(d) * total) ** -0.5
    logger.debug("phi(a) central value %.6g (kappa=%.4g, exterior=%.4g)", central, kappa, exterior)
    return Interval(central / slack, central * slack)


def p_star(p: ModelParams) -> float:
    """Moment threshold: d + 2 alpha when m = 0, unbounded when m > 0"""
    return p.d + 2.0 * p.alpha if not p.is_massive else math.inf


@dataclass(frozen=True)
class MomentResult:
    p_exp: float
    lower: float
    upper: float
    diverged: bool
    truncated: tuple = field(default=())
    growth_diverged: Optional[bool] = None

    def row(self) -> dict:
        return {"p": self.p_exp, "lower": self.lower, "upper": self.upper, "diverged": self.diverged}


def _inside_moment(meta: ProfileMeta, p_exp: float, q: QuadratureSpec | None) -> float:
    d = meta.params.d
    return integrate_adaptive(lambda r: r ** (p_exp + d - 1) * profile_inside(meta, r) ** 2,
                              0.0, meta.well.a, q, "inside moment")


def _outside_moment(meta: ProfileMeta, p_exp: float, hi: float, q: QuadratureSpec | None) -> float:
    d = meta.params.d
    return integrate_log_axis(lambda r: r ** (p_exp + d - 1) * float(jump_density(meta.params, r)) ** 2,
                              meta.well.a, hi, q, "outside moment")


def truncated_growth(truncated) -> Optional[bool]:
    """Divergence read off integrals truncated at successive decades: the increments stop shrinking"""
    if len(truncated) < 3:
        return None
    first = truncated[-2] - truncated[-3]
    second = truncated[-1] - truncated[-2]
    # increments at quadrature noise level count as zero
    floor = 1e-9 * abs(truncated[-1])
    if second <= floor:
        return False
    if first <= floor:
        return True
    return second / first >= Defaults.MOMENT_GROWTH_RATIO


def moment_lambda_p(band: ProfileBand, phi_a: Interval, p_exp: float, q: QuadratureSpec | None = None,
                    cutoffs=(1e2, 1e3, 1e4)) -> MomentResult:
    """Band for Lambda_p = (int |x|^p phi0^2)^(1/p) from the profile band"""
    if not p_exp > 0:
        raise DomainError(f"moment order must be positive, got {p_exp}")
    meta = band.meta
    params = meta.params
    area = sphere_area(params.d)
    inside = _inside_moment(meta, p_exp, q)
    truncated = tuple(inside + _outside_moment(meta, p_exp, L, q) for L in cutoffs if L > meta.well.a)
    growing = truncated_growth(truncated)
    diverged = p_exp >= p_star(params)
    if growing is not None and growing != diverged:
        logger.warning("Lambda_%g: threshold p* = %g says %s but truncated integrals %s say %s",
                       p_exp, p_star(params), "diverges" if diverged else "converges", truncated,
                       "diverges" if growing else "converges")
    if diverged:
        logger.info("Lambda_%g diverges (p >= %g); truncated integrals %s", p_exp, p_star(params), truncated)
        return MomentResult(p_exp, math.inf, math.inf, True, truncated, growing)
    outside = _squared_kernel_integral(params, meta.well.a, p_exp + params.d - 1.0, q)
    low = area * phi_a.lo ** 2 * (band.lower_in ** 2 * inside + band.lower_out ** 2 * outside)
    high = area * phi_a.hi ** 2 * (band.upper_in ** 2 * inside + band.upper_out ** 2 * outside)
    return MomentResult(p_exp, low ** (1.0 / p_exp), high ** (1.0 / p_exp), False, truncated, growing)


def moment_bounds(p: ModelParams, well: WellSpec, lambda0_abs: float, lambda_a: float, phi_a: Interval,
                  p_exp: float, delta: float, q: QuadratureSpec | None = None,
                  slack: float = Defaults.MOMENT_SLACK) -> Interval:
    """Lower and upper bounds on Lambda_p sharing the factor (lambda_a / gap)^(2/p)

    The upper end is inf when p_exp >= p_star or when v <= lambda_a + delta.
    """
    if not (p_exp > 0 and delta > 0):
        raise DomainError(f"need p > 0 and delta > 0, got p={p_exp}, delta={delta}")
    gap = lambda_a - well.v + lambda0_abs
    if not gap > 0:
        raise HypothesisError("v - |lambda0| < lambda_a", f"gap = {gap:.6g}")
    a, d = well.a, p.d
    area = sphere_area(d)
    factor = (lambda_a / gap) ** 2
    ball_weighted = area * a ** (p_exp + d) * beta_fn(p_exp + d, 1.0 + p.alpha)
    lower = (phi_a.lo ** 2 * factor * ball_weighted) ** (1.0 / p_exp) / slack
    if p_exp >= p_star(p):
        return Interval(lower, math.inf)
    if not well.v > lambda_a + delta:
        logger.info("upper moment bound needs v > lambda_a + delta (v = %.6g, lambda_a + delta = %.6g)",
                    well.v, lambda_a + delta)
        return Interval(lower, math.inf)
    ball = area * a ** (p_exp + d) / (p_exp + d)
    exterior = area * _squared_kernel_integral(p, a, p_exp + d - 1.0, q)
    upper = (phi_a.hi ** 2 * factor * (ball + exterior)) ** (1.0 / p_exp) * slack
    return Interval(lower, upper)


# ---------------------------------------------------------------------------
# Diagnostics

def boundary_exponent(r, phi, a: float, side: str = "inside", phi_a: Optional[float] = None,
                      width: Optional[float] = None) -> float:
    """Least-squares slope of log|phi/phi(a) - 1| against log||r| - a| on one side of a"""
    radii = np.abs(np.asarray(r, dtype=float))
    values = np.asarray(phi, dtype=float)
    if side not in ("inside", "outside"):
        raise DomainError(f"side must be inside or outside, got {side!r}")
    if phi_a is None:
        phi_a = float(np.interp(a, radii, values))
    distance = a - radii if side == "inside" else radii - a
    keep = distance > 0
    if width is not None:
        keep &= distance <= width
    deviation = np.abs(values[keep] / phi_a - 1.0)
    distance = distance[keep]
    usable = deviation > 1e-14
    if keep.sum() < 8:
        raise DomainError(f"boundary fit needs at least 8 points on the {side}, got {int(keep.sum())}")
    if usable.sum() < 2:
        raise NumericalError("boundary fit: profile is flat at the edge")
    slope, _ = np.polyfit(np.log(distance[usable]), np.log(deviation[usable]), 1)
    return float(slope)


@dataclass(frozen=True)
class SymmetryReport:
    points: tuple
    estimates: tuple
    max_z: float

    @property
    def passed(self) -> bool:
        return self.max_z < 3.0

    def rows(self) -> list:
        return [{"point": ";".join(format(c, ".6g") for c in point), "value": e.value, "stderr": e.stderr}
                for point, e in zip(self.points, self.estimates)]


def _symmetry_report(process, well, lambda0_abs, points, n, cfg, seed, lambda_a_hat, streams, workers):
    estimates = []
    for k, point in enumerate(points):
        _, est = fk_ratio(process, well, lambda0_abs, point, n, cfg, seed + k, lambda_a_hat, streams, workers)
        estimates.append(est)
    worst = 0.0
    for i in range(len(estimates)):
        for j in range(i + 1, len(estimates)):
            worst = max(worst, pooled_z(estimates[i], estimates[j]))
    logger.info("symmetry check over %d points: max z = %.3f", len(points), worst)
    return SymmetryReport(tuple(tuple(map(float, p)) for p in points), tuple(estimates), worst)


def check_radial_symmetry(process: Process, well: WellSpec, lambda0_abs: float, radius: float, k_points: int,
                          n: int, cfg: StepConfig, seed: int, lambda_a_hat: float = math.inf,
                          streams: int = 1, workers: Optional[int] = None) -> SymmetryReport:
    """FK estimates at k rotated points on a circle in the first two coordinates"""
    d = process_dimension(process)
    if d < 2:
        raise DomainError("rotational symmetry needs d >= 2")
    if k_points < 1:
        raise DomainError(f"need at least one point, got {k_points}")
    points = []
    for j in range(k_points):
        theta = 2.0 * math.pi * j / k_points
        point = np.zeros(d)
        point[0], point[1] = radius * math.cos(theta), radius * math.sin(theta)
        points.append(point)
    return _symmetry_report(process, well, lambda0_abs, points, n, cfg, seed, lambda_a_hat, streams, workers)


def check_reflection_symmetry(process: Process, well: WellSpec, lambda0_abs: float, x, n: int, cfg: StepConfig,
                              seed: int, lambda_a_hat: float = math.inf, streams: int = 1,
                              workers: Optional[int] = None) -> SymmetryReport:
    """FK estimates at x and at its mirror image in the first coordinate"""
    point = as_point(x, process_dimension(process))
    mirror = point.copy()
    mirror[0] = -mirror[0]
    return _symmetry_report(process, well, lambda0_abs, [point, mirror], n, cfg, seed, lambda_a_hat,
                            streams, workers)


# ---------------------------------------------------------------------------
# Decaying potentials

@dataclass(frozen=True)
class DecayingBand:
    """Bounds on phi0(x) relative to phi0 on level-set boundaries

    inside: lower = E[e^((gamma - |l0|) tau)], full = E[e^(int v - |l0| tau)], upper = E[e^((v0 - |l0|) tau)]
    outside: lower = E[e^(-|l0| T_1)], upper = upper_constant * E[e^((gamma1 - |l0|) T_1)]
    """

    branch: str
    x_norm: float
    level_radii: tuple
    lower: Estimate
    upper: Estimate
    full: Optional[Estimate] = None
    upper_constant: float = 1.0

    def contains(self, value: float, slack: float = 1.0) -> bool:
        return self.lower.value / slack <= value <= self.upper_constant * self.upper.value * slack

    def row(self) -> dict:
        return {"x": self.x_norm, "branch": self.branch, "lower": self.lower.value,
                "full": self.full.value if self.full else math.nan,
                "upper": self.upper_constant * self.upper.value}


def _dirichlet_level(process: Process, R: float, lambda_r: Optional[Callable]) -> float:
    if lambda_r is not None:
        return float(lambda_r(R))
    # Import here to avoid circular imports
    from oracles import brownian_dirichlet_eigenvalue, dirichlet_eigenvalue
    if isinstance(process, Brownian):
        return brownian_dirichlet_eigenvalue(R, process.d)
    if process.d != 1:
        raise DomainError("Dirichlet eigenvalues for d >= 2 must be supplied through lambda_r")
    return dirichlet_eigenvalue(process, R)


def decaying_bounds(process: Process, pot: RadialPotential, lambda0_abs: float, gammas, x, n: int,
                    cfg: StepConfig, seed: int, lambda_r: Optional[Callable] = None, streams: int = 1,
                    workers: Optional[int] = None) -> DecayingBand:
    """Level-set bounds on phi0 for a decaying radial potential

    gammas is (gamma,) inside the level set of the first level and (gamma1, gamma2) outside it.
    """
    gammas = tuple(float(g) for g in np.atleast_1d(gammas))
    if not 0 < lambda0_abs < pot.v0:
        raise DomainError(f"|lambda0| must lie in (0, v(0)={pot.v0}), got {lambda0_abs}")
    radii = tuple(level_set_radius(pot, g) for g in gammas)
    point = as_point(x, process_dimension(process))
    r = float(np.linalg.norm(point))

    if r < radii[0]:
        gamma, r_gamma = gammas[0], radii[0]
        upper_rate = pot.v0 - lambda0_abs
        threshold = _dirichlet_level(process, r_gamma, lambda_r)
        if upper_rate >= threshold:
            raise HypothesisError("v(0) - |lambda0| < lambda_{r_gamma}",
                                  f"{upper_rate:.6g} >= {threshold:.6g}")
        batch = simulate(process, point, ExitBall(r_gamma), cfg, seed, n, streams, workers, potential=pot)
        tau = batch.tau_hat
        trunc = batch.truncated_fraction
        lower = weighted_estimate(np.exp((gamma - lambda0_abs) * tau), trunc)
        full = weighted_estimate(np.exp(batch.log_weight - lambda0_abs * tau), trunc)
        upper = weighted_estimate(np.exp(upper_rate * tau), trunc)
        return DecayingBand("inside", r, radii, lower, upper, full)

    if len(gammas) < 2:
        raise DomainError("outside the level set two levels (gamma1, gamma2) are needed")
    gamma1, gamma2 = gammas[0], gammas[1]
    if gamma1 > lambda0_abs:
        raise HypothesisError("gamma1 <= |lambda0|", f"gamma1 = {gamma1:.6g}, |lambda0| = {lambda0_abs:.6g}")
    if gamma1 > gamma2:
        raise HypothesisError("gamma1 <= gamma2", f"gamma1 = {gamma1:.6g}, gamma2 = {gamma2:.6g}")
    threshold = _dirichlet_level(process, radii[1], lambda_r)
    gap = threshold - pot.v0 + lambda0_abs
    if not gap > 0:
        raise HypothesisError("v(0) - |lambda0| < lambda_{r_gamma2}", f"gap = {gap:.6g}")
    constant = 1.0 + (pot.v0 - lambda0_abs) / gap
    batch = simulate(process, point, HitBall(radii[0]), cfg, seed, n, streams, workers)
    tau = batch.tau_hat
    hit = ~batch.truncated
    trunc = batch.truncated_fraction
    lower = weighted_estimate(np.where(hit, np.exp(-lambda0_abs * tau), 0.0), trunc)
    # truncated paths keep their (bounded) weight at t_max so the upper end stays an upper bound
    upper = weighted_estimate(np.exp((gamma1 - lambda0_abs) * tau), trunc)
    return DecayingBand("outside", r, radii, lower, upper, None, constant)
