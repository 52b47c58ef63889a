# oracles.py
"""
Reference values for the estimators
Classical (Brownian) ground states and exit/hitting transforms in closed form,
and a deterministic 1D spectral solver for the nonlocal operator plus a potential
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import linalg, optimize

from config import Defaults
from errors import DomainError, NoBoundStateError, NumericalError
from groundstate import RadialPotential, WellSpec
from levy import ModelParams, jump_density, sigma_density, sphere_area, tail_mass
from specfun import (QuadratureSpec, bessel_i, bessel_j, bessel_k, gauss_legendre, gamma_fn,
                     integrate_adaptive, integrate_log_axis, log_bessel_i, log_bessel_k_array)

logger = logging.getLogger(__name__)

# Gauss-Legendre nodes per grid cell for kernel and potential averages
CELL_NODES = 16
# Offset keeping bisection brackets off the tangent/Bessel singularities
_BRACKET_EPS = 1e-12

Potential = Union[WellSpec, RadialPotential]


# ---------------------------------------------------------------------------
# Classical ground states

@dataclass(frozen=True)
class ClassicalGroundState:
    """phi0 = B0 cos(k x) on [-a, a], A0 exp(-kappa |x|) outside, for -1/2 d^2/dx^2 - v 1_[-a,a]"""

    lambda0: float
    A0: float
    B0: float
    a: float
    v: float

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * abs(self.lambda0))

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * (self.v - abs(self.lambda0)))

    def __call__(self, x):
        r = np.abs(np.asarray(x, dtype=float))
        out = np.where(r <= self.a, self.B0 * np.cos(self.k * r), self.A0 * np.exp(-self.kappa * r))
        return float(out) if np.ndim(x) == 0 else out

    def continuity_residual(self) -> float:
        return abs(self.B0 * math.cos(self.k * self.a) - self.A0 * math.exp(-self.kappa * self.a))

    def norm(self, q: QuadratureSpec | None = None) -> float:
        """Integral of phi0^2 over the line"""
        inside = integrate_adaptive(lambda r: self(r) ** 2, 0.0, self.a, q, "classical norm")
        outside = integrate_adaptive(lambda r: self(r) ** 2, self.a, math.inf, q, "classical norm")
        return 2.0 * (inside + outside)


def _matching_1d(a: float, v: float, k: float) -> float:
    return k * math.tan(k * a) - math.sqrt(max(2.0 * v - k * k, 0.0))


def classical_groundstate_1d(a: float, v: float) -> ClassicalGroundState:
    """Ground state of the 1D finite well; lambda0 is the most negative matching root"""
    if not (a > 0 and v > 0):
        raise DomainError(f"well needs a > 0 and v > 0, got a={a}, v={v}")
    k_max = math.sqrt(2.0 * v)
    roots = []
    # even solutions live where tan(k a) > 0: k a in (n pi, n pi + pi/2)
    n = 0
    while n * math.pi / a < k_max:
        lo = n * math.pi / a + _BRACKET_EPS
        hi = min((n + 0.5) * math.pi / a, k_max) * (1.0 - _BRACKET_EPS)
        if hi > lo and _matching_1d(a, v, lo) < 0 < _matching_1d(a, v, hi):
            roots.append(optimize.bisect(lambda k: _matching_1d(a, v, k), lo, hi, xtol=1e-15, rtol=1e-15))
        n += 1
    if not roots:
        raise NoBoundStateError(f"no bound state for the 1D well a={a}, v={v}")
    lambda0 = min(0.5 * k * k - v for k in roots)
    k = math.sqrt(2.0 * (v + lambda0))
    kappa = math.sqrt(-2.0 * lambda0)
    B0 = math.sqrt(kappa / (1.0 + a * kappa))
    A0 = B0 * math.exp(kappa * a) * math.cos(k * a)
    logger.debug("classical 1D ground state a=%g v=%g: lambda0=%.12g", a, v, lambda0)
    return ClassicalGroundState(lambda0, A0, B0, a, v)


def first_bessel_zero(nu: float) -> float:
    """First positive zero of J_nu by bracketing and bisection"""
    step = 0.05
    z = step
    previous = bessel_j(nu, z)
    while True:
        following = bessel_j(nu, z + step)
        if previous > 0 >= following:
            return optimize.brentq(lambda s: bessel_j(nu, s), z, z + step, xtol=1e-15)
        z += step
        previous = following
        if z > 200.0:
            raise NumericalError(f"no zero of J_{nu} found below 200")


@dataclass(frozen=True)
class RadialGroundState:
    """Classical ground state of a radial well in d >= 2, normalised in L^2(R^d)"""

    d: int
    a: float
    v: float
    lambda0: float
    scale: float

    @property
    def order(self) -> float:
        return 0.5 * (self.d - 2)

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * abs(self.lambda0))

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * (self.v - abs(self.lambda0)))

    def _inside(self, r: float) -> float:
        nu = self.order
        if r == 0:
            head = (0.5 * self.k * self.a) ** nu / gamma_fn(nu + 1.0)
        else:
            head = (self.a / r) ** nu * bessel_j(nu, self.k * r)
        return head / bessel_j(nu, self.k * self.a)

    def _outside(self, r: float) -> float:
        nu = self.order
        log_ratio = (log_bessel_k_array(nu, np.array([self.kappa * r]))[0]
                     - log_bessel_k_array(nu, np.array([self.kappa * self.a]))[0])
        return (self.a / r) ** nu * math.exp(log_ratio)

    def unnormalised(self, r: float) -> float:
        r = abs(float(r))
        return self._inside(r) if r <= self.a else self._outside(r)

    def __call__(self, r):
        if np.ndim(r) == 0:
            return self.scale * self.unnormalised(r)
        return self.scale * np.array([self.unnormalised(v) for v in np.ravel(r)]).reshape(np.shape(r))

    def continuity_residual(self) -> float:
        return abs(self._inside(self.a) - self._outside(self.a)) * self.scale


def _radial_matching(d: int, a: float, v: float, k: float) -> float:
    nu = 0.5 * (d - 2)
    kappa = math.sqrt(max(2.0 * v - k * k, 0.0))
    left = k * bessel_j(nu + 1.0, k * a) / bessel_j(nu, k * a)
    if kappa == 0:
        return left - (2.0 * nu / a if nu > 0 else 0.0)
    right = kappa * bessel_k(nu + 1.0, kappa * a) / bessel_k(nu, kappa * a)
    return left - right


def classical_groundstate_radial(a: float, v: float, d: int, q: QuadratureSpec | None = None) -> RadialGroundState:
    """Radial well ground state from J/K matching at |x| = a, normalised by quadrature"""
    if d < 2:
        raise DomainError("use classical_groundstate_1d in d = 1")
    if not (a > 0 and v > 0):
        raise DomainError(f"well needs a > 0 and v > 0, got a={a}, v={v}")
    nu = 0.5 * (d - 2)
    k_hi = min(math.sqrt(2.0 * v), first_bessel_zero(nu) / a) * (1.0 - 1e-9)
    k_lo = 1e-9 * k_hi

    def residual(k):
        return _radial_matching(d, a, v, k)

    if not residual(k_lo) < 0 < residual(k_hi):
        raise NoBoundStateError(f"no bound state for the radial well a={a}, v={v}, d={d}")
    k = optimize.bisect(residual, k_lo, k_hi, xtol=1e-14, rtol=1e-14)
    lambda0 = 0.5 * k * k - v
    state = RadialGroundState(d, a, v, lambda0, 1.0)
    area = sphere_area(d)
    inside = integrate_adaptive(lambda r: r ** (d - 1) * state.unnormalised(r) ** 2, 0.0, a, q, "radial norm")
    # e^(-2 kappa r) is below 1e-50 past the cut
    cut = a + 60.0 / state.kappa
    outside = integrate_adaptive(lambda r: r ** (d - 1) * state.unnormalised(r) ** 2, a, cut, q, "radial norm")
    scale = 1.0 / math.sqrt(area * (inside + outside))
    logger.debug("classical radial ground state d=%d a=%g v=%g: lambda0=%.12g", d, a, v, lambda0)
    return RadialGroundState(d, a, v, lambda0, scale)


# ---------------------------------------------------------------------------
# Brownian transforms (generator Delta/2)

def brownian_exit_mgf(a: float, x: float, u: float) -> float:
    """E^x[e^(u tau_a)] = cos(sqrt(2u) x)/cos(sqrt(2u) a) in d = 1; inf at and beyond the blow-up"""
    if u < 0:
        raise DomainError(f"u must be non-negative, got {u}")
    if abs(x) > a:
        raise DomainError(f"|x| = {abs(x)} lies outside (-{a}, {a})")
    s = math.sqrt(2.0 * u)
    if s * a >= 0.5 * math.pi:
        return math.inf
    return math.cos(s * x) / math.cos(s * a)


def brownian_hit_laplace(b: float, u: float) -> float:
    """E^0[e^(-u T_b)] = exp(-sqrt(2u) |b|)"""
    if u < 0:
        raise DomainError(f"u must be non-negative, got {u}")
    return math.exp(-math.sqrt(2.0 * u) * abs(b))


def brownian_interval_exit_laplace(b: float, c: float, x: float, u: float) -> float:
    """E^x[e^(-u T)] for the exit time T of (b, c)"""
    if not b < x < c:
        raise DomainError(f"x={x} must lie in ({b}, {c})")
    s = math.sqrt(2.0 * u)
    return math.cosh(s * (x - 0.5 * (b + c))) / math.cosh(0.5 * s * (c - b))


def brownian_mean_exit(R: float, x, d: int) -> float:
    """E^x[tau_R] = (R^2 - |x|^2)/d"""
    r2 = float(np.sum(np.square(x)))
    if r2 >= R * R:
        raise DomainError("start point must lie inside the ball")
    return (R * R - r2) / d


def _log_i(nu: float, z: float) -> float:
    return log_bessel_i(nu, z) if nu >= 0 else math.log(bessel_i(nu, z))


def brownian_exit_laplace_radial(d: int, R: float, r: float, u: float) -> float:
    """E^x[e^(-u tau_R)], |x| = r < R: (R/r)^nu I_nu(r s)/I_nu(R s)"""
    if not 0 <= r < R:
        raise DomainError(f"need 0 <= |x| < R, got |x|={r}, R={R}")
    if u == 0:
        return 1.0
    nu, s = 0.5 * (d - 2), math.sqrt(2.0 * u)
    if d == 1:
        return math.cosh(s * r) / math.cosh(s * R)
    if r == 0:
        log_head = nu * math.log(0.5 * R * s) - math.log(gamma_fn(nu + 1.0))
    else:
        log_head = nu * math.log(R / r) + _log_i(nu, r * s)
    return math.exp(log_head - _log_i(nu, R * s))


def brownian_hit_laplace_radial(d: int, R: float, r: float, u: float) -> float:
    """E^x[e^(-u T_R)], |x| = r >= R: (R/r)^nu K_nu(r s)/K_nu(R s)"""
    if r < R:
        return 1.0
    nu = 0.5 * (d - 2)
    if u == 0:
        return (R / r) ** (d - 2) if d >= 3 else 1.0
    s = math.sqrt(2.0 * u)
    logs = log_bessel_k_array(abs(nu), np.array([r * s, R * s]))
    return math.exp(nu * math.log(R / r) + logs[0] - logs[1])


def brownian_exit_mgf_radial(d: int, R: float, r: float, u: float) -> float:
    """E^x[e^(u tau_R)] = (R/r)^nu J_nu(r s)/J_nu(R s); inf once R s reaches the first zero"""
    if not 0 <= r < R:
        raise DomainError(f"need 0 <= |x| < R, got |x|={r}, R={R}")
    if u == 0:
        return 1.0
    nu, s = 0.5 * (d - 2), math.sqrt(2.0 * u)
    if R * s >= first_bessel_zero(nu):
        return math.inf
    if r == 0:
        head = (0.5 * R * s) ** nu / gamma_fn(nu + 1.0)
    else:
        head = (R / r) ** nu * bessel_j(nu, r * s)
    return head / bessel_j(nu, R * s)


def brownian_dirichlet_eigenvalue(a: float, d: int) -> float:
    """Principal Dirichlet eigenvalue of -Delta/2 on B_a: j_{nu,1}^2 / (2 a^2)"""
    return first_bessel_zero(0.5 * (d - 2)) ** 2 / (2.0 * a * a)


# ---------------------------------------------------------------------------
# Spectral solver

@dataclass(frozen=True)
class CellGrid:
    """Cell-centred grid on (-L, L)"""

    half_width: float
    nodes: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError(f"half width must be positive, got {self.half_width}")
        if self.nodes < 2:
            raise DomainError(f"need at least 2 nodes, got {self.nodes}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.nodes

    @property
    def centres(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.nodes) + 0.5) * self.spacing


def _kernel(p: ModelParams, kernel: str):
    if kernel == "jump":
        return lambda y: jump_density(p, y)
    if kernel == "sigma":
        return lambda y: sigma_density(p, y)
    raise DomainError(f"kernel must be 'jump' or 'sigma', got {kernel!r}")


def _one_sided_tail(p: ModelParams, s: float, kernel: str, q: QuadratureSpec | None) -> float:
    if kernel == "jump":
        return 0.5 * tail_mass(p, s, q)
    return integrate_log_axis(lambda y: float(sigma_density(p, y)), s, math.inf, q, "sigma tail")


def _near_diagonal(p: ModelParams, delta: float, kernel: str) -> float:
    """int_0^(delta/2) y^2 k(y) dy / delta^2 with y = (delta/2) s^(2/(2-alpha))"""
    power = 2.0 / (2.0 - p.alpha)
    s, wts = gauss_legendre(CELL_NODES)
    y = 0.5 * delta * s ** power
    jacobian = 0.5 * delta * power * s ** (power - 1.0)
    return float(np.sum(wts * y * y * _kernel(p, kernel)(y) * jacobian)) / (delta * delta)


def _cell_weights(p: ModelParams, grid: CellGrid, kernel: str) -> np.ndarray:
    """w_n = integral of the kernel over the n-th neighbouring cell, n = 1..N-1"""
    delta = grid.spacing
    s, wts = gauss_legendre(CELL_NODES)
    lows = (np.arange(1, grid.nodes) - 0.5) * delta
    points = lows[:, None] + delta * s[None, :]
    values = _kernel(p, kernel)(points.ravel()).reshape(points.shape)
    return delta * (values @ wts)


def assemble_operator(p: ModelParams, grid: CellGrid, kernel: str = "jump",
                      q: QuadratureSpec | None = None) -> np.ndarray:
    """Symmetric matrix of phi -> int (phi(x) - phi(y)) k(|x - y|) dy with phi = 0 outside the grid"""
    if p.d != 1:
        raise DomainError("the spectral solver works in d = 1")
    if kernel == "sigma" and not p.is_massive:
        raise DomainError("the sigma kernel needs m > 0")
    delta = grid.spacing
    weights = _cell_weights(p, grid, kernel)
    near = _near_diagonal(p, delta, kernel)
    row = np.empty(grid.nodes)
    row[0] = 2.0 * _one_sided_tail(p, 0.5 * delta, kernel, q) + 2.0 * near
    row[1:] = -weights
    row[1] -= near
    return linalg.toeplitz(row)


def cell_potential(potential: Potential, grid: CellGrid) -> np.ndarray:
    """Cell averages of -v(|x|)"""
    centres, delta = grid.centres, grid.spacing
    if isinstance(potential, WellSpec):
        lo = np.maximum(centres - 0.5 * delta, -potential.a)
        hi = np.minimum(centres + 0.5 * delta, potential.a)
        return -potential.v * np.clip(hi - lo, 0.0, None) / delta
    s, wts = gauss_legendre(CELL_NODES)
    points = centres[:, None] - 0.5 * delta + delta * s[None, :]
    values = potential(np.abs(points).ravel()).reshape(points.shape)
    return -(values @ wts)


def _lowest_eigenpair(matrix: np.ndarray, shift: float, what: str):
    """Inverse iteration with a fixed shift below the spectrum"""
    n = matrix.shape[0]
    try:
        factor = linalg.cho_factor(matrix - shift * np.eye(n))
    except linalg.LinAlgError:
        raise NumericalError(f"{what}: shifted matrix is not positive definite (shift {shift})")
    vector = np.ones(n) / math.sqrt(n)
    value = float(vector @ matrix @ vector)
    for iteration in range(1, Defaults.SPECTRAL_MAX_ITER + 1):
        following = linalg.cho_solve(factor, vector)
        following /= np.linalg.norm(following)
        updated = float(following @ matrix @ following)
        residual = np.linalg.norm(matrix @ following - updated * following)
        vector = following
        if abs(updated - value) <= Defaults.SPECTRAL_TOL * max(1.0, abs(updated)) and residual < 1e-8:
            logger.debug("%s: inverse iteration converged after %d steps", what, iteration)
            return updated, vector
        value = updated
    raise NumericalError(f"{what}: inverse iteration did not converge in {Defaults.SPECTRAL_MAX_ITER} steps")


@lru_cache(maxsize=64)
def _dirichlet_level(p: ModelParams, R: float, nodes: int) -> float:
    matrix = assemble_operator(p, CellGrid(R, nodes))
    value, _ = _lowest_eigenpair(matrix, 0.0, f"dirichlet R={R} N={nodes}")
    return value


def dirichlet_eigenvalue(p: ModelParams, R: float, nodes: int = Defaults.DIRICHLET_NODES,
                         refine: bool = True) -> float:
    """Principal Dirichlet eigenvalue on (-R, R); refine extrapolates from three grid levels"""
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    coarse = _dirichlet_level(p, float(R), nodes)
    if not refine:
        return coarse
    middle = _dirichlet_level(p, float(R), 2 * nodes)
    fine = _dirichlet_level(p, float(R), 4 * nodes)
    first, second = coarse - middle, middle - fine
    if first == 0 or second == 0 or first / second <= 1.0:
        return fine
    ratio = first / second
    order = math.log2(ratio)
    logger.debug("dirichlet R=%g: observed order %.3f", R, order)
    return fine - second / (ratio - 1.0)


@dataclass(frozen=True)
class SpectralData:
    """Ground state of L_{m,alpha} + V on a truncated line"""

    params: ModelParams
    lambda0: float
    r: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    phi_line: np.ndarray = field(repr=False)
    half_width: float = 0.0
    nodes: int = 0
    well_radius: float | None = None
    lambda_a: float | None = None

    def phi_at(self, r):
        """phi0 at radius r by linear interpolation on the table"""
        return np.interp(np.abs(r), self.r, self.phi)

    def lambda_R(self, R: float, refine: bool = True) -> float:
        return dirichlet_eigenvalue(self.params, R, refine=refine)

    def norm(self) -> float:
        return float(np.sum(self.phi_line ** 2) * (2.0 * self.half_width / self.nodes))

    def grid_meta(self) -> dict:
        return {"L": self.half_width, "N": self.nodes, "scheme": "cell-centred, exterior killing"}

    def rows(self) -> list:
        return [{"r": float(r), "phi0": float(v)} for r, v in zip(self.r, self.phi)]

    def header(self) -> dict:
        lambda_r = {} if self.lambda_a is None else {format(self.well_radius, "g"): self.lambda_a}
        return {"lambda0": self.lambda0, "lambdaR": lambda_r, "grid": self.grid_meta()}


def _reference_radius(potential: Potential) -> float:
    return potential.a if isinstance(potential, WellSpec) else potential.reference_radius


def spectral_solve_1d(p: ModelParams, potential: Potential, L: float | None = None,
                      N: int = Defaults.SPECTRAL_NODES, with_lambda_a: bool = True) -> SpectralData:
    """Lowest eigenpair of L_{m,alpha} - v on a cell grid over (-L, L)"""
    if p.d != 1:
        raise DomainError("spectral_solve_1d needs d = 1")
    reference = _reference_radius(potential)
    L = Defaults.SPECTRAL_HALF_WIDTH_FACTOR * reference if L is None else float(L)
    if L < Defaults.SPECTRAL_HALF_WIDTH_FACTOR * reference * (1 - 1e-12):
        raise DomainError(f"half width L={L} is below {Defaults.SPECTRAL_HALF_WIDTH_FACTOR:g} x {reference:g}")
    if N < 256 or N % 2:
        raise DomainError(f"need an even N >= 256 nodes, got {N}")
    grid = CellGrid(L, N)
    matrix = assemble_operator(p, grid)
    cells = cell_potential(potential, grid)
    matrix[np.diag_indices(N)] += cells
    depth = float(-cells.min()) if cells.size else 0.0
    value, vector = _lowest_eigenpair(matrix, -depth - 1.0, f"spectral solve N={N}")
    if value >= 0:
        raise NoBoundStateError(f"lowest eigenvalue {value:.6g} is not negative for {p.label()}")
    if vector.sum() < 0:
        vector = -vector
    vector = vector / math.sqrt(np.sum(vector ** 2) * grid.spacing)
    centres = grid.centres
    half = centres > 0
    # mirror-average the two halves of the symmetric eigenvector
    table = 0.5 * (vector[half] + vector[~half][::-1])
    lambda_a = None
    well_radius = potential.a if isinstance(potential, WellSpec) else None
    if with_lambda_a and well_radius is not None:
        lambda_a = dirichlet_eigenvalue(p, well_radius)
    logger.info("spectral solve %s: lambda0=%.10g (L=%g, N=%d)", p.label(), value, L, N)
    return SpectralData(p, value, centres[half], table, centres, vector, L, N, well_radius, lambda_a)


def spectral_direct_moment(data: SpectralData, p_exp: float) -> float:
    """Lambda_p = (int |x|^p phi0^2 dx)^(1/p) straight from the line table"""
    delta = 2.0 * data.half_width / data.nodes
    integral = float(np.sum(np.abs(data.x) ** p_exp * data.phi_line ** 2) * delta)
    return integral ** (1.0 / p_exp)


def grid_convergence(p: ModelParams, potential: Potential, sizes=(256, 512, 1024, 2048),
                     L: float | None = None) -> list:
    """(N, lambda0(N)) pairs for a doubling sequence"""
    return [(n, spectral_solve_1d(p, potential, L, n, with_lambda_a=False).lambda0) for n in sizes]
