import math

import numpy as np
import pytest
from scipy import optimize

from errors import DomainError, NoBoundStateError
from groundstate import WellSpec
from levy import ModelParams
from oracles import (CellGrid, assemble_operator, brownian_dirichlet_eigenvalue, brownian_exit_laplace_radial,
                     brownian_exit_mgf, brownian_exit_mgf_radial, brownian_hit_laplace, brownian_hit_laplace_radial,
                     brownian_interval_exit_laplace, brownian_mean_exit, classical_groundstate_1d,
                     classical_groundstate_radial, dirichlet_eigenvalue, first_bessel_zero, grid_convergence,
                     spectral_direct_moment, spectral_solve_1d)


class TestClassical1D:
    state = classical_groundstate_1d(1.0, 5.0)

    def test_level_inside_well(self):
        assert -5.0 < self.state.lambda0 < 0.0

    def test_matching_condition(self):
        k, kappa = self.state.k, self.state.kappa
        assert k * math.tan(k) == pytest.approx(kappa, rel=1e-10)
        assert self.state.continuity_residual() < 1e-12

    def test_normalised(self):
        assert self.state.norm() == pytest.approx(1.0, rel=1e-8)

    def test_profile(self):
        assert self.state(0.0) == pytest.approx(self.state.B0)
        assert self.state(-2.0) == self.state(2.0)
        values = self.state(np.linspace(0.0, 5.0, 50))
        assert np.all(np.diff(values) < 0)

    def test_shallow_well_still_binds(self):
        assert classical_groundstate_1d(0.1, 0.1).lambda0 < 0

    def test_bad_well(self):
        with pytest.raises(DomainError):
            classical_groundstate_1d(0.0, 1.0)


class TestClassicalRadial:
    def test_three_dimensions_sine_solution(self):
        state = classical_groundstate_radial(1.0, 5.0, 3)
        k = optimize.brentq(lambda s: s / math.tan(s) + math.sqrt(10.0 - s * s),
                            0.5 * math.pi + 1e-9, math.pi - 1e-9, xtol=1e-15)
        assert state.lambda0 == pytest.approx(0.5 * k * k - 5.0, rel=1e-9)
        assert state.continuity_residual() < 1e-10

    def test_normalised(self):
        state = classical_groundstate_radial(1.0, 4.0, 2)
        r = np.linspace(0.0, 20.0, 8001)
        integrand = 2.0 * math.pi * r * state(r) ** 2
        assert np.sum(integrand) * (r[1] - r[0]) == pytest.approx(1.0, rel=1e-3)

    def test_no_bound_state_in_three_dimensions(self):
        with pytest.raises(NoBoundStateError):
            classical_groundstate_radial(1.0, 1.0, 3)

    def test_line_rejected(self):
        with pytest.raises(DomainError):
            classical_groundstate_radial(1.0, 1.0, 1)


@pytest.mark.parametrize("nu, zero", [(0.0, 2.404825557695773), (0.5, math.pi), (1.0, 3.8317059702075125)])
def test_first_bessel_zero(nu, zero):
    assert first_bessel_zero(nu) == pytest.approx(zero, rel=1e-12)


class TestBrownianTransforms:
    def test_exit_mgf(self):
        assert brownian_exit_mgf(1.0, 0.0, math.pi ** 2 / 18.0) == pytest.approx(2.0)
        assert brownian_exit_mgf(1.0, 0.0, math.pi ** 2 / 8.0) == math.inf
        with pytest.raises(DomainError):
            brownian_exit_mgf(1.0, 2.0, 0.1)

    def test_hit_laplace(self):
        assert brownian_hit_laplace(1.0, 0.5) == pytest.approx(math.exp(-1.0))
        assert brownian_hit_laplace(-2.0, 0.0) == 1.0

    def test_interval(self):
        assert brownian_interval_exit_laplace(-1.0, 1.0, 0.0, 0.5) == pytest.approx(1.0 / math.cosh(1.0))

    def test_mean_exit(self):
        assert brownian_mean_exit(2.0, [1.0, 0.0, 0.0], 3) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            brownian_mean_exit(1.0, [1.0], 1)

    def test_radial_three_dimensions(self):
        R, u = 1.5, 0.8
        s = math.sqrt(2.0 * u)
        assert brownian_exit_laplace_radial(3, R, 0.0, u) == pytest.approx(R * s / math.sinh(R * s), rel=1e-10)
        assert brownian_exit_mgf_radial(3, R, 0.0, 0.3) == pytest.approx(
            R * math.sqrt(0.6) / math.sin(R * math.sqrt(0.6)), rel=1e-10)
        assert brownian_hit_laplace_radial(3, 1.0, 2.0, u) == pytest.approx(0.5 * math.exp(-s), rel=1e-10)

    def test_radial_line_matches_interval(self):
        assert brownian_exit_laplace_radial(1, 1.0, 0.3, 0.5) == pytest.approx(
            brownian_interval_exit_laplace(-1.0, 1.0, 0.3, 0.5))

    def test_radial_mgf_blows_up(self):
        assert brownian_exit_mgf_radial(2, 1.0, 0.0, 0.5 * 2.5 ** 2) == math.inf

    def test_hit_without_killing(self):
        assert brownian_hit_laplace_radial(3, 1.0, 4.0, 0.0) == pytest.approx(0.25)
        assert brownian_hit_laplace_radial(2, 1.0, 4.0, 0.0) == 1.0

    def test_dirichlet(self):
        assert brownian_dirichlet_eigenvalue(1.0, 1) == pytest.approx(math.pi ** 2 / 8.0)
        assert brownian_dirichlet_eigenvalue(2.0, 3) == pytest.approx(math.pi ** 2 / 8.0)


class TestOperator:
    grid = CellGrid(5.0, 64)

    def test_symmetric_positive(self):
        matrix = assemble_operator(ModelParams(1, 1.2), self.grid)
        np.testing.assert_allclose(matrix, matrix.T)
        assert np.linalg.eigvalsh(matrix).min() > 0

    def test_kernel_split(self):
        p = ModelParams(1, 1.0, 1.0)
        combined = assemble_operator(p, self.grid, "jump") + assemble_operator(p, self.grid, "sigma")
        reference = assemble_operator(p.massless(), self.grid)
        np.testing.assert_allclose(combined, reference, rtol=1e-6, atol=1e-9 * np.abs(reference).max())

    def test_rejects(self):
        with pytest.raises(DomainError):
            assemble_operator(ModelParams(2, 1.0), self.grid)
        with pytest.raises(DomainError):
            assemble_operator(ModelParams(1, 1.0), self.grid, "sigma")
        with pytest.raises(DomainError):
            CellGrid(1.0, 1)


class TestDirichlet:
    def test_cauchy_interval(self):
        assert dirichlet_eigenvalue(ModelParams(1, 1.0), 1.0) == pytest.approx(1.1577738836977, rel=2e-3)

    def test_scaling(self):
        p = ModelParams(1, 1.5)
        assert dirichlet_eigenvalue(p, 2.0) == pytest.approx(2.0 ** -1.5 * dirichlet_eigenvalue(p, 1.0), rel=1e-3)

    def test_mass_lowers_eigenvalue(self):
        assert dirichlet_eigenvalue(ModelParams(1, 1.0, 1.0), 1.0) < dirichlet_eigenvalue(ModelParams(1, 1.0), 1.0)

    def test_positive_radius(self):
        with pytest.raises(DomainError):
            dirichlet_eigenvalue(ModelParams(1, 1.0), 0.0)


class TestSpectralSolve:
    well = WellSpec(1.0, 5.0)

    @pytest.fixture(scope="class")
    def data(self):
        return spectral_solve_1d(ModelParams(1, 1.0), self.well)

    def test_bound_state(self, data):
        assert -5.0 < data.lambda0 < 0.0
        assert data.lambda_a is not None and data.lambda_a > 0

    def test_normalised_and_positive(self, data):
        assert data.norm() == pytest.approx(1.0, rel=1e-10)
        assert np.all(data.phi > 0)
        assert data.phi[0] == pytest.approx(data.phi.max())

    def test_header(self, data):
        header = data.header()
        assert header["lambda0"] == data.lambda0
        assert header["lambdaR"] == {"1": data.lambda_a}
        assert header["grid"]["N"] == 512
        assert list(data.rows()[0]) == ["r", "phi0"]

    def test_direct_moment_grows(self, data):
        assert spectral_direct_moment(data, 0.5) < spectral_direct_moment(data, 0.9)

    def test_grid_convergence(self):
        pairs = grid_convergence(ModelParams(1, 1.0, 0.5), self.well, sizes=(256, 512, 1024))
        values = [v for _, v in pairs]
        assert abs(values[2] - values[1]) < abs(values[1] - values[0])

    def test_rejects(self):
        with pytest.raises(DomainError):
            spectral_solve_1d(ModelParams(1, 1.0), self.well, N=513)
        with pytest.raises(DomainError):
            spectral_solve_1d(ModelParams(1, 1.0), self.well, L=2.0)
        with pytest.raises(DomainError):
            spectral_solve_1d(ModelParams(2, 1.0), self.well)
