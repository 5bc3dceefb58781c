"""
Tests for the Duhamel quadrature, the linear backward problem and the Picard solver.
"""
import numpy as np
import pytest

from app.approx.drivers import RoughDriverSpec, make_driver
from app.pde.mild import (
    NON_CONTRACTION_STREAK,
    duhamel,
    duhamel_all,
    fd_residual,
    fixed_point_residual,
    linear_regularity_report,
    solve_linear_phi,
    solve_semilinear_u,
    terminal_propagation,
    time_holder_exponent,
)
from app.pde.parameters import linear_in_y, rho_norm, zero_generator
from app.pde.reference import solve_reference_fd
from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField, cosine_mode, gaussian_bump
from app.spectral.operators import heat_semigroup
from app.utils.errors import (
    ConvergenceError,
    InadmissibleDriverError,
    NonContractionError,
    ParameterRejection,
    ProductDivergenceError,
)

HORIZON = 1.0


def _bump_forcing(grid: GridSpec, steps: int) -> TimeField:
    bump = gaussian_bump(grid).values[0]
    return TimeField.from_function(grid, HORIZON, steps, lambda t, x: (1.0 + t) * bump)


def _always_diverging(tail, scale):
    raise ProductDivergenceError([1.0, 2.0, 3.0])


class TestDuhamel:
    def test_constant_forcing(self, line_grid):
        c = 1.5
        l = TimeField.constant_in_time(Field.constant(line_grid, c), HORIZON, 32)
        phi = solve_linear_phi(l)
        expected = -c * (HORIZON - phi.times)
        np.testing.assert_allclose(phi.snapshots[:, 0, :], np.repeat(expected[:, None], line_grid.n, axis=1), atol=1e-12)

    def test_cosine_mode_forcing(self, line_grid):
        k = 4
        xi = np.pi * k / line_grid.half_width
        mode = cosine_mode(line_grid, k)
        phi = solve_linear_phi(TimeField.constant_in_time(mode, HORIZON, 32))
        weights = -(1.0 - np.exp(-0.5 * xi ** 2 * (HORIZON - phi.times))) * 2.0 / xi ** 2
        np.testing.assert_allclose(phi.snapshots, weights[:, None, None] * mode.values[None], atol=1e-10)

    def test_single_node_matches_sweep(self, line_grid):
        l = _bump_forcing(line_grid, 16)
        everything = duhamel_all(l)
        for k in (0, 5, 15):
            np.testing.assert_allclose(duhamel(l, k).values, everything.at(k).values, atol=1e-12)
        assert duhamel(l, 16).is_zero()

    def test_rejected_parameters(self, line_grid):
        l = _bump_forcing(line_grid, 8)
        with pytest.raises(ParameterRejection):
            solve_linear_phi(l, param={"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5})
        solve_linear_phi(l, param={"beta": 0.3, "q": 3.0, "delta": 0.5, "p": 2.5})

    def test_node_out_of_range(self, line_grid):
        with pytest.raises(ValueError):
            duhamel(_bump_forcing(line_grid, 8), 9)

    def test_terminal_propagation(self, line_grid):
        terminal = gaussian_bump(line_grid)
        propagated = terminal_propagation(terminal, HORIZON, 8)
        np.testing.assert_array_equal(propagated.at(8).values, terminal.values)
        np.testing.assert_allclose(propagated.at(0).values, heat_semigroup(terminal, HORIZON).values, atol=1e-14)

    def test_terminal_grid_mismatch(self, line_grid):
        l = _bump_forcing(line_grid, 8)
        with pytest.raises(ValueError):
            solve_linear_phi(l, gaussian_bump(line_grid.refined(64)))


class TestLinearRegularity:
    def test_residual_needs_four_steps(self, line_grid):
        l = _bump_forcing(line_grid, 3)
        with pytest.raises(ValueError):
            fd_residual(solve_linear_phi(l), l)

    def test_residual_is_small_for_smooth_forcing(self, line_grid):
        l = _bump_forcing(line_grid, 256)
        assert fd_residual(solve_linear_phi(l), l) <= 1e-6

    def test_time_holder_exponent(self, line_grid):
        index = SobolevIndex(s=0.0, r=2.0)
        bump = gaussian_bump(line_grid)
        still = TimeField.constant_in_time(bump, HORIZON, 16)
        assert time_holder_exponent(still, index) == 1.0
        ramp = TimeField.from_function(line_grid, HORIZON, 16, lambda t, x: t * bump.values[0])
        assert time_holder_exponent(ramp, index) == pytest.approx(1.0, abs=1e-8)

    def test_regularity_report(self, line_grid, param):
        l = _bump_forcing(line_grid, 32)
        terminal = gaussian_bump(line_grid, width=2.0)
        phi = solve_linear_phi(l, terminal, param)
        report = linear_regularity_report(phi, l, terminal, param, with_residual=True)
        assert report.bound_constant >= 0.0
        assert report.continuity_modulus > 0.0
        assert report.sup_norm >= report.terminal_norm
        assert report.fd_residual is not None


class TestSemilinear:
    def test_zero_data(self, line_grid, param):
        b = TimeField.zeros(line_grid, HORIZON, 16)
        u, report = solve_semilinear_u(b, zero_generator(), Field.zeros(line_grid), param)
        assert report.iterations == 0
        assert u.is_zero()

    def test_free_propagation_takes_one_iteration(self, line_grid, param):
        b = TimeField.zeros(line_grid, HORIZON, 16)
        terminal = gaussian_bump(line_grid)
        u, report = solve_semilinear_u(b, zero_generator(), terminal, param)
        assert report.iterations == 1
        assert report.residual == 0.0
        np.testing.assert_allclose(u.snapshots, terminal_propagation(terminal, HORIZON, 16).snapshots, atol=1e-14)

    def test_smooth_drift_matches_finite_differences(self, fine_line_grid, param):
        spec = RoughDriverSpec(kind="smooth_bump", amplitude=0.3)
        driver = make_driver(spec, fine_line_grid, HORIZON, 128, param.beta, param.q)
        terminal = gaussian_bump(fine_line_grid)
        u, report = solve_semilinear_u(driver, zero_generator(), terminal, param)
        assert report.contraction_factor < 1.0
        assert report.residual <= 2e-8
        reference = solve_reference_fd(driver.field, terminal)
        relative = np.max(np.abs(u.snapshots - reference.snapshots)) / reference.sup_norm()
        assert relative <= 1e-3

    def test_fixed_point_does_not_depend_on_the_start(self, line_grid, param):
        spec = RoughDriverSpec(kind="smooth_bump", amplitude=0.3)
        driver = make_driver(spec, line_grid, HORIZON, 32, param.beta, param.q)
        terminal = gaussian_bump(line_grid)
        f = linear_in_y(0.5)
        u, _ = solve_semilinear_u(driver, f, terminal, param, tol=1e-9)
        other, _ = solve_semilinear_u(driver, f, terminal, param, tol=1e-9, initial="zero")
        assert rho_norm(u - other, 0.0, param.solution_index) <= 1e-6
        assert fixed_point_residual(u, driver.field, f, terminal, param.solution_index) <= 1e-8

    def test_generator_enters_the_solution(self, line_grid, param):
        b = TimeField.zeros(line_grid, HORIZON, 32)
        terminal = gaussian_bump(line_grid)
        u, _ = solve_semilinear_u(b, linear_in_y(0.5), terminal, param, tol=1e-10)
        # d_t u + 1/2 u'' + 0.5 u = 0 gives u(0) = e^{0.5 T} P(T) Phi
        expected = np.exp(0.5 * HORIZON) * heat_semigroup(terminal, HORIZON).values
        np.testing.assert_allclose(u.at(0).values, expected, rtol=1e-4, atol=1e-6)

    def test_inadmissible_drift(self, param):
        grid = GridSpec(d=1, n=64, half_width=10.0)
        driver = make_driver(RoughDriverSpec(kind="single_mode", mode=20), grid, HORIZON, 8, param.beta, param.q)
        assert not driver.certificate.admissible
        with pytest.raises(InadmissibleDriverError):
            solve_semilinear_u(driver, zero_generator(), gaussian_bump(grid), param)

    def test_iteration_budget(self, line_grid, param):
        spec = RoughDriverSpec(kind="smooth_bump", amplitude=0.3)
        driver = make_driver(spec, line_grid, HORIZON, 16, param.beta, param.q)
        with pytest.raises(ConvergenceError):
            solve_semilinear_u(driver, zero_generator(), gaussian_bump(line_grid), param, max_iter=1)

    def test_growing_product_tail_stops_the_solve(self, line_grid, param, monkeypatch):
        monkeypatch.setattr("app.spectral.paraproduct._check_tail", _always_diverging)
        spec = RoughDriverSpec(kind="smooth_bump", amplitude=0.3)
        driver = make_driver(spec, line_grid, HORIZON, 16, param.beta, param.q)
        with pytest.raises(ProductDivergenceError):
            solve_semilinear_u(driver, zero_generator(), gaussian_bump(line_grid), param)

    def test_non_contraction_needs_three_growing_steps(self, line_grid, param, monkeypatch):
        monkeypatch.setattr("app.pde.mild.picard_map", lambda u, *args, **kwargs: 2.0 * u)
        b = TimeField.zeros(line_grid, HORIZON, 8)
        with pytest.raises(NonContractionError) as info:
            solve_semilinear_u(b, zero_generator(), gaussian_bump(line_grid), param)
        assert NON_CONTRACTION_STREAK == 3
        assert info.value.iteration == NON_CONTRACTION_STREAK + 1
        assert info.value.factor == pytest.approx(2.0)
