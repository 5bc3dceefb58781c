"""
Tests for the Haar projector, the mollifier route and the density checks.
"""
import numpy as np
import pytest

from app.approx.haar import (
    HAAR_GRID,
    density_approximant,
    gram_matrix,
    haar_coefficients,
    haar_function,
    haar_project,
    max_aligned_level,
    mollifier_multiplier,
    mollify_project,
    operator_norm_study,
    uniform_convergence_report,
    window,
)
from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField, gaussian_bump
from app.spectral.operators import bessel_potential, lr_norm, sobolev_norm
from app.spectral.studies import rough_sample


class TestBasis:
    def test_aligned_level(self):
        assert max_aligned_level(HAAR_GRID) == 8

    def test_misaligned_grid(self):
        grid = GridSpec(d=1, n=64, half_width=7.0)
        with pytest.raises(ValueError, match="not dyadically aligned"):
            haar_function(grid, 0, 0)

    def test_two_dimensional_grid(self):
        with pytest.raises(ValueError):
            haar_function(GridSpec(d=2, n=16, half_width=8.0), 0, 0)

    def test_window(self):
        pairs = list(window(HAAR_GRID, 2))
        assert (-1, -2) in pairs and (2, 2) in pairs
        assert all(-1 <= j <= 2 and abs(m) <= 2 for j, m in pairs)
        with pytest.raises(ValueError):
            list(window(HAAR_GRID, -2))

    def test_window_drops_supports_outside_the_box(self):
        grid = GridSpec(d=1, n=256, half_width=2.0)
        pairs = list(window(grid, 3))
        assert (-1, 2) not in pairs and (-1, -3) not in pairs
        assert (-1, 1) in pairs and (-1, -2) in pairs

    def test_gram_matrix_is_identity(self):
        gram = gram_matrix(HAAR_GRID, 4)
        np.testing.assert_allclose(gram, np.eye(gram.shape[0]), atol=1e-10)


class TestProjector:
    def test_projection_is_idempotent(self):
        h = gaussian_bump(HAAR_GRID, width=0.3)
        once = haar_project(h, 4)
        np.testing.assert_allclose(haar_project(once, 4).values, once.values, atol=1e-12)

    def test_window_functions_are_fixed(self):
        for j, m in ((-1, 0), (0, -3), (3, 2)):
            h = haar_function(HAAR_GRID, j, m)
            np.testing.assert_allclose(haar_project(h, 4).values, h.values, atol=1e-12)

    def test_coefficient_of_a_basis_function(self):
        expansion = haar_coefficients(haar_function(HAAR_GRID, 2, 1), 3)
        rows = [row for row in expansion.rows() if abs(row["value"]) > 1e-12]
        assert rows == [{"channel": 0, "j": 2, "m": 1, "value": pytest.approx(1.0)}]

    def test_l2_error_does_not_increase(self):
        h = gaussian_bump(HAAR_GRID, width=0.015)
        errors = [lr_norm(h - haar_project(h, level), 2.0) for level in range(0, 9)]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-2


class TestMollifier:
    def test_level_must_be_positive(self):
        with pytest.raises(ValueError):
            mollifier_multiplier(HAAR_GRID, 0.0)

    def test_contraction(self, line_grid):
        h = rough_sample(line_grid, np.random.default_rng(4), -0.2)
        index = SobolevIndex(s=-0.3, r=2.0)
        assert sobolev_norm(mollify_project(h, 3.0), index) <= sobolev_norm(h, index) + 1e-12

    def test_commutes_with_bessel_potential(self, line_grid):
        h = rough_sample(line_grid, np.random.default_rng(5), 0.0)
        left = mollify_project(bessel_potential(h, 0.7), 2.0)
        right = bessel_potential(mollify_project(h, 2.0), 0.7)
        np.testing.assert_allclose(left.values, right.values, atol=1e-10)

    def test_works_in_two_dimensions(self):
        grid = GridSpec(d=2, n=32, half_width=5.0)
        h = gaussian_bump(grid)
        assert mollify_project(h, 4.0).sup_norm() <= h.sup_norm()


class TestDensity:
    def test_haar_route_error(self):
        l = TimeField.constant_in_time(gaussian_bump(HAAR_GRID, width=np.sqrt(0.5)), 1.0, 1)
        approximant, report = density_approximant(l, 8, "haar")
        assert approximant.steps == 1
        assert report.sup_error <= 1e-2
        assert len(report.errors) == 2

    def test_haar_route_needs_a_line(self):
        grid = GridSpec(d=2, n=16, half_width=8.0)
        with pytest.raises(ValueError):
            density_approximant(TimeField.zeros(grid, 1.0, 2), 2, "haar")

    def test_mollifier_route_improves_with_level(self, line_grid):
        l = TimeField.constant_in_time(gaussian_bump(line_grid, width=0.5), 1.0, 2)
        _, coarse = density_approximant(l, 6, "mollifier")
        _, fine = density_approximant(l, 10, "mollifier")
        assert fine.sup_error < coarse.sup_error

    def test_uniform_convergence(self, line_grid):
        l = TimeField.from_function(line_grid, 1.0, 4, lambda t, x: (1.0 + t) * np.exp(-x[0] ** 2))
        report = uniform_convergence_report(l, [2, 4, 8], "mollifier")
        assert report.monotone
        assert report.sup_errors[-1] < report.sup_errors[0]

    def test_operator_norm_is_bounded(self):
        report = operator_norm_study(HAAR_GRID, [2, 4], samples=3, seed=0)
        assert report.levels == [2, 4]
        assert 0.0 < report.constant < 3.0
