"""
Tests for the occupation-time operators, covariation and the orthogonality check.
"""
import numpy as np
import pytest

from app.approx.haar import mollify_project
from app.spectral.field import Field, TimeField, smooth_taper
from app.spectral.studies import rough_sample
from app.stochastic.occupation import (
    PathFunctional,
    a_ww_rough,
    a_ww_smooth,
    a_wy,
    chain_rule_residual,
    classical_consistency,
    consistency_rate,
    covariation,
    covariation_stability,
    extension_continuity,
    ito_functional,
    orthogonality_check,
    reference_martingales,
)
from app.stochastic.paths import sample_ensemble
from app.utils.errors import ParameterRejection, ProductDivergenceError

REJECTED = {"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5}


def _bump(t, x):
    return (1.0 + t) * np.exp(-x[0] ** 2)


def _tapered_identity(grid, plateau=None, width=None) -> Field:
    return Field(grid, grid.coordinates()[0] * smooth_taper(grid, plateau, width).values[0])


def _always_diverging(tail, scale):
    raise ProductDivergenceError([1.0, 2.0, 3.0])


class TestPathFunctional:
    def test_must_vanish_at_zero(self):
        with pytest.raises(ValueError):
            PathFunctional(np.linspace(0.0, 1.0, 3), np.ones((2, 3)), "composed")

    def test_time_grid_mismatch(self):
        with pytest.raises(ValueError):
            PathFunctional(np.linspace(0.0, 1.0, 4), np.zeros((2, 3)), "composed")

    def test_arithmetic(self):
        times = np.linspace(0.0, 1.0, 3)
        a = PathFunctional(times, np.array([[0.0, 1.0, 2.0]]), "smooth-integral")
        b = PathFunctional(times, np.array([[0.0, 0.5, 3.0]]), "chain-rule")
        assert (a - b).provenance == "composed"
        np.testing.assert_allclose(a.sup_distance(b), [1.0])
        np.testing.assert_allclose((2.0 * a).terminal, [[4.0]])


class TestCovariation:
    def test_lag_must_be_positive(self, ensemble):
        with pytest.raises(ValueError):
            covariation(ensemble.positions, ensemble.positions, 0)

    def test_quadratic_variation_of_w(self, ensemble):
        qv = covariation(ensemble.positions, ensemble.positions)
        assert qv.shape == (200, 65, 1, 1)
        assert qv[:, -1, 0, 0].mean() == pytest.approx(1.0, abs=0.06)

    def test_lag_stability(self, ensemble):
        report = covariation_stability(ensemble.positions, ensemble.positions)
        assert report.lags == [1, 2, 4]
        assert report.spread < 0.15


class TestOccupationOperators:
    def test_constant_forcing(self, line_grid, ensemble):
        c = 0.7
        l = TimeField.constant_in_time(Field.constant(line_grid, c), 1.0, ensemble.steps)
        rough = a_ww_rough(l, ensemble)
        assert rough.provenance == "chain-rule"
        np.testing.assert_allclose(rough.values[:, :, 0], np.broadcast_to(c * ensemble.times, (200, 65)), atol=1e-10)
        smooth = a_ww_smooth(lambda t, x: c, ensemble)
        np.testing.assert_allclose(smooth.values, rough.values, atol=1e-10)

    def test_time_grid_mismatch(self, line_grid, ensemble):
        with pytest.raises(ValueError):
            a_ww_rough(TimeField.zeros(line_grid, 1.0, 32), ensemble)

    def test_classical_consistency(self, line_grid, ensemble):
        report = classical_consistency(_bump, line_grid, ensemble)
        assert report.paths == 200 and report.steps == 64
        assert report.mean_sup_difference < 0.25

    def test_first_order_rate(self, line_grid):
        ens = sample_ensemble(200, 128, 1.0, seed=21)
        report = consistency_rate(_bump, line_grid, ens)
        assert report.steps == [64, 128]
        assert 1.2 <= report.reduction <= 2.8

    def test_chain_rule_residual(self, line_grid):
        ens = sample_ensemble(200, 128, 1.0, seed=22)
        report = chain_rule_residual(_bump, line_grid, ens)
        assert report.generator_residual < 1e-3
        assert report.generator_path_residual < 1e-3
        assert report.mean_sup_difference < 0.25

    def test_a_wy_of_unit_drift_along_identity(self, line_grid, ensemble):
        b = TimeField.constant_in_time(Field.constant(line_grid, 1.0), 1.0, ensemble.steps)
        gamma = TimeField.constant_in_time(_tapered_identity(line_grid, 8.0, 1.5), 1.0, ensemble.steps)
        functional = a_wy(b, gamma, ensemble)
        np.testing.assert_allclose(functional.terminal[:, 0], 1.0, atol=1e-2)

    def test_rejected_parameters(self, line_grid, ensemble):
        l = TimeField.constant_in_time(Field.constant(line_grid, 1.0), 1.0, ensemble.steps)
        with pytest.raises(ParameterRejection):
            a_ww_rough(l, ensemble, param=REJECTED)
        b = TimeField.constant_in_time(Field.constant(line_grid, 1.0), 1.0, ensemble.steps)
        gamma = TimeField.constant_in_time(_tapered_identity(line_grid, 8.0, 1.5), 1.0, ensemble.steps)
        with pytest.raises(ParameterRejection):
            a_wy(b, gamma, ensemble, param=REJECTED)

    def test_a_wy_checks_the_product_tail(self, line_grid, ensemble, param, monkeypatch):
        monkeypatch.setattr("app.spectral.paraproduct._check_tail", _always_diverging)
        b = TimeField.constant_in_time(Field.constant(line_grid, 1.0), 1.0, ensemble.steps)
        gamma = TimeField.constant_in_time(_tapered_identity(line_grid, 8.0, 1.5), 1.0, ensemble.steps)
        with pytest.raises(ProductDivergenceError):
            a_wy(b, gamma, ensemble, param=param)
        a_wy(b, gamma, ensemble)

    def test_extension_continuity(self, line_grid, ensemble):
        rough = rough_sample(line_grid, np.random.default_rng(9), -0.2)
        l = TimeField.constant_in_time(rough, 1.0, ensemble.steps)
        approximants = [l.map(lambda f, n=n: mollify_project(f, n)) for n in (2, 4, 8)]
        report = extension_continuity(approximants, l, ensemble)
        assert report.forcing_distances[0] > report.forcing_distances[1] > report.forcing_distances[2]
        assert report.mean_sup_differences[-1] < report.mean_sup_differences[0]


class TestOrthogonality:
    def test_reference_martingales(self, ensemble):
        np.testing.assert_array_equal(reference_martingales(ensemble, "W"), ensemble.positions)
        tanh = reference_martingales(ensemble, "tanh")
        assert tanh.shape == ensemble.positions.shape
        np.testing.assert_array_equal(tanh[:, 0], 0.0)

    def test_symmetric_bump_is_orthogonal(self):
        ens = sample_ensemble(400, 64, 1.0, seed=31)
        functional = a_ww_smooth(lambda t, x: np.exp(-x[0] ** 2), ens)
        report = orthogonality_check(functional, ens)
        assert report.extrapolated and report.lag == 1
        assert report.passed, report.z_max

    def test_martingale_part_is_not_orthogonal(self, line_grid, ensemble):
        l = TimeField.constant_in_time(_tapered_identity(line_grid), 1.0, ensemble.steps)
        functional = ito_functional(l, ensemble)
        assert functional.provenance == "ito-integral"
        report = orthogonality_check(functional, ensemble)
        assert not report.passed
        assert report.means[0][0] == pytest.approx(-0.5, abs=0.05)
