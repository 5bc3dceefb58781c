"""
Tests for the admissible parameter region, Lipschitz generators and rho-weighted norms.
"""
import numpy as np
import pytest

from app.pde.parameters import (
    RHO_GRID,
    RHO_MAX,
    ParamSet,
    contraction_factor,
    contraction_rho,
    exterior_sample,
    interior_sample,
    linear_in_y,
    make_generator,
    resolve_params,
    rho_norm,
    saturating_in_z,
    validate_params,
    zero_generator,
)
from app.spectral.field import Field, SobolevIndex, TimeField, gaussian_bump
from app.utils.errors import ParameterRejection, RhoSearchError


class TestRegion:
    @pytest.mark.parametrize(
        "candidate",
        [
            {"beta": 0.3, "q": 3.0, "delta": 0.5, "p": 2.5, "d": 1},
            {"beta": 0.25, "q": 6.0, "delta": 0.5, "p": 5.0, "d": 2},
            {"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.0},
        ],
    )
    def test_accepts_interior_points(self, candidate):
        param = validate_params(candidate)
        assert param.alpha == pytest.approx(param.delta - param.d / param.p)
        assert 0.0 < param.gamma < 0.5 * (1.0 - param.delta - param.beta)

    @pytest.mark.parametrize(
        "candidate, code",
        [
            ({"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5}, "beta_range"),
            ({"beta": 0.3, "q": 4.0, "delta": 0.5, "p": 2.5}, "q_range"),
            ({"beta": 0.25, "q": 3.5, "delta": 0.2, "p": 3.0}, "delta_range"),
            ({"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.6}, "p_range"),
            ({"beta": 0.25, "q": 6.0, "delta": 0.5, "p": 3.5, "d": 2}, "p_range"),
            ({"beta": 0.25, "q": 3.5, "delta": 0.7, "p": 1.8}, "p_min"),
            ({"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.0, "gamma": 0.1}, "gamma_range"),
            ({"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.0, "T": 0.0}, "horizon"),
        ],
    )
    def test_rejects_with_code(self, candidate, code):
        with pytest.raises(ParameterRejection) as info:
            validate_params(candidate)
        assert info.value.code == code

    def test_beta_reason_is_the_inequality(self):
        with pytest.raises(ParameterRejection) as info:
            ParamSet(beta=0.6, q=3.0, delta=0.5, p=2.5)
        assert info.value.reason == "β ∉ (0, 1/2)"
        assert info.value.exit_code == 2

    def test_resolve_params(self, param):
        assert resolve_params(None) is None
        assert resolve_params(param) is param
        assert resolve_params({"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.0}) == param
        with pytest.raises(ParameterRejection):
            resolve_params({"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5})

    def test_derived_indices(self, param):
        assert param.drift_index == SobolevIndex(s=-0.25, r=3.5)
        assert param.forcing_index == SobolevIndex(s=-0.25, r=3.0)
        assert param.solution_index == SobolevIndex(s=1.6, r=3.0)
        assert param.terminal_index.s == pytest.approx(1.6 + 2.0 * param.gamma)

    def test_interior_sample_is_accepted(self):
        for d, q in ((1, 3.5), (2, 6.0)):
            for point in interior_sample(0.25, q, d, 20, seed=1):
                validate_params(point)

    def test_exterior_sample_is_rejected(self):
        codes = set()
        for point in exterior_sample(0.25, 3.5, 1, 20, seed=2):
            with pytest.raises(ParameterRejection) as info:
                validate_params(point)
            codes.add(info.value.code)
        assert codes == {"delta_range", "p_range"}


class TestGenerators:
    def test_linear_in_y_is_lipschitz(self):
        assert linear_in_y(2.0).check(d=1) <= 1.0 + 1e-12

    def test_saturating_in_z_is_lipschitz(self):
        assert saturating_in_z(0.5, d=2).check(d=2) <= 1.0 + 1e-12

    def test_zero_generator(self):
        f = zero_generator()
        assert f.is_zero and f.lipschitz == 0.0
        assert f.check(d=1) == 0.0

    def test_layout_of_z(self):
        f = saturating_in_z(1.0, d=2)
        y = np.zeros((1, 3))
        z = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]])
        np.testing.assert_allclose(f(0.0, np.zeros((2, 3)), y, z), np.tanh([[0.5, 0.7, 0.9]]))

    def test_unknown_generator(self):
        with pytest.raises(ValueError):
            make_generator("quadratic")


class TestRhoNorms:
    def test_rho_range(self, line_grid):
        u = TimeField.zeros(line_grid, 1.0, 4)
        with pytest.raises(ValueError):
            rho_norm(u, 0.5, SobolevIndex(s=0.0))

    def test_weighted_norm_of_constant_field(self, line_grid):
        bump = gaussian_bump(line_grid)
        u = TimeField.constant_in_time(bump, 1.0, 4)
        index = SobolevIndex(s=0.0, r=2.0)
        plain = rho_norm(u, 0.0, index)
        assert rho_norm(u, 1.0, index) == pytest.approx(plain)
        assert rho_norm(u.reversed(), 4.0, index) == pytest.approx(plain)

    def test_weight_decays_in_time(self, line_grid):
        zero, one = Field.zeros(line_grid), Field.constant(line_grid, 1.0)
        u = TimeField.from_fields([zero, zero, one], 1.0)
        index = SobolevIndex(s=0.0, r=2.0)
        assert rho_norm(u, 2.0, index) == pytest.approx(np.exp(-2.0) * rho_norm(u, 0.0, index))

    def test_dyadic_rho_search(self):
        param = ParamSet(beta=0.3, q=3.0, delta=0.5, p=2.5)
        rho = contraction_rho(param, 1.0)
        assert rho == 2.0 ** 14
        assert contraction_factor(param, 1.0, rho) <= 0.5
        assert contraction_factor(param, 1.0, rho / 2.0) > 0.5

    def test_rho_search_fails_for_huge_constants(self, param):
        with pytest.raises(RhoSearchError):
            contraction_rho(param, 1e6)

    def test_rho_search_needs_positive_constant(self, param):
        with pytest.raises(ValueError):
            contraction_rho(param, 0.0)

    def test_rho_grid(self):
        assert RHO_GRID[0] == 1.0 and RHO_GRID[-2] == 2.0 ** 29
        assert RHO_GRID[-1] == RHO_MAX == 1e9

    def test_rho_search_reaches_the_cap(self, param):
        c = 0.49 / contraction_factor(param, 1.0, RHO_MAX)
        assert contraction_factor(param, c, 2.0 ** 29) > 0.5
        assert contraction_rho(param, c) == RHO_MAX
