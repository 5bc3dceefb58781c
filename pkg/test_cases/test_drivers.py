"""
Tests for drift synthesis and the H^{-beta}_q certificate.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.approx.drivers import (
    RoughDriverSpec,
    _fbm_profile_1d,
    certify_driver,
    make_driver,
    spatial_profile,
    synthesize_driver,
)
from app.spectral.field import GridSpec, TimeField


class TestDriverSpec:
    def test_hurst_must_exceed_one_half(self):
        with pytest.raises(ValidationError):
            RoughDriverSpec(kind="fbm_derivative", hurst=0.4)

    def test_beta_must_exceed_one_minus_hurst(self):
        with pytest.raises(ValidationError):
            RoughDriverSpec(kind="fbm_derivative", hurst=0.8, beta=0.1)

    def test_hurst_is_ignored_for_smooth_kinds(self):
        assert RoughDriverSpec(kind="smooth_bump", hurst=0.2).kind == "smooth_bump"


class TestSynthesis:
    def test_zero_driver(self, line_grid):
        b = synthesize_driver(RoughDriverSpec(), line_grid, 1.0, 8)
        assert b.is_zero()
        assert b.channels == 1

    def test_profile_has_d_channels(self):
        grid = GridSpec(d=2, n=32, half_width=5.0)
        for kind in ("zero", "smooth_bump", "fbm_derivative"):
            assert spatial_profile(RoughDriverSpec(kind=kind), grid).channels == 2

    def test_sinusoidal_modulation(self, line_grid):
        spec = RoughDriverSpec(kind="smooth_bump", modulation="sinusoidal")
        b = synthesize_driver(spec, line_grid, 2.0, 4)
        np.testing.assert_allclose(b.at(1).values, 1.5 * b.at(0).values, atol=1e-12)
        np.testing.assert_allclose(b.at(2).values, b.at(0).values, atol=1e-12)

    def test_fbm_spectra_are_nested(self):
        coarse = _fbm_profile_1d(GridSpec(d=1, n=64, half_width=10.0), 0.8, np.random.default_rng(5))
        fine = _fbm_profile_1d(GridSpec(d=1, n=128, half_width=10.0), 0.8, np.random.default_rng(5))
        np.testing.assert_allclose(np.fft.fft(coarse)[1:32] / 64, np.fft.fft(fine)[1:32] / 128, atol=1e-12)

    def test_seed_reproducibility(self, line_grid):
        spec = RoughDriverSpec(kind="fbm_derivative", hurst=0.8, seed=3)
        first = synthesize_driver(spec, line_grid, 1.0, 4)
        second = synthesize_driver(spec, line_grid, 1.0, 4)
        np.testing.assert_array_equal(first.snapshots, second.snapshots)


class TestCertificate:
    def test_smooth_bump_is_admissible(self, line_grid, param):
        driver = make_driver(RoughDriverSpec(kind="smooth_bump"), line_grid, 1.0, 8, param.beta, param.q)
        certificate = driver.certificate
        assert certificate.admissible
        assert certificate.refinement_points == [128, 64, 32]
        assert certificate.continuity_modulus == pytest.approx(0.0)
        assert certificate.refinement_change < 0.10

    def test_fbm_driver_is_admissible(self, param):
        grid = GridSpec(d=1, n=512, half_width=10.0)
        spec = RoughDriverSpec(kind="fbm_derivative", hurst=0.8, amplitude=0.5, seed=0, beta=param.beta)
        driver = make_driver(spec, grid, 1.0, 4, param.beta, param.q)
        assert driver.certificate.admissible, driver.certificate.reason
        assert np.isfinite(driver.certificate.sup_norm)

    def test_mode_above_half_band_is_inadmissible(self, param):
        grid = GridSpec(d=1, n=64, half_width=10.0)
        driver = make_driver(RoughDriverSpec(kind="single_mode", mode=20), grid, 1.0, 4, param.beta, param.q)
        assert not driver.certificate.admissible
        assert driver.certificate.refinement_change >= 0.10

    def test_zero_driver_is_admissible(self, line_grid, param):
        certified = certify_driver(TimeField.zeros(line_grid, 1.0, 4), param.beta, param.q)
        assert certified.certificate.admissible
        assert certified.certificate.sup_norm == 0.0

    def test_modulation_enters_the_modulus(self, line_grid, param):
        spec = RoughDriverSpec(kind="smooth_bump", modulation="sinusoidal")
        driver = make_driver(spec, line_grid, 1.0, 8, param.beta, param.q)
        assert driver.certificate.continuity_modulus > 0.0
