"""Spectral module - periodic grid fields, Fourier multipliers and the truncated product"""
from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField
from app.spectral.operators import bessel_potential, gradient, heat_semigroup, holder_norm, sobolev_norm
from app.spectral.paraproduct import CutoffSpec, contract_gradient, pointwise_product, smooth_truncate

__all__ = [
    "Field",
    "GridSpec",
    "SobolevIndex",
    "TimeField",
    "bessel_potential",
    "gradient",
    "heat_semigroup",
    "holder_norm",
    "sobolev_norm",
    "CutoffSpec",
    "contract_gradient",
    "pointwise_product",
    "smooth_truncate",
]
