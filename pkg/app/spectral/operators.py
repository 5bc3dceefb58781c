"""Fourier-multiplier calculus on the periodic grid: Bessel potentials, heat semigroup, norms"""
from __future__ import annotations

from typing import Literal

import numpy as np

from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField, forward, inverse

HolderFlavor = Literal["0+alpha", "1+alpha"]


def bessel_multiplier(grid: GridSpec, order: float) -> np.ndarray:
    return (1.0 + 0.5 * grid.xi_squared()) ** (0.5 * order)


def heat_multiplier(grid: GridSpec, t: float) -> np.ndarray:
    return np.exp(-0.5 * t * grid.xi_squared())


def apply_multiplier(field: Field, multiplier: np.ndarray) -> Field:
    return Field(field.grid, inverse(forward(field.values, field.grid) * multiplier, field.grid))


def bessel_potential(field: Field, order: float) -> Field:
    """(I - Delta/2)^{order/2} applied per component"""
    if order == 0:
        return field
    return apply_multiplier(field, bessel_multiplier(field.grid, order))


def heat_semigroup(field: Field, t: float) -> Field:
    """P(t): convolution with the Gaussian kernel of variance t"""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return field
    return apply_multiplier(field, heat_multiplier(field.grid, t))


def derivative_symbols(grid: GridSpec) -> np.ndarray:
    """i xi_k per axis with the Nyquist mode removed (odd derivative of a real field)"""
    xi = grid.wave_vectors().copy()
    nyquist = -np.pi * (grid.n // 2) / grid.half_width
    xi[np.isclose(xi, nyquist)] = 0.0
    return 1j * xi


def gradient(field: Field) -> Field:
    """(grad u)_{i,j} = d u_j / d x_i stored at channel i * m + j"""
    grid = field.grid
    coeffs = forward(field.values, grid)
    symbols = derivative_symbols(grid)
    parts = [inverse(coeffs * symbols[i], grid) for i in range(grid.d)]
    return Field(grid, np.concatenate(parts, axis=0))


def laplacian(field: Field) -> Field:
    return apply_multiplier(field, -field.grid.xi_squared())


def pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Euclidean norm across the leading channel axis"""
    return np.sqrt(np.sum(values ** 2, axis=0))


def lr_norm(field: Field, r: float) -> float:
    """Discrete L^r norm by the (periodic) trapezoidal rule"""
    if r <= 1:
        raise ValueError(f"integrability exponent must exceed 1, got {r}")
    magnitude = pointwise_magnitude(field.values)
    return float((np.sum(magnitude ** r) * field.grid.cell_volume) ** (1.0 / r))


def sobolev_norm(field: Field, index: SobolevIndex) -> float:
    """||(I - Delta/2)^{s/2} f||_{L^r}"""
    return lr_norm(bessel_potential(field, index.s), index.r)


def plancherel_norm(field: Field, s: float) -> float:
    """H^s_2 norm computed in Fourier space"""
    grid = field.grid
    coeffs = forward(field.values, grid)
    weight = bessel_multiplier(grid, 2.0 * s)
    total = np.sum(weight * np.abs(coeffs) ** 2) / grid.n ** grid.d
    return float(np.sqrt(total * grid.cell_volume))


def time_sobolev_norms(u: TimeField, index: SobolevIndex) -> np.ndarray:
    """Spatial H^s_r norm at every time node"""
    return np.array([sobolev_norm(f, index) for f in u.fields()])


# --- Holder norms -----------------------------------------------------------

def _dyadic_quotient(values: np.ndarray, grid: GridSpec, alpha: float) -> float:
    """max |h(x) - h(y)| / |x - y|^alpha over axis-aligned pairs at dyadic separations"""
    best = 0.0
    for axis in range(grid.d):
        spatial_axis = axis + 1
        k = 1
        while k <= grid.n // 2:
            head = np.take(values, np.arange(k, grid.n), axis=spatial_axis)
            tail = np.take(values, np.arange(0, grid.n - k), axis=spatial_axis)
            diff = pointwise_magnitude(head - tail)
            best = max(best, float(np.max(diff)) / (k * grid.dx) ** alpha)
            k *= 2
    return best


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Holder exponent must lie in (0, 1), got {alpha}")


def holder_norm(field: Field, flavor: HolderFlavor, alpha: float) -> float:
    """Discrete C^{0+alpha} or C^{1+alpha} norm with dyadic pair subsampling"""
    _check_alpha(alpha)
    if flavor == "0+alpha":
        return field.sup_norm() + _dyadic_quotient(field.values, field.grid, alpha)
    grad = gradient(field)
    return field.sup_norm() + grad.sup_norm() + _dyadic_quotient(grad.values, field.grid, alpha)


def holder_quotient_all_pairs(field: Field, alpha: float) -> float:
    """Every pair of nodes, no wrap-around; d = 1 only"""
    _check_alpha(alpha)
    if field.grid.d != 1:
        raise ValueError("all-pairs Holder quotient is implemented for d = 1")
    x = field.grid.axis()
    distance = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(distance, np.inf)
    diff_sq = np.zeros_like(distance)
    for channel in field.values:
        diff_sq += (channel[:, None] - channel[None, :]) ** 2
    return float(np.max(np.sqrt(diff_sq) / distance ** alpha))


def holder_norm_all_pairs(field: Field, flavor: HolderFlavor, alpha: float) -> float:
    if flavor == "0+alpha":
        return field.sup_norm() + holder_quotient_all_pairs(field, alpha)
    grad = gradient(field)
    return field.sup_norm() + grad.sup_norm() + holder_quotient_all_pairs(grad, alpha)


# --- oracles ----------------------------------------------------------------

def heat_kernel_periodized(grid: GridSpec, t: float, images: int = 3) -> Field:
    """Samples of sum_m p_t(x + 2 L m), centred at the origin"""
    if t <= 0:
        raise ValueError("kernel oracle needs t > 0")
    coords = grid.coordinates()
    period = 2.0 * grid.half_width
    total = np.zeros(grid.shape)
    shifts = np.arange(-images, images + 1)
    for offset in np.stack(np.meshgrid(*([shifts] * grid.d), indexing="ij")).reshape(grid.d, -1).T:
        r2 = sum((coords[i] + period * offset[i]) ** 2 for i in range(grid.d))
        total += np.exp(-r2 / (2.0 * t))
    return Field(grid, total / (2.0 * np.pi * t) ** (grid.d / 2.0))


def delta_spike(grid: GridSpec) -> Field:
    """Discrete Dirac mass at the origin (unit integral)"""
    values = np.zeros(grid.shape)
    values[(grid.n // 2,) * grid.d] = 1.0 / grid.cell_volume
    return Field(grid, values)


def gaussian_sobolev_norm_dense(
    width: float,
    index: SobolevIndex,
    half_width: float,
    nodes: int = 2048,
    modes: int = 1201,
) -> float:
    """||(I - Delta/2)^{s/2} g||_{L^r(-L, L)} for g = exp(-x^2 / 2 w^2) on the line, d = 1.

    The transform w sqrt(2 pi) exp(-w^2 xi^2 / 2) is inverted by a trapezoidal cosine
    integral over xi in [0, 12 / w]; the L^r integral is a dense trapezoid in x.
    """
    xi = np.linspace(0.0, 12.0 / width, modes)
    weights = np.full(modes, xi[1] - xi[0])
    weights[[0, -1]] *= 0.5
    transform = width * np.sqrt(2.0 * np.pi) * np.exp(-0.5 * (width * xi) ** 2)
    symbol = (1.0 + 0.5 * xi ** 2) ** (0.5 * index.s) * transform * weights / np.pi
    x = np.linspace(-half_width, half_width, nodes, endpoint=False)
    values = np.cos(np.outer(x, xi)) @ symbol
    spacing = 2.0 * half_width / nodes
    return float((np.sum(np.abs(values) ** index.r) * spacing) ** (1.0 / index.r))
