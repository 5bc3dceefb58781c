"""
Haar wavelet projector P_N, the Gaussian mollifier projector and the density checks (d = 1).

    h_{-1,m}(x) = sqrt(2) h_F(x - m)          h_F = 1 on [0, 1)
    h_{j,m}(x)  = h_M(2^j x - m),  j >= 0      h_M = 1 on [0, 1/2), -1 on [1/2, 1)
    mu_{j,m}    = 2^j int h h_{j,m} dx
    P_N h       = sum_{-1 <= j <= N, |m| <= N} mu_{j,m} h_{j,m}

The window keeps only basis functions supported inside the box. Every support
endpoint must be a grid node, which caps the usable level at log2(1/dx) - 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField
from app.spectral.operators import apply_multiplier, sobolev_norm
from app.spectral.studies import rough_sample
from app.utils.logger import logger

HAAR_GRID = GridSpec(d=1, n=8192, half_width=8.0)
SQRT2 = np.sqrt(2.0)

Route = Literal["haar", "mollifier"]


def _require_line(grid: GridSpec) -> None:
    if grid.d != 1:
        raise ValueError("the Haar route is implemented for d = 1; use the mollifier route")


def _node(grid: GridSpec, x: float, level: int) -> int:
    position = (x + grid.half_width) / grid.dx
    index = int(round(position))
    if abs(position - index) > 1e-9:
        raise ValueError(f"grid with dx={grid.dx:.6g} is not dyadically aligned for level {level}")
    return index


def max_aligned_level(grid: GridSpec) -> int:
    """Largest level whose half-supports 2^{-(j+1)} are whole multiples of dx"""
    _require_line(grid)
    level = -1
    while level < 60:
        step = 2.0 ** (-(level + 2))
        ratio = step / grid.dx
        if ratio < 1.0 - 1e-12 or abs(ratio - round(ratio)) > 1e-9:
            break
        level += 1
    _node(grid, 0.0, level)
    return level


def _support(grid: GridSpec, j: int, m: int) -> Tuple[int, int, int]:
    """Node indices (start, middle, end) of the support of h_{j,m}"""
    if j == -1:
        start, end = float(m), float(m + 1)
        mid = end
    else:
        width = 2.0 ** (-j)
        start, end = m * width, (m + 1) * width
        mid = start + 0.5 * width
    return _node(grid, start, j), _node(grid, mid, j), _node(grid, end, j)


def _inside(grid: GridSpec, j: int, m: int) -> bool:
    width = 1.0 if j == -1 else 2.0 ** (-j)
    return m * width >= -grid.half_width and (m + 1) * width <= grid.half_width


def window(grid: GridSpec, level: int) -> Iterator[Tuple[int, int]]:
    """(j, m) for -1 <= j <= level, |m| <= level, support inside the box"""
    if level < -1:
        raise ValueError(f"level must be at least -1, got {level}")
    for j in range(-1, level + 1):
        for m in range(-level, level + 1):
            if _inside(grid, j, m):
                yield j, m


def haar_function(grid: GridSpec, j: int, m: int) -> Field:
    _require_line(grid)
    if j < -1:
        raise ValueError(f"Haar level must be at least -1, got {j}")
    values = np.zeros(grid.n)
    start, mid, end = _support(grid, j, m)
    lo, hi = max(start, 0), min(end, grid.n)
    if j == -1:
        values[lo:hi] = SQRT2
    else:
        values[lo : min(mid, hi)] = 1.0
        values[max(mid, lo) : hi] = -1.0
    return Field(grid, values)


@dataclass(frozen=True)
class HaarExpansion:
    """Coefficients mu_{j,m} (per channel) over the window at cap `level`"""

    grid: GridSpec
    level: int
    levels: np.ndarray
    shifts: np.ndarray
    coefficients: np.ndarray

    def rows(self) -> List[dict]:
        out = []
        for c, channel in enumerate(self.coefficients):
            for j, m, value in zip(self.levels, self.shifts, channel):
                out.append({"channel": c, "j": int(j), "m": int(m), "value": float(value)})
        return out

    def reconstruct(self) -> Field:
        grid = self.grid
        jumps = np.zeros((self.coefficients.shape[0], grid.n + 1))
        for k, (j, m) in enumerate(zip(self.levels, self.shifts)):
            start, mid, end = _support(grid, int(j), int(m))
            value = self.coefficients[:, k]
            if j == -1:
                jumps[:, start] += SQRT2 * value
                jumps[:, end] -= SQRT2 * value
            else:
                jumps[:, start] += value
                jumps[:, mid] -= 2.0 * value
                jumps[:, end] += value
        return Field(grid, np.cumsum(jumps, axis=1)[:, : grid.n])


def haar_coefficients(h: Field, level: int) -> HaarExpansion:
    """mu_{j,m} = 2^j times the grid inner product of h with h_{j,m}, by prefix sums"""
    grid = h.grid
    _require_line(grid)
    prefix = np.concatenate([np.zeros((h.channels, 1)), np.cumsum(h.values, axis=1) * grid.dx], axis=1)
    pairs = list(window(grid, level))
    coeffs = np.zeros((h.channels, len(pairs)))
    for k, (j, m) in enumerate(pairs):
        start, mid, end = _support(grid, j, m)
        if j == -1:
            coeffs[:, k] = (prefix[:, end] - prefix[:, start]) / SQRT2
        else:
            coeffs[:, k] = 2.0 ** j * ((prefix[:, mid] - prefix[:, start]) - (prefix[:, end] - prefix[:, mid]))
    return HaarExpansion(
        grid=grid,
        level=level,
        levels=np.array([j for j, _ in pairs], dtype=int),
        shifts=np.array([m for _, m in pairs], dtype=int),
        coefficients=coeffs,
    )


def haar_project(h: Field, level: int) -> Field:
    return haar_coefficients(h, level).reconstruct()


def gram_matrix(grid: GridSpec, level: int) -> np.ndarray:
    """Grid Gram matrix of the normalized window functions 2^{j/2} h_{j,m} (h_{-1,m} / sqrt 2)"""
    rows = []
    for j, m in window(grid, level):
        scale = 1.0 / SQRT2 if j == -1 else 2.0 ** (0.5 * j)
        rows.append(scale * haar_function(grid, j, m).values[0])
    basis = np.array(rows)
    return basis @ basis.T * grid.dx


# --- mollifier ----------------------------------------------------------------

def mollifier_multiplier(grid: GridSpec, level: float) -> np.ndarray:
    """Fourier transform of the Gaussian of width 1/level"""
    if level <= 0:
        raise ValueError(f"mollifier level must be positive, got {level}")
    return np.exp(-grid.xi_squared() / (2.0 * level ** 2))


def mollify_project(h: Field, level: float) -> Field:
    """h * phi_N with a unit-mass Gaussian phi_N of width 1/N; any d"""
    return apply_multiplier(h, mollifier_multiplier(h.grid, level))


# --- density of smooth fields -------------------------------------------------

def _approximate(field: Field, level: int, route: Route) -> Field:
    if route == "mollifier":
        return mollify_project(field, level)
    projected = haar_project(field, level)
    return mollify_project(projected, 2.0 ** (level + 2))


class DensityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    route: Route
    level: int
    norm: SobolevIndex
    errors: List[float]
    sup_error: float


def density_approximant(
    l: TimeField,
    level: int,
    route: Route = "haar",
    index: SobolevIndex = SobolevIndex(s=-0.3, r=2.0),
) -> Tuple[TimeField, DensityReport]:
    """Smooth-in-space l_N with the error ||l(t) - l_N(t)|| at every node.

    haar: P_N per snapshot followed by a mollifier of width 2^{-(N+2)}
    mollifier: Gaussian mollifier of width 1/N
    """
    if route == "haar":
        _require_line(l.grid)
    approximant = l.map(lambda f: _approximate(f, level, route))
    errors = [sobolev_norm(a - b, index) for a, b in zip(l.fields(), approximant.fields())]
    report = DensityReport(route=route, level=level, norm=index, errors=errors, sup_error=max(errors))
    logger.debug(f"density approximant ({route}, N={level}): sup error {report.sup_error:.3e}")
    return approximant, report


class UniformConvergenceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    route: Route
    levels: List[int]
    sup_errors: List[float]
    monotone: bool


def uniform_convergence_report(
    l: TimeField,
    levels: Sequence[int],
    route: Route = "haar",
    index: SobolevIndex = SobolevIndex(s=-0.3, r=2.0),
) -> UniformConvergenceReport:
    """max over the compact {l(t)} of the approximation error, per level"""
    errors = [density_approximant(l, n, route, index)[1].sup_error for n in levels]
    monotone = all(b <= a * (1.0 + 1e-9) for a, b in zip(errors, errors[1:]))
    return UniformConvergenceReport(route=route, levels=list(levels), sup_errors=errors, monotone=monotone)


class OperatorNormReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    norm: SobolevIndex
    levels: List[int]
    max_ratio_by_level: List[float]
    constant: float
    samples: int


def operator_norm_study(
    grid: GridSpec = HAAR_GRID,
    levels: Optional[Sequence[int]] = None,
    index: SobolevIndex = SobolevIndex(s=-0.3, r=2.0),
    samples: int = 100,
    seed: int = 0,
    smoothness_margin: float = 0.25,
) -> OperatorNormReport:
    """Largest ||P_N h|| / ||h|| over random fields of regularity s + margin, per level"""
    levels = list(range(0, max_aligned_level(grid) + 1)) if levels is None else list(levels)
    rng = np.random.default_rng(seed)
    fields = [rough_sample(grid, rng, index.s + smoothness_margin) for _ in range(samples)]
    denominators = [sobolev_norm(h, index) for h in fields]
    ratios = []
    for level in levels:
        ratios.append(max(sobolev_norm(haar_project(h, level), index) / n for h, n in zip(fields, denominators)))
    return OperatorNormReport(
        norm=index,
        levels=levels,
        max_ratio_by_level=ratios,
        constant=max(ratios),
        samples=samples,
    )
