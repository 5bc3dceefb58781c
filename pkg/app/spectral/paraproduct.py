"""
Pointwise product of a distribution and a function through dyadic Fourier truncation.

S^j g is the Fourier multiplier psi(|xi| / 2^j) applied to g. The product gh is the
limit of S^j g * S^j h; on the grid the limit is taken at the Nyquist level and the
Cauchy tail across levels is reported instead.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Callable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField

from app.spectral.field import Field, GridSpec, SobolevIndex, _smooth_step
from app.spectral.operators import apply_multiplier, sobolev_norm
from app.spectral.studies import rough_sample
from app.utils.errors import ProductDivergenceError
from app.utils.logger import logger

if TYPE_CHECKING:
    from app.pde.parameters import ParamSet

Profile = Literal["raised_cosine", "smoothed_indicator"]

DIVERGENCE_WINDOW = 3
DIVERGENCE_FLOOR = 1e-12


class CutoffSpec(BaseModel):
    """Truncation level J and radial profile psi: 1 on [0, 1), 0 on [2, inf)"""

    model_config = ConfigDict(frozen=True)

    level: Optional[int] = PydanticField(None, ge=0, description="J; None means the grid Nyquist level")
    profile: Profile = "raised_cosine"

    def resolve(self, grid: GridSpec) -> int:
        return nyquist_level(grid) if self.level is None else self.level


def profile_values(profile: Profile, radius: np.ndarray) -> np.ndarray:
    radius = np.asarray(radius, dtype=float)
    if profile == "raised_cosine":
        ramp = 0.5 * (1.0 + np.cos(np.pi * np.clip(radius - 1.0, 0.0, 1.0)))
        return np.where(radius < 1.0, 1.0, np.where(radius >= 2.0, 0.0, ramp))
    if profile == "smoothed_indicator":
        return 1.0 - _smooth_step(radius - 1.0)
    raise ValueError(f"unknown cutoff profile {profile!r}")


def nyquist_level(grid: GridSpec) -> int:
    """Smallest J with 2^J above every grid frequency, so S^J is the identity"""
    return int(np.floor(np.log2(grid.max_frequency))) + 1


def truncation_multiplier(grid: GridSpec, level: int, profile: Profile = "raised_cosine") -> np.ndarray:
    return profile_values(profile, np.sqrt(grid.xi_squared()) / 2.0 ** level)


def smooth_truncate(g: Field, level: int, spec: CutoffSpec = CutoffSpec()) -> Field:
    """S^j g"""
    if level < 0:
        raise ValueError(f"truncation level must be nonnegative, got {level}")
    return apply_multiplier(g, truncation_multiplier(g.grid, level, spec.profile))


def _sample_product(g: Field, h: Field) -> Field:
    if g.grid != h.grid:
        raise ValueError("factors live on different grids")
    if g.channels != h.channels and 1 not in (g.channels, h.channels):
        raise ValueError(f"cannot multiply {g.channels} channels by {h.channels} channels")
    return Field(g.grid, g.values * h.values)


class ProductReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    profile: Profile
    norm: SobolevIndex
    levels: List[int]
    tail_norms: List[float]

    def rows(self) -> List[dict]:
        return [{"j": j, "tail_norm": v} for j, v in zip(self.levels, self.tail_norms)]


def _check_tail(tail: Sequence[float], scale: float) -> None:
    if len(tail) < DIVERGENCE_WINDOW:
        return
    last = list(tail[-DIVERGENCE_WINDOW:])
    growing = all(b > a for a, b in zip(last, last[1:]))
    if growing and last[-1] > DIVERGENCE_FLOOR * max(scale, 1.0):
        raise ProductDivergenceError(last)


def _level_sequence(
    combine: Callable[[Field, Field], Field],
    g: Field,
    h: Field,
    level: int,
    spec: CutoffSpec,
    tail_norm: SobolevIndex,
) -> Tuple[Field, ProductReport]:
    """combine(S^j g, S^j h) for j <= level with the Cauchy tail between consecutive levels"""
    previous: Optional[Field] = None
    tail: List[float] = []
    for j in range(level + 1):
        current = combine(smooth_truncate(g, j, spec), smooth_truncate(h, j, spec))
        if previous is not None:
            tail.append(sobolev_norm(current - previous, tail_norm))
        previous = current
    _check_tail(tail, sobolev_norm(previous, tail_norm))
    report = ProductReport(
        level=level,
        profile=spec.profile,
        norm=tail_norm,
        levels=list(range(len(tail))),
        tail_norms=tail,
    )
    return previous, report


def pointwise_product(
    g: Field,
    h: Field,
    spec: CutoffSpec = CutoffSpec(),
    tail_norm: SobolevIndex = SobolevIndex(s=0.0, r=2.0),
) -> Tuple[Field, ProductReport]:
    """S^J g * S^J h with the tail ||S^{j+1}g S^{j+1}h - S^j g S^j h|| for j < J.

    Channels multiply componentwise; a single-channel factor broadcasts. Callers
    holding a ParamSet pass its forcing index (-beta, p) as the tail norm.
    """
    return _level_sequence(_sample_product, g, h, spec.resolve(g.grid), spec, tail_norm)


def _contract(grad_u: Field, b: Field) -> Field:
    d = grad_u.grid.d
    m = grad_u.channels // d
    out = np.zeros((m,) + grad_u.grid.shape)
    for i in range(m):
        for k in range(d):
            out[i] += grad_u.values[k * m + i] * b.values[k]
    return Field(grad_u.grid, out)


def _check_contraction(grad_u: Field, b: Field) -> None:
    d = grad_u.grid.d
    if grad_u.grid != b.grid:
        raise ValueError("gradient and drift live on different grids")
    if b.channels != d or grad_u.channels % d:
        raise ValueError(f"gradient with {grad_u.channels} channels does not contract with a {b.channels}-vector")


def contraction_report(
    grad_u: Field, b: Field, spec: CutoffSpec, tail_norm: SobolevIndex
) -> Tuple[Field, ProductReport]:
    """grad u* b at level J with the Cauchy tail of the truncated contractions"""
    _check_contraction(grad_u, b)
    return _level_sequence(_contract, grad_u, b, spec.resolve(grad_u.grid), spec, tail_norm)


def contract_gradient(
    grad_u: Field,
    b: Field,
    spec: CutoffSpec = CutoffSpec(),
    tail_norm: Optional[SobolevIndex] = None,
) -> Field:
    """(grad u* b)_i = sum_k d_k u_i b_k, each term a truncated pointwise product at level J.

    With a tail norm every level j <= J is formed and a growing tail raises
    ProductDivergenceError; without one only level J is computed.
    """
    if tail_norm is not None:
        return contraction_report(grad_u, b, spec, tail_norm)[0]
    _check_contraction(grad_u, b)
    level = spec.resolve(grad_u.grid)
    return _contract(smooth_truncate(grad_u, level, spec), smooth_truncate(b, level, spec))


class ProductBoundReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float
    q: float
    delta: float
    p: float
    ratios: List[float]
    constant: float
    skipped: int


def product_bound_report(
    param: "ParamSet",
    samples: Union[int, Sequence[Tuple[Field, Field]]],
    seed: int = 0,
    grid: Optional[GridSpec] = None,
    spec: CutoffSpec = CutoffSpec(),
    smoothness_margin: float = 0.25,
) -> ProductBoundReport:
    """Largest ||gh||_{H^{-beta}_p} / (||g||_{H^{-beta}_q} ||h||_{H^delta_p}) over sample pairs"""
    if isinstance(samples, int):
        if grid is None:
            raise ValueError("need a grid to draw sample pairs")
        rng = np.random.default_rng(seed)
        pairs = [
            (
                rough_sample(grid, rng, -param.beta + smoothness_margin),
                rough_sample(grid, rng, param.delta + smoothness_margin),
            )
            for _ in range(samples)
        ]
    else:
        pairs = list(samples)

    product_index = SobolevIndex(s=-param.beta, r=param.p)
    g_index = SobolevIndex(s=-param.beta, r=param.q)
    h_index = SobolevIndex(s=param.delta, r=param.p)
    ratios: List[float] = []
    skipped = 0
    for g, h in pairs:
        denominator = sobolev_norm(g, g_index) * sobolev_norm(h, h_index)
        if g.is_zero() or h.is_zero() or denominator == 0.0:
            skipped += 1
            continue
        product, _ = pointwise_product(g, h, spec, tail_norm=product_index)
        ratios.append(sobolev_norm(product, product_index) / denominator)
    if skipped:
        logger.warning(f"⚠️ product bound study skipped {skipped} degenerate pair(s)")
    return ProductBoundReport(
        beta=param.beta,
        q=param.q,
        delta=param.delta,
        p=param.p,
        ratios=ratios,
        constant=max(ratios) if ratios else 0.0,
        skipped=skipped,
    )
