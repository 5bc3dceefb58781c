"""
Empirical constant studies for the semigroup mapping bound and the fractional Morrey embedding.

Both studies draw random tapered fields of prescribed Sobolev regularity and
report the largest observed ratio between the two sides of the inequality.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.spectral.field import Field, GridSpec, SobolevIndex, smooth_taper
from app.spectral.operators import bessel_potential, heat_semigroup, holder_norm, sobolev_norm
from app.utils.logger import logger

if TYPE_CHECKING:
    from app.pde.parameters import ParamSet


def rough_sample(grid: GridSpec, rng: np.random.Generator, smoothness: float, channels: int = 1, taper: bool = True) -> Field:
    """Tapered random field at the edge of H^smoothness.

    Discrete white noise has spectral density flat in xi; the Bessel potential of
    order -(smoothness + d/2) puts the field in H^{smoothness - eps}_r for every eps > 0.
    """
    noise = rng.standard_normal((channels,) + grid.shape) / np.sqrt(grid.cell_volume)
    field = bessel_potential(Field(grid, noise), -(smoothness + 0.5 * grid.d))
    if taper:
        field = field.multiply(smooth_taper(grid))
    return field


class SemigroupBoundReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: Literal["mapping", "contraction"]
    index_in: SobolevIndex
    index_out: SobolevIndex
    t_values: List[float]
    max_ratio_by_t: List[float]
    constant: float
    mean_norm_by_t: List[float]
    slope: Optional[float] = None
    expected_slope: Optional[float] = None
    samples: int


def semigroup_bound_report(
    index_in: SobolevIndex,
    index_out: SobolevIndex,
    t_values: Sequence[float],
    sample_count: int,
    seed: int,
    grid: GridSpec,
    variant: Literal["mapping", "contraction"] = "mapping",
    smoothness_margin: float = 0.25,
) -> SemigroupBoundReport:
    """Largest ratio of ||P(t)w|| to the right-hand side of the semigroup bound.

    mapping:      ||P(t)w||_{H^{s_out}_r} / (e^t t^{-(s_out - s_in)/2} ||w||_{H^{s_in}_r})
    contraction:  ||P(t)w||_{H^s_r} / ||w||_{H^s_r}   (index_in == index_out, s >= 0)
    """
    if variant == "contraction" and (index_in != index_out or index_in.s < 0):
        raise ValueError("contraction variant needs equal indices with s >= 0")
    t_values = [float(t) for t in t_values]
    rng = np.random.default_rng(seed)
    gap = index_out.s - index_in.s
    ratios = np.zeros((sample_count, len(t_values)))
    norms = np.zeros((sample_count, len(t_values)))
    for i in range(sample_count):
        w = rough_sample(grid, rng, index_in.s + smoothness_margin)
        denominator = sobolev_norm(w, index_in)
        for j, t in enumerate(t_values):
            numerator = sobolev_norm(heat_semigroup(w, t), index_out)
            norms[i, j] = numerator
            if variant == "contraction":
                ratios[i, j] = numerator / denominator
            else:
                ratios[i, j] = numerator / (np.exp(t) * t ** (-0.5 * gap) * denominator)

    slope = expected = None
    if variant == "mapping" and len(t_values) >= 2:
        mean_norms = norms.mean(axis=0)
        slope = float(np.polyfit(np.log(t_values), np.log(mean_norms), 1)[0])
        expected = -0.5 * gap

    constant = float(ratios.max())
    logger.debug(f"semigroup {variant} study: constant={constant:.4g}, slope={slope}")
    return SemigroupBoundReport(
        variant=variant,
        index_in=index_in,
        index_out=index_out,
        t_values=t_values,
        max_ratio_by_t=ratios.max(axis=0).tolist(),
        constant=constant,
        mean_norm_by_t=norms.mean(axis=0).tolist(),
        slope=slope,
        expected_slope=expected,
        samples=sample_count,
    )


class MorreyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    sobolev: SobolevIndex
    ratios: List[float]
    constant: float
    skipped: int


def morrey_report(
    samples: Optional[Sequence[Field]],
    param: "ParamSet",
    grid: Optional[GridSpec] = None,
    count: int = 200,
    seed: int = 0,
    smoothness_margin: float = 0.25,
) -> MorreyReport:
    """Largest ||h||_{C^{1+alpha}} / ||h||_{H^{1+delta}_p} with alpha = delta - d/p.

    Without explicit samples, `count` random fields of regularity 1 + delta + margin are drawn.
    Zero samples are skipped.
    """
    if samples is None:
        if grid is None:
            raise ValueError("need a grid to draw samples")
        rng = np.random.default_rng(seed)
        samples = [rough_sample(grid, rng, 1.0 + param.delta + smoothness_margin) for _ in range(count)]
    alpha = param.alpha
    if alpha <= 0:
        raise ValueError(f"Morrey embedding needs delta > d/p, got alpha={alpha}")
    index = SobolevIndex(s=1.0 + param.delta, r=param.p)
    ratios: List[float] = []
    skipped = 0
    for h in samples:
        denominator = sobolev_norm(h, index)
        if h.is_zero() or denominator == 0.0:
            skipped += 1
            continue
        ratios.append(holder_norm(h, "1+alpha", alpha) / denominator)
    if skipped:
        logger.warning(f"⚠️ Morrey study skipped {skipped} degenerate sample(s)")
    return MorreyReport(
        alpha=alpha,
        sobolev=index,
        ratios=ratios,
        constant=max(ratios) if ratios else 0.0,
        skipped=skipped,
    )
