"""
Occupation-time operator A^{W,W}, its extension to distributional integrands through
the chain rule, the Markovian operator A^{W,Y} and lagged covariation estimates.

For l in C([0,T]; H^{-beta}_p) with phi solving d_t phi + 1/2 Lap phi = l:

    A^{W,W}_t(l) = phi(t, W_t) - phi(0, W_0) - int_0^t grad phi*(r, W_r) dW_r

which equals int_0^t l(r, W_r) dr when l is a function.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Literal, Mapping, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.pde.mild import solve_linear_phi
from app.pde.parameters import ParamSet, resolve_params
from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField, forward, inverse
from app.spectral.operators import gradient, sobolev_norm
from app.spectral.paraproduct import CutoffSpec, contract_gradient
from app.stochastic.paths import PathEnsemble, evaluate_along
from app.utils.logger import logger

Provenance = Literal["smooth-integral", "chain-rule", "composed", "ito-integral"]
PointFunction = Callable[[float, np.ndarray], np.ndarray]

SIGNIFICANCE = 3.0


@dataclass(frozen=True)
class PathFunctional:
    """values[p, k, :] is the functional on path p at t_k; zero at t = 0"""

    times: np.ndarray
    values: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, np.newaxis]
        if values.shape[1] != len(self.times):
            raise ValueError("values do not match the time grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("path functional has non-finite values")
        if np.any(values[:, 0, :] != 0.0):
            raise ValueError("path functional must vanish at t = 0")
        object.__setattr__(self, "values", values)

    @property
    def paths(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1, :]

    def sup_distance(self, other: "PathFunctional") -> np.ndarray:
        """max_t |A_t - B_t| per path"""
        return np.max(np.linalg.norm(self.values - other.values, axis=2), axis=1)

    def __sub__(self, other: "PathFunctional") -> "PathFunctional":
        return PathFunctional(self.times, self.values - other.values, "composed")

    def __add__(self, other: "PathFunctional") -> "PathFunctional":
        return PathFunctional(self.times, self.values + other.values, "composed")

    def __mul__(self, scalar: float) -> "PathFunctional":
        return PathFunctional(self.times, self.values * float(scalar), self.provenance)

    __rmul__ = __mul__


# --- covariation --------------------------------------------------------------

def covariation(y: np.ndarray, x: np.ndarray, lag: int = 1) -> np.ndarray:
    """(1/eps) int_0^t (Y_{s+eps} - Y_s)(X_{s+eps} - X_s)^T ds with eps = lag * dt.

    y (P, M+1, a), x (P, M+1, b) -> (P, M+1, a, b); values past T are frozen at T.
    """
    if y.shape[:2] != x.shape[:2]:
        raise ValueError("paths must share a time grid")
    if lag < 1:
        raise ValueError(f"lag must be a positive number of steps, got {lag}")
    steps = y.shape[1] - 1
    ahead = np.minimum(np.arange(steps) + lag, steps)
    dy = y[:, ahead, :] - y[:, :steps, :]
    dx = x[:, ahead, :] - x[:, :steps, :]
    increments = np.einsum("pka,pkb->pkab", dy, dx) / lag
    zero = np.zeros((y.shape[0], 1, y.shape[2], x.shape[2]))
    return np.concatenate([zero, np.cumsum(increments, axis=1)], axis=1)


class CovariationStability(BaseModel):
    model_config = ConfigDict(frozen=True)

    lags: List[int]
    terminal_means: List[List[List[float]]]
    spread: float


def covariation_stability(y: np.ndarray, x: np.ndarray, lags: Sequence[int] = (1, 2, 4)) -> CovariationStability:
    """Ensemble-mean terminal covariation per lag and the largest entrywise spread across lags"""
    means = [covariation(y, x, lag)[:, -1].mean(axis=0) for lag in lags]
    stacked = np.stack(means)
    return CovariationStability(
        lags=list(lags),
        terminal_means=[m.tolist() for m in means],
        spread=float(np.max(stacked.max(axis=0) - stacked.min(axis=0))),
    )


# --- occupation operators -----------------------------------------------------

def _as_rows(value, paths: int) -> np.ndarray:
    """Scalar, (P,) or (m, P) integrand values as (m, P)"""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full((1, paths), float(arr))
    if arr.ndim == 1:
        return arr[np.newaxis, :]
    return arr


def a_ww_smooth(l: PointFunction, ensemble: PathEnsemble, positions: Optional[np.ndarray] = None) -> PathFunctional:
    """Left-Riemann sum of l(t_k, W_k) dt; l(t, x) takes x of shape (d, P) and returns (m, P) or a scalar"""
    positions = ensemble.positions if positions is None else positions
    times = ensemble.times
    rows = [_as_rows(l(float(t), positions[:, k, :].T), ensemble.paths) for k, t in enumerate(times[:-1])]
    integrand = np.stack(rows, axis=1).transpose(2, 1, 0)
    cumulative = np.cumsum(integrand * ensemble.dt, axis=1)
    zero = np.zeros((ensemble.paths, 1, integrand.shape[2]))
    return PathFunctional(times, np.concatenate([zero, cumulative], axis=1), "smooth-integral")


def ito_integral(grad: TimeField, ensemble: PathEnsemble, positions: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_{k<n} G*(t_k, X_k) dW_k for a gradient-layout field G (d*m channels); returns (P, M+1, m)"""
    d = ensemble.d
    positions = ensemble.positions if positions is None else positions
    values = evaluate_along(grad, positions)[:, :-1, :]
    m = grad.channels // d
    matrix = values.reshape(ensemble.paths, ensemble.steps, d, m)
    increments = np.einsum("pkim,pki->pkm", matrix, ensemble.increments)
    zero = np.zeros((ensemble.paths, 1, m))
    return np.concatenate([zero, np.cumsum(increments, axis=1)], axis=1)


def time_gradient(u: TimeField) -> TimeField:
    """grad u(t_k) at every node"""
    return u.map(gradient)


def a_ww_rough(
    l: TimeField,
    ensemble: PathEnsemble,
    terminal: Optional[Field] = None,
    param: Union[ParamSet, Mapping, None] = None,
) -> PathFunctional:
    """phi(t, W_t) - phi(0, W_0) - sum grad phi*(t_k, W_k) dW_k with phi = solve_linear_phi(l, terminal)

    A parameter mapping outside the admissible region raises ParameterRejection.
    """
    if l.steps != ensemble.steps or not np.isclose(l.horizon, ensemble.horizon):
        raise ValueError("forcing and ensemble must share the time grid")
    phi = solve_linear_phi(l, terminal, param)
    return chain_rule_functional(phi, ensemble)


def chain_rule_functional(phi: TimeField, ensemble: PathEnsemble) -> PathFunctional:
    positions = ensemble.positions
    values = evaluate_along(phi, positions)
    martingale = ito_integral(time_gradient(phi), ensemble, positions)
    out = values - values[:, :1, :] - martingale
    out[:, 0, :] = 0.0
    return PathFunctional(ensemble.times, out, "chain-rule")


def drift_forcing(
    gamma: TimeField,
    b: TimeField,
    spec: CutoffSpec = CutoffSpec(),
    tail_norm: Optional[SobolevIndex] = None,
) -> TimeField:
    """grad gamma* b at every node"""
    return TimeField.from_fields(
        (contract_gradient(gradient(gamma.at(k)), b.at(k), spec, tail_norm) for k in range(gamma.steps + 1)),
        gamma.horizon,
    )


def a_wy(
    b: TimeField,
    gamma: TimeField,
    ensemble: PathEnsemble,
    spec: CutoffSpec = CutoffSpec(),
    param: Union[ParamSet, Mapping, None] = None,
) -> PathFunctional:
    """A^{W,Y}(b) = A^{W,W}(grad gamma* b) for Y = gamma(t, W_t).

    With parameters the truncated products are checked for a growing tail in H^{-beta}_p.
    """
    param = resolve_params(param)
    tail_norm = None if param is None else param.forcing_index
    return a_ww_rough(drift_forcing(gamma, b, spec, tail_norm), ensemble, param=param)


# --- consistency reports ------------------------------------------------------

class ConsistencyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    paths: int
    steps: int
    mean_sup_difference: float
    max_sup_difference: float
    stderr: float


def _grid_forcing(g: PointFunction, grid: GridSpec, ensemble: PathEnsemble) -> TimeField:
    return TimeField.from_function(grid, ensemble.horizon, ensemble.steps, g)


def classical_consistency(g: PointFunction, grid: GridSpec, ensemble: PathEnsemble) -> ConsistencyReport:
    """Per-path sup_t |A^{W,W}(g) through the chain rule - int g(r, W_r) dr|.

    g(t, x) must accept grid coordinates (d, n, ...) and path points (d, P).
    """
    rough = a_ww_rough(_grid_forcing(g, grid, ensemble), ensemble)
    smooth = a_ww_smooth(g, ensemble)
    distance = rough.sup_distance(smooth)
    return ConsistencyReport(
        paths=ensemble.paths,
        steps=ensemble.steps,
        mean_sup_difference=float(distance.mean()),
        max_sup_difference=float(distance.max()),
        stderr=float(distance.std(ddof=1) / np.sqrt(distance.size)) if distance.size > 1 else 0.0,
    )


class RateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: List[int]
    mean_sup_differences: List[float]
    reduction: float


def consistency_rate(g: PointFunction, grid: GridSpec, ensemble: PathEnsemble) -> RateReport:
    """Mean sup-difference on the ensemble and on the same paths at half the resolution"""
    coarse = classical_consistency(g, grid, ensemble.coarsen(2))
    fine = classical_consistency(g, grid, ensemble)
    reduction = coarse.mean_sup_difference / fine.mean_sup_difference if fine.mean_sup_difference > 0 else float("inf")
    return RateReport(
        steps=[coarse.steps, fine.steps],
        mean_sup_differences=[coarse.mean_sup_difference, fine.mean_sup_difference],
        reduction=reduction,
    )


class ChainRuleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_sup_difference: float
    max_sup_difference: float
    generator_residual: float
    generator_path_residual: float


def generator_field(phi: TimeField) -> TimeField:
    """(d_t + 1/2 Lap) phi with second-order differences in time, one-sided at the ends"""
    s = phi.snapshots
    dt_phi = np.gradient(s, phi.dt, axis=0, edge_order=2)
    lap = inverse(forward(s, phi.grid) * (-phi.grid.xi_squared()), phi.grid)
    return TimeField(phi.grid, phi.horizon, dt_phi + 0.5 * lap)


def chain_rule_residual(g: PointFunction, grid: GridSpec, ensemble: PathEnsemble) -> ChainRuleReport:
    """Three-term chain rule against the direct integral, and int (d_t + 1/2 Lap) phi dr against int l dr"""
    l = _grid_forcing(g, grid, ensemble)
    phi = solve_linear_phi(l)
    rough = chain_rule_functional(phi, ensemble)
    smooth = a_ww_smooth(g, ensemble)
    distance = rough.sup_distance(smooth)

    generated = generator_field(phi)
    generator_residual = float(np.max(np.abs(generated.snapshots[1:-1] - l.snapshots[1:-1])))
    positions = ensemble.positions
    along_generated = evaluate_along(generated, positions)[:, :-1, :]
    along_forcing = evaluate_along(l, positions)[:, :-1, :]
    path_residual = np.abs(np.cumsum((along_generated - along_forcing) * ensemble.dt, axis=1))
    return ChainRuleReport(
        mean_sup_difference=float(distance.mean()),
        max_sup_difference=float(distance.max()),
        generator_residual=generator_residual,
        generator_path_residual=float(path_residual.max()),
    )


class ExtensionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    forcing_distances: List[float]
    mean_sup_differences: List[float]
    max_sup_differences: List[float]
    decreasing: bool


def extension_continuity(
    approximants: Sequence[TimeField],
    l: TimeField,
    ensemble: PathEnsemble,
    index: SobolevIndex = SobolevIndex(s=-0.3, r=2.0),
) -> ExtensionReport:
    """sup_t |A(l_n) - A(l)| per path against sup_t ||l_n(t) - l(t)||"""
    target = a_ww_rough(l, ensemble)
    distances, means, maxima = [], [], []
    for ln in approximants:
        distances.append(max(sobolev_norm(a - b, index) for a, b in zip(ln.fields(), l.fields())))
        gap = a_ww_rough(ln, ensemble).sup_distance(target)
        means.append(float(gap.mean()))
        maxima.append(float(gap.max()))
    decreasing = all(b <= a * (1.0 + 1e-9) for a, b in zip(means, means[1:]))
    return ExtensionReport(
        forcing_distances=distances,
        mean_sup_differences=means,
        max_sup_differences=maxima,
        decreasing=decreasing,
    )


# --- martingale orthogonality -------------------------------------------------

class OrthogonalityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    test_martingale: str
    lag: int
    extrapolated: bool
    means: List[List[float]]
    stderrs: List[List[float]]
    z_max: float
    passed: bool


def reference_martingales(ensemble: PathEnsemble, kind: Literal["W", "tanh"] = "W") -> np.ndarray:
    """Components of W, or int tanh(W) dW componentwise; shape (P, M+1, d)"""
    positions = ensemble.positions
    if kind == "W":
        return positions
    increments = np.tanh(positions[:, :-1, :]) * ensemble.increments
    zero = np.zeros((ensemble.paths, 1, ensemble.d))
    return np.concatenate([zero, np.cumsum(increments, axis=1)], axis=1)


def orthogonality_check(
    functional: PathFunctional,
    ensemble: PathEnsemble,
    kind: Literal["W", "tanh"] = "W",
    lag: int = 1,
    extrapolate: bool = True,
) -> OrthogonalityReport:
    """[A, N]_T has ensemble mean within 3 standard errors of zero for every entry.

    The lag-eps estimate carries a bias of order eps, the same order as its standard error.
    With `extrapolate` the statistic is 2 [A, N]^{eps}_T - [A, N]^{2 eps}_T, which is unbiased
    to first order in eps.
    """
    n = reference_martingales(ensemble, kind)
    terminal = covariation(functional.values, n, lag)[:, -1]
    if extrapolate:
        terminal = 2.0 * terminal - covariation(functional.values, n, 2 * lag)[:, -1]
    means = terminal.mean(axis=0)
    stderrs = terminal.std(axis=0, ddof=1) / np.sqrt(terminal.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderrs > 0, np.abs(means) / stderrs, np.where(np.abs(means) > 0, np.inf, 0.0))
    z_max = float(np.max(z))
    passed = z_max <= SIGNIFICANCE
    logger.info(f"{'✅' if passed else '❌'} orthogonality against {kind}: max z = {z_max:.2f}")
    return OrthogonalityReport(
        test_martingale=kind,
        lag=lag,
        extrapolated=extrapolate,
        means=means.tolist(),
        stderrs=stderrs.tolist(),
        z_max=z_max,
        passed=passed,
    )


def ito_functional(l: TimeField, ensemble: PathEnsemble) -> PathFunctional:
    """int grad phi* dW for phi solving the linear problem with forcing l; the martingale part of the chain rule"""
    phi = solve_linear_phi(l)
    return PathFunctional(ensemble.times, ito_integral(time_gradient(phi), ensemble), "ito-integral")
