"""
Monte Carlo construction and verification of Y_t = u(t, W_t), Z_t = grad u*(t, W_t).

The candidate martingale is

    M_t = Y_t - Y_0 + A^{W,Y}_t(b) + sum_{t_k < t} f(t_k, W_k, Y_k, Z_k) dt

and the existence argument identifies it with int grad u*(r, W_r) dW_r.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats

from app.pde.mild import solve_linear_phi, solve_semilinear_u
from app.pde.parameters import LipschitzDriver, ParamSet
from app.spectral.field import Field, TimeField, smooth_taper
from app.spectral.paraproduct import CutoffSpec
from app.stochastic.occupation import a_wy, covariation, drift_forcing, ito_integral, time_gradient
from app.stochastic.paths import PathEnsemble, evaluate_along, interpolate
from app.utils.logger import logger

SIGNIFICANCE = 3.0
TEST_FRACTIONS = (0.25, 0.5, 0.75)


def _level_for(z: float) -> float:
    """Two-sided tail probability of a z-score"""
    return float(2.0 * stats.norm.sf(z))


FAMILY_LEVEL = _level_for(SIGNIFICANCE)


@dataclass(frozen=True)
class BSDESolution:
    """Path values (P, M+1, channels): Y = u(t, W), Z = grad u (layout i*m + j), M assembled, M_hat = sum Z dW"""

    times: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    M: np.ndarray
    M_hat: np.ndarray
    terminal_error: float

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def identity_gap(self) -> np.ndarray:
        """sup_t |M_t - M_hat_t| per path"""
        return np.max(np.linalg.norm(self.M - self.M_hat, axis=2), axis=1)

    def identity_constant(self) -> float:
        """C with sup_t |M - M_hat| <= C sqrt(dt) on every path"""
        return float(self.identity_gap().max() / np.sqrt(self.dt))


def _generator_integral(
    f: LipschitzDriver, times: np.ndarray, positions: np.ndarray, y: np.ndarray, z: np.ndarray, start: int = 0
) -> np.ndarray:
    """sum_{start <= k < n} f(t_k, X_k, Y_k, Z_k) dt as (P, M+1, m), zero up to node `start`"""
    paths, nodes, m = y.shape
    out = np.zeros((paths, nodes, m))
    if f.is_zero:
        return out
    dt = times[1] - times[0]
    values = np.zeros((paths, nodes - 1, m))
    for k in range(start, nodes - 1):
        values[:, k, :] = f(float(times[k]), positions[:, k, :].T, y[:, k, :].T, z[:, k, :].T).T
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("generator produced non-finite values along the paths")
    out[:, 1:, :] = np.cumsum(values * dt, axis=1)
    return out


def assemble_solution(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    ensemble: PathEnsemble,
    spec: CutoffSpec = CutoffSpec(),
    param: Optional[ParamSet] = None,
) -> BSDESolution:
    """Y = u(t, W_t), Z = grad u(t, W_t) and M from the BSDE identity; parameters enable the drift tail check"""
    positions = ensemble.positions
    y = evaluate_along(u, positions)
    grad_u = time_gradient(u)
    z = evaluate_along(grad_u, positions)
    drift = a_wy(b, u, ensemble, spec, param).values
    generator = _generator_integral(f, ensemble.times, positions, y, z)
    m = y - y[:, :1, :] + drift + generator
    m_hat = ito_integral(grad_u, ensemble, positions)
    terminal_values = interpolate(terminal, positions[:, -1, :]).T
    terminal_error = float(np.max(np.abs(y[:, -1, :] - terminal_values)))
    return BSDESolution(ensemble.times, y, z, m, m_hat, terminal_error)


# --- martingale test ----------------------------------------------------------

class MartingaleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    paths: int
    terminal_mean: List[float]
    terminal_stderr: List[float]
    terminal_z: float
    adaptedness_z: float
    adaptedness_threshold: float
    adaptedness_p_value: float
    second_moment: float
    second_moment_stderr: float
    passed: bool


def _z_scores(samples: np.ndarray) -> np.ndarray:
    """|mean| / stderr along axis 0; zero spread with nonzero mean is infinitely significant"""
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(stderr > 0, np.abs(mean) / stderr, np.where(np.abs(mean) > 1e-14, np.inf, 0.0))


def _test_functions(w: np.ndarray) -> List[np.ndarray]:
    return [np.ones_like(w), np.tanh(w), np.sin(w), np.cos(w)]


def martingale_test(martingale: np.ndarray, times: np.ndarray, ensemble: PathEnsemble) -> MartingaleReport:
    """(a) E[M_T] = 0, (b) E[(M_T - M_s) g(W_s)] = 0 for bounded g and s in {T/4, T/2, 3T/4}, (c) E|M_T|^2.

    The regression family is Bonferroni-adjusted so that its family-wise level is the 3-sigma level.
    """
    if martingale.ndim == 2:
        martingale = martingale[:, :, np.newaxis]
    paths = martingale.shape[0]
    terminal = martingale[:, -1, :]
    terminal_z = float(np.max(_z_scores(terminal)))

    positions = ensemble.positions
    scores = []
    for fraction in TEST_FRACTIONS:
        k = int(round(fraction * (len(times) - 1)))
        increment = terminal - martingale[:, k, :]
        for g in _test_functions(positions[:, k, :]):
            products = increment[:, :, np.newaxis] * g[:, np.newaxis, :]
            scores.append(_z_scores(products.reshape(paths, -1)))
    scores = np.concatenate(scores)
    family = scores.size
    threshold = float(stats.norm.isf(FAMILY_LEVEL / (2.0 * family)))
    adaptedness_z = float(np.max(scores))
    p_value = min(1.0, family * _level_for(adaptedness_z)) if np.isfinite(adaptedness_z) else 0.0

    squared = np.sum(terminal ** 2, axis=1)
    passed = terminal_z <= SIGNIFICANCE and adaptedness_z <= threshold
    logger.info(
        f"{'✅' if passed else '❌'} martingale test: terminal z={terminal_z:.2f}, "
        f"adaptedness z={adaptedness_z:.2f} (threshold {threshold:.2f})"
    )
    return MartingaleReport(
        paths=paths,
        terminal_mean=terminal.mean(axis=0).tolist(),
        terminal_stderr=(terminal.std(axis=0, ddof=1) / np.sqrt(paths)).tolist(),
        terminal_z=terminal_z,
        adaptedness_z=adaptedness_z,
        adaptedness_threshold=threshold,
        adaptedness_p_value=p_value,
        second_moment=float(squared.mean()),
        second_moment_stderr=float(squared.std(ddof=1) / np.sqrt(paths)),
        passed=passed,
    )


class SecondMomentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    second_moment: float
    stderr: float
    bound: float
    passed: bool


def second_moment_bound(solution: BSDESolution, u: TimeField, d: int) -> SecondMomentReport:
    """E|M_T|^2 against (sup |grad u|)^2 T d"""
    sup_grad = time_gradient(u).sup_norm()
    horizon = float(solution.times[-1])
    squared = np.sum(solution.M[:, -1, :] ** 2, axis=1)
    moment = float(squared.mean())
    stderr = float(squared.std(ddof=1) / np.sqrt(squared.size))
    bound = sup_grad ** 2 * horizon * d
    return SecondMomentReport(second_moment=moment, stderr=stderr, bound=bound, passed=moment <= bound + SIGNIFICANCE * stderr)


# --- Feynman-Kac --------------------------------------------------------------

class FeynmanKacEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float
    x0: List[float]
    estimate: float
    stderr: float
    reference: float
    error: float
    tolerance: float
    passed: bool


def _start_node(s: float, ensemble: PathEnsemble) -> int:
    position = s / ensemble.dt
    k = int(round(position))
    if not 0 <= k < ensemble.steps or abs(position - k) > 1e-9:
        raise ValueError(f"evaluation time {s} is not a node of the time grid before T")
    return k


def feynman_kac_estimate(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    s: float,
    x0: Sequence[float],
    ensemble: PathEnsemble,
    reference: Optional[float] = None,
    tolerance: float = 1e-3,
    spec: CutoffSpec = CutoffSpec(),
) -> FeynmanKacEstimate:
    """Mean of Phi(X_T) + sum f dt + [A_T - A_s](grad u* b) along X = x0 + W - W_s.

    A_T - A_s = phi(T, X_T) - phi(s, x0) - sum grad phi*(t_k, X_k) dW_k with phi solving the
    linear problem for l = grad u* b and phi(T) = 0. The reference defaults to u(s, x0).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    bound = u.grid.half_width - 1.0
    if np.any(np.abs(x0) > bound):
        raise ValueError(f"evaluation point {x0.tolist()} outside the box [-{bound}, {bound}]")
    start = _start_node(s, ensemble)
    positions = ensemble.shifted(start, x0)

    y = evaluate_along(u, positions)
    z = evaluate_along(time_gradient(u), positions)
    generator = _generator_integral(f, ensemble.times, positions, y, z, start)[:, -1, :]
    terminal_values = interpolate(terminal, positions[:, -1, :]).T

    drift_part = 0.0
    if not b.is_zero():
        phi = solve_linear_phi(drift_forcing(u, b, spec))
        phi_start = interpolate(phi.at(start), x0[np.newaxis, :]).T[0]
        grad_values = evaluate_along(time_gradient(phi), positions)[:, start:-1, :]
        d, m = ensemble.d, phi.channels
        matrix = grad_values.reshape(ensemble.paths, -1, d, m)
        stochastic = np.einsum("pkim,pki->pm", matrix, ensemble.increments[:, start:, :])
        drift_part = -phi_start[np.newaxis, :] - stochastic

    samples = (terminal_values + generator + drift_part)[:, 0]
    estimate = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(samples.size))
    if reference is None:
        reference = float(interpolate(u.at(start), x0[np.newaxis, :])[0, 0])
    error = abs(estimate - reference)
    passed = error <= SIGNIFICANCE * stderr + tolerance
    logger.info(
        f"{'✅' if passed else '❌'} Feynman-Kac at s={s:.3g}, x0={x0.tolist()}: "
        f"{estimate:.5f} ± {stderr:.1e} vs {reference:.5f}"
    )
    return FeynmanKacEstimate(
        s=s,
        x0=x0.tolist(),
        estimate=estimate,
        stderr=stderr,
        reference=reference,
        error=error,
        tolerance=tolerance,
        passed=passed,
    )


def feynman_kac_at_points(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    points: Sequence[Tuple[float, Sequence[float]]],
    ensemble: PathEnsemble,
    tolerance: float = 1e-3,
    references: Optional[Sequence[float]] = None,
    spec: CutoffSpec = CutoffSpec(),
) -> List[FeynmanKacEstimate]:
    out = []
    for i, (s, x0) in enumerate(points):
        reference = None if references is None else references[i]
        out.append(feynman_kac_estimate(u, b, f, terminal, s, x0, ensemble, reference, tolerance, spec))
    return out


# --- classical equivalence ----------------------------------------------------

class EquivalenceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: int
    bracket_residual: float
    drift_residual: float
    max_drift: float


def classical_equivalence_check(
    u: TimeField,
    b: TimeField,
    ensemble: PathEnsemble,
    b_points=None,
    spec: CutoffSpec = CutoffSpec(),
) -> EquivalenceReport:
    """[W, Y]_t against sum Z* dt, and A^{W,Y}(b) against sum Z_k* b(t_k, W_k) dt (ensemble means of sup_t).

    b_points(t, x) evaluates b at path points (d, P) -> (d, P); grid interpolation of b otherwise.
    """
    positions = ensemble.positions
    d = ensemble.d
    y = evaluate_along(u, positions)
    z = evaluate_along(time_gradient(u), positions)
    m = y.shape[2]
    z_matrix = z.reshape(ensemble.paths, -1, d, m)

    bracket = covariation(positions, y, lag=1)
    integrated = np.zeros_like(bracket)
    integrated[:, 1:] = np.cumsum(z_matrix[:, :-1] * ensemble.dt, axis=1)
    bracket_gap = np.max(np.linalg.norm((bracket - integrated).reshape(ensemble.paths, len(ensemble.times), -1), axis=2), axis=1)

    if b_points is None:
        b_values = evaluate_along(b, positions)
    else:
        b_values = np.stack([np.asarray(b_points(float(t), positions[:, k, :].T)).T for k, t in enumerate(ensemble.times)], axis=1)
    direct_rate = np.einsum("pkim,pki->pkm", z_matrix[:, :-1], b_values[:, :-1])
    direct = np.zeros_like(y)
    direct[:, 1:] = np.cumsum(direct_rate * ensemble.dt, axis=1)
    drift = a_wy(b, u, ensemble, spec).values
    drift_gap = np.max(np.linalg.norm(drift - direct, axis=2), axis=1)
    return EquivalenceReport(
        steps=ensemble.steps,
        bracket_residual=float(bracket_gap.mean()),
        drift_residual=float(drift_gap.mean()),
        max_drift=float(np.max(np.abs(drift))),
    )


# --- uniqueness check ---------------------------------------------------------

class UniquenessReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    wavenumber: float
    epsilons: List[float]
    adaptedness_z: List[float]
    p_values: List[float]
    passed: List[bool]
    detection_threshold: Optional[float]


def perturbation(u: TimeField, epsilon: float) -> TimeField:
    """epsilon (T - t) sin(xi x_1) chi(x) with xi = 3 pi / L; vanishes at T"""
    grid = u.grid
    xi = 3.0 * np.pi / grid.half_width
    chi = smooth_taper(grid).values[0]
    profile = np.sin(xi * grid.coordinates()[0]) * chi
    weights = epsilon * (u.horizon - u.times)
    snaps = weights[:, np.newaxis, np.newaxis] * np.broadcast_to(profile.reshape(1, -1), (u.channels, profile.size))
    return TimeField(grid, u.horizon, snaps.reshape(u.snapshots.shape))


def uniqueness_check(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    ensemble: PathEnsemble,
    epsilons: Sequence[float] = (0.0, 0.1),
    spec: CutoffSpec = CutoffSpec(),
) -> UniquenessReport:
    """martingale_test on the process assembled from u + perturbation, per amplitude"""
    zs, ps, verdicts = [], [], []
    for eps in epsilons:
        candidate = u if eps == 0 else u + perturbation(u, eps)
        solution = assemble_solution(candidate, b, f, terminal, ensemble, spec)
        report = martingale_test(solution.M, solution.times, ensemble)
        zs.append(report.adaptedness_z)
        ps.append(report.adaptedness_p_value)
        verdicts.append(report.passed)
    detected = [eps for eps, ok in zip(epsilons, verdicts) if not ok]
    return UniquenessReport(
        wavenumber=3.0 * np.pi / u.grid.half_width,
        epsilons=list(epsilons),
        adaptedness_z=zs,
        p_values=ps,
        passed=verdicts,
        detection_threshold=min(detected) if detected else None,
    )


def solve_and_assemble(
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    param: ParamSet,
    ensemble: PathEnsemble,
    tol: float = 1e-8,
    spec: CutoffSpec = CutoffSpec(),
) -> Tuple[TimeField, BSDESolution]:
    u, _ = solve_semilinear_u(b, f, terminal, param, tol=tol, spec=spec)
    return u, assemble_solution(u, b, f, terminal, ensemble, spec, param)
