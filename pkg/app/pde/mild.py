"""
Mild solutions of the backward heat equations

    d_t phi + 1/2 Lap phi = l,                 phi(T) = Psi
    d_t u + 1/2 Lap u + grad u* b + f = 0,     u(T) = Phi

in the form phi(t) = P(T-t) Psi - int_t^T P(r-t) l(r) dr, the semilinear one by Picard iteration.
"""
from __future__ import annotations

import time
from typing import List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField

from app.approx.drivers import CertifiedDriver, certify_driver
from app.pde.parameters import (
    LipschitzDriver,
    ParamSet,
    contraction_factor,
    contraction_rho,
    resolve_params,
    rho_norm,
    validate_params,
)
from app.spectral.field import Field, SobolevIndex, TimeField, forward, inverse
from app.spectral.operators import gradient, heat_multiplier, holder_norm, laplacian, sobolev_norm
from app.spectral.paraproduct import CutoffSpec, contract_gradient
from app.utils.errors import ConvergenceError, InadmissibleDriverError, NonContractionError
from app.utils.logger import logger

NON_CONTRACTION_STREAK = 3
NOISE_FLOOR = 1e-12
SERIES_SWITCH = 1e-3


# --- Duhamel quadrature -------------------------------------------------------

def _slab_weights(lam: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact slab integrals for forcing linear in time between nodes.

    decay = e^{-lam dt}
    w0    = int_0^dt e^{-lam s} ds
    w1    = (1/dt) int_0^dt s e^{-lam s} ds
    """
    x = lam * dt
    decay = np.exp(-x)
    small = x < SERIES_SWITCH
    safe = np.where(small, 1.0, lam)
    w0 = np.where(small, dt * (1.0 - x / 2.0 + x ** 2 / 6.0 - x ** 3 / 24.0), -np.expm1(-x) / safe)
    w1 = np.where(
        small,
        dt * (0.5 - x / 3.0 + x ** 2 / 8.0 - x ** 3 / 30.0),
        (1.0 - decay * (1.0 + x)) / (safe ** 2 * dt),
    )
    return decay, w0, w1


def _duhamel_coefficients(l: TimeField, stop: int = 0) -> np.ndarray:
    """Fourier coefficients of D_k = int_{t_k}^T P(r - t_k) l(r) dr for k >= stop (earlier rows stay zero)"""
    grid = l.grid
    lam = 0.5 * grid.xi_squared()
    decay, w0, w1 = _slab_weights(lam, l.dt)
    coeffs = forward(l.snapshots, grid)
    out = np.zeros_like(coeffs)
    for k in range(l.steps - 1, stop - 1, -1):
        out[k] = w0 * coeffs[k] + w1 * (coeffs[k + 1] - coeffs[k]) + decay * out[k + 1]
    return out


def duhamel_all(l: TimeField) -> TimeField:
    """int_t^T P(r - t) l(r) dr at every node; the forcing is linear in time on each slab"""
    values = inverse(_duhamel_coefficients(l), l.grid)
    values[-1] = 0.0
    return TimeField(l.grid, l.horizon, values)


def duhamel(l: TimeField, k: int) -> Field:
    """int_{t_k}^T P(r - t_k) l(r) dr"""
    if not 0 <= k <= l.steps:
        raise ValueError(f"node {k} outside 0..{l.steps}")
    if k == l.steps:
        return Field.zeros(l.grid, l.channels)
    coeffs = _duhamel_coefficients(l, stop=k)
    return Field(l.grid, inverse(coeffs[k], l.grid))


def terminal_propagation(terminal: Field, horizon: float, steps: int) -> TimeField:
    """P(T - t_k) terminal at every node, with the last node equal to `terminal` exactly"""
    grid = terminal.grid
    times = horizon * np.arange(steps + 1) / steps
    coeffs = forward(terminal.values, grid)
    snaps = np.stack([inverse(coeffs * heat_multiplier(grid, horizon - t), grid) for t in times[:-1]])
    snaps = np.concatenate([snaps, terminal.values[np.newaxis]], axis=0)
    return TimeField(grid, horizon, snaps)


# --- linear problem -----------------------------------------------------------

def solve_linear_phi(
    l: TimeField,
    terminal: Optional[Field] = None,
    param: Union[ParamSet, Mapping, None] = None,
) -> TimeField:
    """phi(t) = P(T-t) Psi - int_t^T P(r-t) l(r) dr, so that d_t phi + 1/2 Lap phi = l and phi(T) = Psi"""
    if isinstance(param, Mapping):
        validate_params(param)
    terminal = Field.zeros(l.grid, l.channels) if terminal is None else terminal
    if terminal.grid != l.grid:
        raise ValueError("terminal condition and forcing live on different grids")
    return terminal_propagation(terminal, l.horizon, l.steps) - duhamel_all(l)


class LinearSolveReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    sup_norm: float
    terminal_norm: float
    forcing_norm: float
    bound_constant: float
    continuity_modulus: float
    time_holder_exponent: float
    fd_residual: Optional[float] = None


def linear_regularity_report(
    phi: TimeField,
    l: TimeField,
    terminal: Field,
    param: ParamSet,
    with_residual: bool = False,
) -> LinearSolveReport:
    """Norm report for phi in C([0,T]; H^{1+delta}_p).

    bound_constant is the smallest C with
    ||phi(t)|| <= ||Psi|| + C (T-t)^{(1-delta-beta)/2} sup_r ||l(r)||_{H^{-beta}_p} on the nodes.
    """
    index = param.solution_index
    norms = np.array([sobolev_norm(f, index) for f in phi.fields()])
    psi_norm = sobolev_norm(terminal, index)
    forcing = max(sobolev_norm(f, param.forcing_index) for f in l.fields())
    remaining = (phi.horizon - phi.times[:-1]) ** (0.5 * (1.0 - param.delta - param.beta))
    excess = np.maximum(norms[:-1] - psi_norm, 0.0)
    constant = float(np.max(excess / (remaining * forcing))) if forcing > 0 else 0.0
    steps = np.diff(phi.snapshots, axis=0)
    modulus = max(sobolev_norm(Field(phi.grid, s), index) for s in steps)
    return LinearSolveReport(
        sup_norm=float(norms.max()),
        terminal_norm=psi_norm,
        forcing_norm=forcing,
        bound_constant=constant,
        continuity_modulus=modulus,
        time_holder_exponent=time_holder_exponent(phi, index),
        fd_residual=fd_residual(phi, l) if with_residual else None,
    )


def fd_residual(phi: TimeField, l: TimeField) -> float:
    """sup over interior nodes of |d_t phi + 1/2 Lap phi - l|, fourth-order central differences in time"""
    if phi.steps < 4:
        raise ValueError("the residual needs at least four time steps")
    s = phi.snapshots
    dt_phi = (-s[4:] + 8.0 * s[3:-1] - 8.0 * s[1:-3] + s[:-4]) / (12.0 * phi.dt)
    lap = inverse(forward(s[2:-2], phi.grid) * (-phi.grid.xi_squared()), phi.grid)
    return float(np.max(np.abs(dt_phi + 0.5 * lap - l.snapshots[2:-2])))


def time_holder_exponent(u: TimeField, index: SobolevIndex) -> float:
    """Fitted slope of log max_k ||u(t_{k+j}) - u(t_k)|| against log(j dt) over dyadic lags"""
    lags, moduli = [], []
    j = 1
    while j <= u.steps // 2:
        diffs = u.snapshots[j:] - u.snapshots[:-j]
        stride = max(1, len(diffs) // 16)
        modulus = max(sobolev_norm(Field(u.grid, v), index) for v in diffs[::stride])
        if modulus > 0:
            lags.append(j * u.dt)
            moduli.append(modulus)
        j *= 2
    if len(lags) < 2:
        return 1.0
    return float(np.polyfit(np.log(lags), np.log(moduli), 1)[0])


# --- semilinear problem -------------------------------------------------------

class SolveReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    iterations: int
    increments: List[float] = PydanticField(description="rho-weighted sup-in-time increments")
    plain_increments: List[float]
    contraction_factor: float
    predicted_factor: float
    rho: float
    c_emp: float
    residual: float
    sup_norm: float
    holder_norm: float
    wall_time: float = PydanticField(0.0, exclude=True)


def _driver_field(b: Union[TimeField, CertifiedDriver], param: ParamSet) -> Tuple[TimeField, float]:
    if isinstance(b, TimeField):
        b = certify_driver(b, param.beta, param.q)
    if not b.certificate.admissible:
        raise InadmissibleDriverError(f"drift rejected: {b.certificate.reason}")
    return b.field, b.certificate.sup_norm


def _evaluate_generator(f: LipschitzDriver, t: float, u: Field, grad_u: Field) -> np.ndarray:
    return f(t, u.grid.coordinates(), u.values, grad_u.values)


def picard_map(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    propagated_terminal: TimeField,
    spec: CutoffSpec = CutoffSpec(),
    tail_norm: Optional[SobolevIndex] = None,
) -> TimeField:
    """u -> P(T-t) Phi - int_t^T P(r-t) l_u(r) dr with l_u = -(grad u* b) - f(., u, grad u)"""
    forcing = []
    for k, t in enumerate(u.times):
        field = u.at(k)
        grad_u = gradient(field)
        value = -contract_gradient(grad_u, b.at(k), spec, tail_norm).values
        if not f.is_zero:
            value = value - _evaluate_generator(f, float(t), field, grad_u)
        forcing.append(value)
    l = TimeField(u.grid, u.horizon, np.stack(forcing))
    return propagated_terminal - duhamel_all(l)


def fixed_point_residual(
    u: TimeField,
    b: TimeField,
    f: LipschitzDriver,
    terminal: Field,
    index: SobolevIndex,
    spec: CutoffSpec = CutoffSpec(),
    tail_norm: Optional[SobolevIndex] = None,
) -> float:
    """Plain sup-in-time norm of u minus its Picard image; a tail norm checks the truncated drift products"""
    propagated = terminal_propagation(terminal, u.horizon, u.steps)
    return rho_norm(u - picard_map(u, b, f, propagated, spec, tail_norm), 0.0, index)


def solve_semilinear_u(
    b: Union[TimeField, CertifiedDriver],
    f: LipschitzDriver,
    terminal: Field,
    param: Union[ParamSet, Mapping],
    tol: float = 1e-8,
    max_iter: int = 100,
    initial: Union[Literal["terminal", "zero"], TimeField] = "terminal",
    spec: CutoffSpec = CutoffSpec(),
) -> Tuple[TimeField, SolveReport]:
    """Picard iteration u^{k+1} = P(T-t) Phi - duhamel(l_k).

    Stops once both the rho-weighted increment (weight e^{-rho (T-t)}) and the plain
    sup-in-time increment in H^{1+delta}_p fall below tol. The residual of the converged
    iterate forms grad u* b at every truncation level, so a growing Cauchy tail in
    H^{-beta}_p raises ProductDivergenceError.
    """
    param = resolve_params(param)
    started = time.perf_counter()
    b_field, b_norm = _driver_field(b, param)
    if b_field.grid != terminal.grid:
        raise ValueError("drift and terminal condition live on different grids")
    index = param.solution_index
    horizon, steps = b_field.horizon, b_field.steps
    c_emp = b_norm + f.lipschitz
    rho = contraction_rho(param, c_emp) if c_emp > 0 else 1.0
    predicted = contraction_factor(param, c_emp, rho)

    if terminal.is_zero() and b_field.is_zero() and f.is_zero:
        logger.info("✅ zero data: solution is identically zero")
        zero = TimeField.zeros(terminal.grid, horizon, steps, terminal.channels)
        return zero, SolveReport(
            iterations=0, increments=[], plain_increments=[], contraction_factor=0.0,
            predicted_factor=predicted, rho=rho, c_emp=c_emp, residual=0.0, sup_norm=0.0,
            holder_norm=0.0, wall_time=time.perf_counter() - started,
        )

    propagated = terminal_propagation(terminal, horizon, steps)
    if isinstance(initial, TimeField):
        u = initial
    elif initial == "zero":
        u = TimeField.zeros(terminal.grid, horizon, steps, terminal.channels)
    else:
        u = propagated
    scale = max(rho_norm(propagated, 0.0, index), 1.0)

    weighted: List[float] = []
    plain: List[float] = []
    factors: List[float] = []
    streak = 0
    for iteration in range(1, max_iter + 1):
        updated = picard_map(u, b_field, f, propagated, spec)
        diff = updated - u
        weighted.append(rho_norm(diff.reversed(), rho, index))
        plain.append(rho_norm(diff, 0.0, index))
        u = updated
        logger.debug(f"Picard iteration {iteration}: weighted={weighted[-1]:.3e}, plain={plain[-1]:.3e}")

        if len(plain) >= 2 and plain[-2] > NOISE_FLOOR * scale:
            factor = plain[-1] / plain[-2]
            factors.append(factor)
            streak = streak + 1 if factor >= 1.0 else 0
            if streak >= NON_CONTRACTION_STREAK:
                logger.error(f"❌ Picard map not contracting, factor {factor:.4g}")
                raise NonContractionError(factor, iteration)

        if weighted[-1] < tol and plain[-1] < tol:
            break
    else:
        raise ConvergenceError(f"Picard iteration did not reach tol={tol} in {max_iter} iterations", plain[-1])

    residual = fixed_point_residual(u, b_field, f, terminal, index, spec, param.forcing_index)
    sup = rho_norm(u, 0.0, index)
    holder = max(holder_norm(snap, "1+alpha", param.alpha) for snap in u.fields())
    wall = time.perf_counter() - started
    logger.info(f"✅ Picard converged in {iteration} iteration(s), residual {residual:.2e}, {wall:.2f}s")
    return u, SolveReport(
        iterations=iteration,
        increments=weighted,
        plain_increments=plain,
        contraction_factor=max(factors) if factors else 0.0,
        predicted_factor=predicted,
        rho=rho,
        c_emp=c_emp,
        residual=residual,
        sup_norm=sup,
        holder_norm=holder,
        wall_time=wall,
    )
