"""
Explicit method-of-lines oracle for d_t u + 1/2 u'' + u' b + f(t, x, u, u') = 0 in d = 1.

Fourth-order periodic differences in space, classical RK4 backward from u(T) = Phi, with
b interpolated linearly in time between the nodes of its TimeField.
"""
from __future__ import annotations

import math

import numpy as np

from app.pde.parameters import LipschitzDriver, zero_generator
from app.spectral.field import Field, TimeField
from app.utils.logger import logger

RK4_STABILITY = 2.5


def _first(v: np.ndarray, dx: float) -> np.ndarray:
    return (8.0 * (np.roll(v, -1, -1) - np.roll(v, 1, -1)) - (np.roll(v, -2, -1) - np.roll(v, 2, -1))) / (12.0 * dx)


def _second(v: np.ndarray, dx: float) -> np.ndarray:
    return (
        16.0 * (np.roll(v, -1, -1) + np.roll(v, 1, -1)) - (np.roll(v, -2, -1) + np.roll(v, 2, -1)) - 30.0 * v
    ) / (12.0 * dx ** 2)


def solve_reference_fd(
    b: TimeField,
    terminal: Field,
    f: LipschitzDriver = zero_generator(),
    substeps: int | None = None,
) -> TimeField:
    """u on the node grid of b, integrated in tau = T - t"""
    grid = b.grid
    if grid.d != 1:
        raise ValueError("the finite-difference oracle is implemented for d = 1")
    if terminal.grid != grid:
        raise ValueError("drift and terminal condition live on different grids")
    dx, dt = grid.dx, b.dt
    coords = grid.coordinates()
    drift = b.snapshots[:, 0]
    if substeps is None:
        spectral_radius = 0.5 * 16.0 / (3.0 * dx ** 2) + np.max(np.abs(drift)) * 1.5 / dx
        substeps = max(1, math.ceil(dt * spectral_radius / RK4_STABILITY))
    h = dt / substeps

    def rate(tau: float, v: np.ndarray) -> np.ndarray:
        t = b.horizon - tau
        position = min(max(t / dt, 0.0), b.steps)
        k = min(int(position), b.steps - 1)
        w = position - k
        bt = (1.0 - w) * drift[k] + w * drift[k + 1]
        vx = _first(v, dx)
        out = 0.5 * _second(v, dx) + vx * bt
        if not f.is_zero:
            out = out + f(t, coords, v, vx)
        return out

    v = terminal.values.copy()
    snaps = [v.copy()]
    tau = 0.0
    for _ in range(b.steps):
        for _ in range(substeps):
            k1 = rate(tau, v)
            k2 = rate(tau + 0.5 * h, v + 0.5 * h * k1)
            k3 = rate(tau + 0.5 * h, v + 0.5 * h * k2)
            k4 = rate(tau + h, v + h * k3)
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h
        snaps.append(v.copy())
    logger.debug(f"finite-difference oracle: {b.steps} nodes x {substeps} RK4 substeps")
    return TimeField(grid, b.horizon, np.stack(snaps[::-1]))
