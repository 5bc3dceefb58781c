"""
Brownian ensembles with one reproducible random stream per path, and evaluation
of grid fields along paths.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional

import numpy as np
from scipy import ndimage

from app.spectral.field import Field, GridSpec, TimeField
from app.utils.config import config
from app.utils.errors import PathExitError
from app.utils.logger import logger

BOX_MARGIN = 1.0


@dataclass(frozen=True)
class BrownianPath:
    """One trajectory: W_0 = 0 and increments of shape (M, d)"""

    increments: np.ndarray
    horizon: float
    stream: int = 0

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def positions(self) -> np.ndarray:
        d = self.increments.shape[1]
        return np.concatenate([np.zeros((1, d)), np.cumsum(self.increments, axis=0)])


@dataclass(frozen=True)
class PathEnsemble:
    """increments[p, k] = W_{t_{k+1}} - W_{t_k} for path p; shape (P, M, d)"""

    increments: np.ndarray
    horizon: float
    seed: Optional[int] = None

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.ndim != 3:
            raise ValueError(f"increments must have shape (paths, steps, d), got {inc.shape}")
        inc = inc.copy()
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    @property
    def paths(self) -> int:
        return self.increments.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @property
    def d(self) -> int:
        return self.increments.shape[2]

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.horizon * np.arange(self.steps + 1) / self.steps

    @cached_property
    def positions(self) -> np.ndarray:
        """W at every node, shape (P, M + 1, d), W_0 = 0"""
        zeros = np.zeros((self.paths, 1, self.d))
        pos = np.concatenate([zeros, np.cumsum(self.increments, axis=1)], axis=1)
        pos.setflags(write=False)
        return pos

    def path(self, i: int) -> BrownianPath:
        return BrownianPath(self.increments[i], self.horizon, i)

    def coarsen(self, factor: int) -> "PathEnsemble":
        """The same trajectories observed every `factor` steps"""
        if factor < 1 or self.steps % factor:
            raise ValueError(f"cannot coarsen {self.steps} steps by {factor}")
        blocks = self.increments.reshape(self.paths, self.steps // factor, factor, self.d)
        return PathEnsemble(blocks.sum(axis=2), self.horizon, self.seed)

    def subset(self, count: int) -> "PathEnsemble":
        return PathEnsemble(self.increments[:count], self.horizon, self.seed)

    def shifted(self, start: int, origin: np.ndarray) -> np.ndarray:
        """origin + W_t - W_{t_start} for t >= t_start, origin before; shape (P, M + 1, d)"""
        pos = self.positions
        out = np.broadcast_to(np.asarray(origin, dtype=float), pos.shape).copy()
        out[:, start:] += pos[:, start:] - pos[:, start : start + 1]
        return out


def _draw(children: List[np.random.SeedSequence], steps: int, d: int, scale: float) -> np.ndarray:
    return np.stack([np.random.Generator(np.random.PCG64(c)).standard_normal((steps, d)) * scale for c in children])


def sample_ensemble(paths: int, steps: int, horizon: float, d: int = 1, seed: Optional[int] = None) -> PathEnsemble:
    """Per-path PCG64 streams spawned from one SeedSequence; the result does not depend on the worker count"""
    if paths < 1 or steps < 1:
        raise ValueError("need at least one path and one step")
    seed = config.default_seed if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(paths)
    scale = np.sqrt(horizon / steps)
    workers = min(config.max_workers, max(1, paths // 256))
    if workers == 1:
        increments = _draw(children, steps, d, scale)
    else:
        chunks = np.array_split(np.arange(paths), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: _draw([children[i] for i in idx], steps, d, scale), chunks))
        increments = np.concatenate(parts, axis=0)
    logger.debug(f"sampled {paths} paths x {steps} steps (d={d}, seed={seed})")
    return PathEnsemble(increments, horizon, seed)


# --- evaluation along paths ---------------------------------------------------

def check_box(positions: np.ndarray, grid: GridSpec, times: np.ndarray) -> None:
    """Raise PathExitError when any path leaves [-L + 1, L - 1]^d"""
    bound = grid.half_width - BOX_MARGIN
    outside = np.any(np.abs(positions) > bound, axis=-1)
    if outside.any():
        exited = int(outside.any(axis=1).sum())
        first = float(times[int(np.argmax(outside.any(axis=0)))])
        logger.error(f"❌ {exited} path(s) left the computational box")
        raise PathExitError(exited, first, bound)


def interpolate(field: Field, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of every channel at points (P, d); returns (channels, P)"""
    grid = field.grid
    coords = ((points + grid.half_width) / grid.dx).T
    return np.stack(
        [ndimage.map_coordinates(channel, coords, order=1, mode="grid-wrap") for channel in field.values]
    )


def evaluate_along(u: TimeField, positions: np.ndarray, times: Optional[np.ndarray] = None) -> np.ndarray:
    """u(t_k, X_k) for positions (P, M + 1, d) on the time grid of u; returns (P, M + 1, channels)"""
    if positions.shape[1] != u.steps + 1:
        raise ValueError(f"paths have {positions.shape[1] - 1} steps, the field has {u.steps}")
    check_box(positions, u.grid, u.times if times is None else times)
    out = np.empty((positions.shape[0], u.steps + 1, u.channels))
    for k in range(u.steps + 1):
        out[:, k, :] = interpolate(u.at(k), positions[:, k, :]).T
    return out
