"""
Periodic grid, sampled fields and time-indexed fields.

A Field stores `values` with shape (channels, n, ..., n): channel 0 is the
first component, spatial axes follow in `ij` order. Matrix-valued fields
(gradients of vector fields) flatten (i, j) to channel i * m + j.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator
from scipy import fft as sfft

from app.utils.config import config
from app.utils.errors import NonFiniteFieldError


class GridSpec(BaseModel):
    """Uniform periodic grid on the box [-L, L)^d"""

    model_config = ConfigDict(frozen=True)

    d: int = PydanticField(1, description="Spatial dimension")
    n: int = PydanticField(512, description="Points per axis")
    half_width: float = PydanticField(10.0, gt=0, description="Half-width L of the box")

    @field_validator("d")
    @classmethod
    def _check_dimension(cls, v: int) -> int:
        if v not in (1, 2):
            raise ValueError("d must be 1 or 2")
        return v

    @field_validator("n")
    @classmethod
    def _check_points(cls, v: int) -> int:
        if v < 8 or v & (v - 1):
            raise ValueError("n must be a power of two and at least 8")
        return v

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.d

    @property
    def axes(self) -> Tuple[int, ...]:
        """Spatial axes of any array whose trailing dimensions are the grid"""
        return tuple(range(-self.d, 0))

    def axis(self) -> np.ndarray:
        return _axis(self.n, self.half_width)

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (d, n, ..., n)"""
        return _coordinates(self.d, self.n, self.half_width)

    def frequencies(self) -> np.ndarray:
        """Angular frequencies xi_k = pi k / L in FFT order"""
        return _frequencies(self.n, self.half_width)

    def wave_vectors(self) -> np.ndarray:
        """Frequency lattice, shape (d, n, ..., n)"""
        return _wave_vectors(self.d, self.n, self.half_width)

    def xi_squared(self) -> np.ndarray:
        return _xi_squared(self.d, self.n, self.half_width)

    @property
    def max_frequency(self) -> float:
        return float(np.sqrt(self.d) * np.pi * (self.n // 2) / self.half_width)

    def refined(self, n: int) -> "GridSpec":
        return GridSpec(d=self.d, n=n, half_width=self.half_width)


@lru_cache(maxsize=32)
def _axis(n: int, half_width: float) -> np.ndarray:
    x = -half_width + (2.0 * half_width / n) * np.arange(n)
    x.setflags(write=False)
    return x


@lru_cache(maxsize=32)
def _coordinates(d: int, n: int, half_width: float) -> np.ndarray:
    x = _axis(n, half_width)
    mesh = np.stack(np.meshgrid(*([x] * d), indexing="ij"))
    mesh.setflags(write=False)
    return mesh


@lru_cache(maxsize=32)
def _frequencies(n: int, half_width: float) -> np.ndarray:
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * half_width / n)
    xi.setflags(write=False)
    return xi


@lru_cache(maxsize=32)
def _wave_vectors(d: int, n: int, half_width: float) -> np.ndarray:
    xi = _frequencies(n, half_width)
    mesh = np.stack(np.meshgrid(*([xi] * d), indexing="ij"))
    mesh.setflags(write=False)
    return mesh


@lru_cache(maxsize=32)
def _xi_squared(d: int, n: int, half_width: float) -> np.ndarray:
    sq = np.sum(_wave_vectors(d, n, half_width) ** 2, axis=0)
    sq.setflags(write=False)
    return sq


class SobolevIndex(BaseModel):
    """Smoothness s and integrability r of H^s_r"""

    model_config = ConfigDict(frozen=True)

    s: float
    r: float = PydanticField(2.0, gt=1.0)


def forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return sfft.fftn(values, axes=grid.axes, workers=config.max_workers)


def inverse(coefficients: np.ndarray, grid: GridSpec) -> np.ndarray:
    return sfft.ifftn(coefficients, axes=grid.axes, workers=config.max_workers).real


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Field:
    """Real samples of a scalar, vector or matrix function on a periodic grid"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape == self.grid.shape:
            values = values[np.newaxis]
        if values.ndim != self.grid.d + 1 or values.shape[1:] != self.grid.shape:
            raise ValueError(f"values of shape {values.shape} do not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("field contains NaN or Inf samples")
        object.__setattr__(self, "values", _frozen(values))

    # --- constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, grid: GridSpec, channels: int = 1) -> "Field":
        return cls(grid, np.zeros((channels,) + grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float, channels: int = 1) -> "Field":
        return cls(grid, np.full((channels,) + grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """fn receives coordinates of shape (d, n, ..., n)"""
        return cls(grid, np.asarray(fn(grid.coordinates()), dtype=np.float64))

    @classmethod
    def stack(cls, fields: Sequence["Field"]) -> "Field":
        grid = fields[0].grid
        return cls(grid, np.concatenate([f.values for f in fields], axis=0))

    # --- accessors ----------------------------------------------------------
    @property
    def channels(self) -> int:
        return self.values.shape[0]

    def component(self, i: int) -> "Field":
        return Field(self.grid, self.values[i : i + 1])

    def sup_norm(self) -> float:
        return float(np.max(np.sqrt(np.sum(self.values ** 2, axis=0))))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    # --- arithmetic ---------------------------------------------------------
    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def multiply(self, weight: "Field") -> "Field":
        """Sample-wise product with a scalar field"""
        self._check(weight)
        return Field(self.grid, self.values * weight.values[0])


@dataclass(frozen=True)
class TimeField:
    """One Field per node t_k = k T / M of a uniform time grid"""

    grid: GridSpec
    horizon: float
    snapshots: np.ndarray

    def __post_init__(self):
        snaps = np.asarray(self.snapshots, dtype=np.float64)
        if snaps.ndim == self.grid.d + 1:
            snaps = snaps[:, np.newaxis]
        if snaps.ndim != self.grid.d + 2 or snaps.shape[2:] != self.grid.shape:
            raise ValueError(f"snapshots of shape {snaps.shape} do not fit grid {self.grid.shape}")
        if snaps.shape[0] < 2:
            raise ValueError("a time field needs at least two nodes")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not np.all(np.isfinite(snaps)):
            raise NonFiniteFieldError("time field contains NaN or Inf samples")
        object.__setattr__(self, "snapshots", _frozen(snaps))

    @classmethod
    def from_fields(cls, fields: Iterable[Field], horizon: float) -> "TimeField":
        fields = list(fields)
        return cls(fields[0].grid, horizon, np.stack([f.values for f in fields]))

    @classmethod
    def constant_in_time(cls, field: Field, horizon: float, steps: int) -> "TimeField":
        snaps = np.broadcast_to(field.values, (steps + 1,) + field.values.shape)
        return cls(field.grid, horizon, snaps)

    @classmethod
    def zeros(cls, grid: GridSpec, horizon: float, steps: int, channels: int = 1) -> "TimeField":
        return cls(grid, horizon, np.zeros((steps + 1, channels) + grid.shape))

    @classmethod
    def from_function(
        cls,
        grid: GridSpec,
        horizon: float,
        steps: int,
        fn: Callable[[float, np.ndarray], np.ndarray],
    ) -> "TimeField":
        """fn(t, coordinates) returns the snapshot at time t"""
        coords = grid.coordinates()
        times = horizon * np.arange(steps + 1) / steps
        return cls(grid, horizon, np.stack([np.asarray(fn(t, coords), dtype=np.float64) for t in times]))

    @property
    def steps(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.horizon * np.arange(self.steps + 1) / self.steps

    @property
    def channels(self) -> int:
        return self.snapshots.shape[1]

    def at(self, k: int) -> Field:
        return Field(self.grid, self.snapshots[k])

    def fields(self) -> List[Field]:
        return [self.at(k) for k in range(self.steps + 1)]

    def map(self, fn: Callable[[Field], Field]) -> "TimeField":
        return TimeField.from_fields((fn(f) for f in self.fields()), self.horizon)

    def reversed(self) -> "TimeField":
        """s -> u(T - s)"""
        return TimeField(self.grid, self.horizon, self.snapshots[::-1])

    def is_zero(self) -> bool:
        return not np.any(self.snapshots)

    def sup_norm(self) -> float:
        return float(np.max(np.sqrt(np.sum(self.snapshots ** 2, axis=1))))

    def _check(self, other: "TimeField") -> None:
        if other.grid != self.grid or other.snapshots.shape != self.snapshots.shape:
            raise ValueError("time fields are not conformable")

    def __add__(self, other: "TimeField") -> "TimeField":
        self._check(other)
        return TimeField(self.grid, self.horizon, self.snapshots + other.snapshots)

    def __sub__(self, other: "TimeField") -> "TimeField":
        self._check(other)
        return TimeField(self.grid, self.horizon, self.snapshots - other.snapshots)

    def __mul__(self, scalar: float) -> "TimeField":
        return TimeField(self.grid, self.horizon, self.snapshots * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "TimeField":
        return TimeField(self.grid, self.horizon, -self.snapshots)


# --- test-function helpers -------------------------------------------------

def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1"""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def smooth_taper(grid: GridSpec, plateau: float | None = None, width: float | None = None) -> Field:
    """Product over axes of a C-infinity cutoff: 1 on |x_i| <= plateau, 0 past plateau + width"""
    plateau = 0.6 * grid.half_width if plateau is None else plateau
    width = 0.3 * grid.half_width if width is None else width
    coords = grid.coordinates()
    taper = np.ones(grid.shape)
    for i in range(grid.d):
        taper = taper * (1.0 - _smooth_step((np.abs(coords[i]) - plateau) / width))
    return Field(grid, taper)


def gaussian_bump(grid: GridSpec, width: float = 1.0, center: Sequence[float] | None = None, amplitude: float = 1.0) -> Field:
    center = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
    coords = grid.coordinates()
    r2 = sum((coords[i] - center[i]) ** 2 for i in range(grid.d))
    return Field(grid, amplitude * np.exp(-r2 / (2.0 * width ** 2)))


def cosine_mode(grid: GridSpec, k: int, axis: int = 0, amplitude: float = 1.0, sine: bool = False) -> Field:
    """amplitude * cos(xi_k x_axis) with xi_k = pi k / L"""
    xi = np.pi * k / grid.half_width
    x = grid.coordinates()[axis]
    wave = np.sin(xi * x) if sine else np.cos(xi * x)
    return Field(grid, amplitude * wave)


def spectral_resample(field: Field, n: int) -> Field:
    """Band-limited transfer of `field` to a grid with n points per axis"""
    src = field.grid
    dst = src.refined(n)
    coeffs = forward(field.values, src)
    keep = min(src.n, n) // 2
    out = np.zeros((field.channels,) + dst.shape, dtype=complex)
    index_src = np.r_[0:keep, src.n - keep + 1 : src.n]
    index_dst = np.r_[0:keep, n - keep + 1 : n]
    src_slices = np.ix_(*([np.arange(field.channels)] + [index_src] * src.d))
    dst_slices = np.ix_(*([np.arange(field.channels)] + [index_dst] * src.d))
    out[dst_slices] = coeffs[src_slices]
    out *= (n / src.n) ** src.d
    return Field(dst, inverse(out, dst))
