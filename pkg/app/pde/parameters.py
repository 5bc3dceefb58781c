"""
Admissible parameter region K(beta, q), Lipschitz generators and rho-weighted norms.

d = 1:   q in (2, 1/beta),          beta < delta < 1 - beta,  1/delta < p < q,  p >= 2
d >= 2:  q in (d/(1-beta), d/beta), beta < delta < 1 - beta,  d/delta < p < q
and 0 < gamma < (1 - delta - beta)/2 for the terminal condition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, model_validator

from app.spectral.field import SobolevIndex, TimeField
from app.spectral.operators import sobolev_norm
from app.utils.errors import ParameterRejection, RhoSearchError
from app.utils.logger import logger

MARGIN = 1e-9
RHO_MAX = 1e9
RHO_GRID = tuple(2.0 ** k for k in range(30)) + (RHO_MAX,)
TARGET_FACTOR = 0.5


def _inside(x: float, low: float, high: float) -> bool:
    return low + MARGIN < x < high - MARGIN


class ParamSet(BaseModel):
    """(beta, q, delta, p, d, gamma, T); alpha = delta - d/p is derived"""

    model_config = ConfigDict(frozen=True)

    beta: float
    q: float
    delta: float
    p: float
    d: int = 1
    gamma: float = PydanticField(None, description="Terminal smoothness margin; default (1-delta-beta)/4")
    T: float = PydanticField(1.0, description="Horizon")

    @model_validator(mode="before")
    @classmethod
    def _default_gamma(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("gamma") is None and "delta" in data and "beta" in data:
            data = dict(data)
            data["gamma"] = 0.25 * (1.0 - float(data["delta"]) - float(data["beta"]))
        return data

    @model_validator(mode="after")
    def _check_region(self) -> "ParamSet":
        check_region(self.beta, self.q, self.delta, self.p, self.d, self.gamma, self.T)
        return self

    @property
    def alpha(self) -> float:
        return self.delta - self.d / self.p

    @property
    def drift_index(self) -> SobolevIndex:
        return SobolevIndex(s=-self.beta, r=self.q)

    @property
    def forcing_index(self) -> SobolevIndex:
        return SobolevIndex(s=-self.beta, r=self.p)

    @property
    def solution_index(self) -> SobolevIndex:
        return SobolevIndex(s=1.0 + self.delta, r=self.p)

    @property
    def terminal_index(self) -> SobolevIndex:
        """H^{1+delta+2gamma}_p, the class declared for the terminal condition"""
        return SobolevIndex(s=1.0 + self.delta + 2.0 * self.gamma, r=self.p)

    @property
    def contraction_exponents(self) -> Tuple[float, float]:
        return 0.5 * (self.delta - 1.0), 0.5 * (self.delta + self.beta - 1.0)


def check_region(beta: float, q: float, delta: float, p: float, d: int, gamma: float, T: float) -> None:
    """Raise ParameterRejection naming the first violated inequality"""
    if d < 1:
        raise ParameterRejection("dimension", "d < 1")
    if not _inside(beta, 0.0, 0.5):
        raise ParameterRejection("beta_range", "β ∉ (0, 1/2)")
    if d == 1:
        if not _inside(q, 2.0, 1.0 / beta):
            raise ParameterRejection("q_range", "q ∉ (2, 1/β)")
    elif not _inside(q, d / (1.0 - beta), d / beta):
        raise ParameterRejection("q_range", "q ∉ (d/(1-β), d/β)")
    if not _inside(delta, beta, 1.0 - beta):
        raise ParameterRejection("delta_range", "δ ∉ (β, 1-β)")
    if not _inside(p, d / delta, q):
        raise ParameterRejection("p_range", "p ∉ (d/δ, q)")
    if d == 1 and p < 2.0:
        raise ParameterRejection("p_min", "p < 2")
    if not _inside(gamma, 0.0, 0.5 * (1.0 - delta - beta)):
        raise ParameterRejection("gamma_range", "γ ∉ (0, (1-δ-β)/2)")
    if T <= 0:
        raise ParameterRejection("horizon", "T ≤ 0")


def validate_params(candidate: Mapping[str, Any]) -> ParamSet:
    """ParamSet from a mapping, or ParameterRejection with the violated inequality"""
    param = ParamSet(**dict(candidate))
    logger.debug(f"accepted parameters {param.model_dump()}")
    return param


def resolve_params(param: Union[ParamSet, Mapping[str, Any], None]) -> Optional[ParamSet]:
    """A mapping is validated into a ParamSet; a ParamSet or None passes through"""
    if param is None or isinstance(param, ParamSet):
        return param
    return validate_params(param)


# --- region sampling ----------------------------------------------------------

def _delta_window(beta: float, q: float, d: int) -> Tuple[float, float]:
    return max(beta, d / q), 1.0 - beta


def _p_window(delta: float, q: float, d: int) -> Tuple[float, float]:
    low = d / delta
    if d == 1:
        low = max(low, 2.0)
    return low, q


def interior_sample(beta: float, q: float, d: int, count: int, seed: int = 0, inset: float = 0.01) -> List[Dict[str, float]]:
    """Points (beta, q, delta, p, d) strictly inside K(beta, q), kept `inset` away from every edge"""
    rng = np.random.default_rng(seed)
    lo, hi = _delta_window(beta, q, d)
    if lo >= hi:
        raise ValueError(f"K(beta={beta}, q={q}) is empty in dimension {d}")
    points = []
    for _ in range(count):
        delta = lo + (hi - lo) * rng.uniform(inset, 1.0 - inset)
        p_lo, p_hi = _p_window(delta, q, d)
        p = p_lo + (p_hi - p_lo) * rng.uniform(inset, 1.0 - inset)
        points.append({"beta": beta, "q": q, "delta": delta, "p": p, "d": d})
    return points


def exterior_sample(beta: float, q: float, d: int, count: int, seed: int = 0, inset: float = 0.01) -> List[Dict[str, float]]:
    """Points that violate exactly one of the delta/p inequalities, cycling through them"""
    rng = np.random.default_rng(seed)
    lo, hi = _delta_window(beta, q, d)
    points = []
    for i in range(count):
        case = i % 4
        u = rng.uniform(inset, 1.0 - inset)
        if case == 0:
            delta = beta * u
            p = 2.0 + (q - 2.0) * rng.uniform()
        elif case == 1:
            delta = 1.0 - beta + beta * u
            p = 2.0 + (q - 2.0) * rng.uniform()
        else:
            delta = lo + (hi - lo) * rng.uniform(inset, 1.0 - inset)
            if case == 2:
                p = 1.0 + (d / delta - 1.0) * u
            else:
                p = q * (1.0 + u)
        points.append({"beta": beta, "q": q, "delta": delta, "p": p, "d": d})
    return points


# --- Lipschitz generators -----------------------------------------------------

GeneratorFn = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LipschitzDriver:
    """f(t, x, y, z) with channel-first arrays: x (d, ...), y (m, ...), z (d*m, ...) -> (m, ...)

    z uses the gradient layout z[i*m + j] = d_i u_j.
    """

    name: str
    fn: GeneratorFn
    lipschitz: float
    bound_at_zero: float = 0.0

    def __call__(self, t: float, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, x, y, z), dtype=np.float64)

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def check(self, d: int, m: int = 1, samples: int = 1000, seed: int = 0, scale: float = 3.0) -> float:
        """Largest |f(y,z) - f(y',z')| / (L (|y-y'| + |z-z'|)) on random tuples; <= 1 when the invariant holds"""
        rng = np.random.default_rng(seed)
        t = 0.0
        x = rng.uniform(-scale, scale, (d, samples))
        y1, y2 = rng.normal(0.0, scale, (2, m, samples))
        z1, z2 = rng.normal(0.0, scale, (2, d * m, samples))
        lhs = np.linalg.norm(self(t, x, y1, z1) - self(t, x, y2, z2), axis=0)
        rhs = np.linalg.norm(y1 - y2, axis=0) + np.linalg.norm(z1 - z2, axis=0)
        if self.lipschitz == 0.0:
            return float(np.max(lhs))
        return float(np.max(lhs / (self.lipschitz * rhs)))


def zero_generator() -> LipschitzDriver:
    return LipschitzDriver("zero", lambda t, x, y, z: np.zeros_like(y), 0.0, 0.0)


def linear_in_y(c: float) -> LipschitzDriver:
    return LipschitzDriver("linear_in_y", lambda t, x, y, z: c * y, abs(c), 0.0)


def saturating_in_z(c: float, d: int = 1) -> LipschitzDriver:
    """f_j = c tanh(sum_i z_{i,j}); Lipschitz with |c| sqrt(d)"""

    def fn(t, x, y, z):
        m = y.shape[0]
        summed = z.reshape((d, m) + z.shape[1:]).sum(axis=0)
        return c * np.tanh(summed)

    return LipschitzDriver("saturating_in_z", fn, abs(c) * np.sqrt(d), 0.0)


def make_generator(name: str, constant: float = 0.0, d: int = 1) -> LipschitzDriver:
    if name == "zero":
        return zero_generator()
    if name == "linear_in_y":
        return linear_in_y(constant)
    if name == "saturating_in_z":
        return saturating_in_z(constant, d)
    raise ValueError(f"unknown generator {name!r}")


# --- rho-weighted norms -------------------------------------------------------

def rho_norm(u: TimeField, rho: float, index: SobolevIndex) -> float:
    """max_k e^{-rho t_k} ||u(t_k)||_{H^s_r}; rho = 0 is the plain sup-in-time norm"""
    if rho != 0 and rho < 1:
        raise ValueError(f"rho must be 0 or at least 1, got {rho}")
    norms = np.array([sobolev_norm(f, index) for f in u.fields()])
    return float(np.max(np.exp(-rho * u.times) * norms))


def contraction_factor(param: ParamSet, c: float, rho: float) -> float:
    """c (rho^{(delta-1)/2} + rho^{(delta+beta-1)/2})"""
    a, b = param.contraction_exponents
    return c * (rho ** a + rho ** b)


def contraction_rho(param: ParamSet, c_emp: float) -> float:
    """Smallest rho on the dyadic grid 1, 2, ..., 2^29 capped by 1e9 whose contraction factor is at most 1/2"""
    if c_emp <= 0:
        raise ValueError(f"empirical constant must be positive, got {c_emp}")
    for rho in RHO_GRID:
        if contraction_factor(param, c_emp, rho) <= TARGET_FACTOR:
            return rho
    raise RhoSearchError(f"no rho <= {RHO_MAX:.0e} brings the factor for c={c_emp:.4g} below {TARGET_FACTOR}")
