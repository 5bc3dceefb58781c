"""Exception hierarchy shared by the numerical modules and the CLI"""
from typing import Optional


class LabError(Exception):
    """Base class for every failure the laboratory reports on purpose"""

    exit_code = 3


class ConfigError(LabError):
    """Experiment config missing, unparsable or inconsistent"""

    exit_code = 2


class ParameterRejection(LabError):
    """A parameter tuple lies outside the admissible region.

    `code` is machine-readable, `reason` is the violated inequality in words.
    """

    exit_code = 2

    def __init__(self, code: str, reason: str):
        super().__init__(f"{code}: {reason}")
        self.code = code
        self.reason = reason


class NumericalError(LabError):
    """A numerical contract was violated"""


class NonFiniteFieldError(NumericalError):
    pass


class NonContractionError(NumericalError):
    def __init__(self, factor: float, iteration: int):
        super().__init__(
            f"Picard map is not contracting: measured factor {factor:.4g} at iteration {iteration}"
        )
        self.factor = factor
        self.iteration = iteration


class ConvergenceError(NumericalError):
    def __init__(self, message: str, last_increment: Optional[float] = None):
        super().__init__(message)
        self.last_increment = last_increment


class ProductDivergenceError(NumericalError):
    def __init__(self, tail: list):
        super().__init__(f"Pointwise product tail increments grow: {tail}")
        self.tail = tail


class PathExitError(NumericalError):
    def __init__(self, exited_paths: int, first_exit_time: float, bound: float):
        super().__init__(
            f"{exited_paths} path(s) left the box [-{bound}, {bound}], first exit at t={first_exit_time:.4g}"
        )
        self.exited_paths = exited_paths
        self.first_exit_time = first_exit_time
        self.bound = bound


class InadmissibleDriverError(NumericalError):
    pass


class RhoSearchError(NumericalError):
    pass
