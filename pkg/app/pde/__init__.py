"""PDE module - parameter region, mild solutions and the finite-difference oracle"""
from app.pde.mild import SolveReport, duhamel, solve_linear_phi, solve_semilinear_u
from app.pde.parameters import LipschitzDriver, ParamSet, contraction_rho, make_generator, validate_params
from app.pde.reference import solve_reference_fd

__all__ = [
    "SolveReport",
    "duhamel",
    "solve_linear_phi",
    "solve_semilinear_u",
    "LipschitzDriver",
    "ParamSet",
    "contraction_rho",
    "make_generator",
    "validate_params",
    "solve_reference_fd",
]
