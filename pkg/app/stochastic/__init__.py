"""Stochastic module - Brownian ensembles, occupation operators and BSDE verification"""
from app.stochastic.bsde import BSDESolution, assemble_solution, feynman_kac_estimate, martingale_test
from app.stochastic.occupation import PathFunctional, a_ww_rough, a_ww_smooth, a_wy, covariation
from app.stochastic.paths import PathEnsemble, sample_ensemble

__all__ = [
    "BSDESolution",
    "assemble_solution",
    "feynman_kac_estimate",
    "martingale_test",
    "PathFunctional",
    "a_ww_rough",
    "a_ww_smooth",
    "a_wy",
    "covariation",
    "PathEnsemble",
    "sample_ensemble",
]
