"""Approximation module - Haar projector, mollifiers and drift generators"""
from app.approx.drivers import CertifiedDriver, RoughDriverSpec, certify_driver, make_driver
from app.approx.haar import HAAR_GRID, density_approximant, haar_project, mollify_project

__all__ = [
    "CertifiedDriver",
    "RoughDriverSpec",
    "certify_driver",
    "make_driver",
    "HAAR_GRID",
    "density_approximant",
    "haar_project",
    "mollify_project",
]
