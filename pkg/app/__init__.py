"""Numerical laboratory for BSDEs with distributional drivers"""
__version__ = "1.0.0"
