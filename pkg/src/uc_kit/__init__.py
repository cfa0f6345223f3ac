"""Uniform convexity and smoothness toolkit: moduli, duality transfers, certificates and solvers."""

from .geometry import LpBall, Ellipsoid, ScaledBody, gauge, support, lmo, polar, INF

__version__ = "0.1.0"
__all__ = ["LpBall", "Ellipsoid", "ScaledBody", "gauge", "support", "lmo", "polar", "INF"]
