"""Hyperbolic Dehn filling: gluing equations, shape solving and developing maps."""

from .triangulation import IdealTriangulation, load_triangulation, parse_triangulation

__version__ = "0.1.0"

__all__ = ["IdealTriangulation", "load_triangulation", "parse_triangulation", "__version__"]
