"""Triangle-mesh kernel: loading, normalization, distance/containment
queries, convex hulls, surface sampling."""

from .hull import convex_hull3, inflate_hull
from .mesh import SurfaceSamples, TriMesh, normalize_to_unit_sphere
from .meshio import load_mesh, save_obj

__all__ = [
    "SurfaceSamples",
    "TriMesh",
    "convex_hull3",
    "inflate_hull",
    "load_mesh",
    "normalize_to_unit_sphere",
    "save_obj",
]
