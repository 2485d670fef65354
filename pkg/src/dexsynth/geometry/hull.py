"""Convex hulls and the radially inflated hull used for grasp initialization."""

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import MeshError
from .mesh import TriMesh


def convex_hull3(points):
    """Watertight triangle mesh of the convex hull of >= 4 non-coplanar points.

    Faces are reoriented outward (Qhull does not guarantee consistent
    simplex winding).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 4:
        raise MeshError("convex hull needs at least 4 points")
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise MeshError("degenerate input: points are coplanar or collinear") from exc
    used = np.unique(hull.simplices)
    remap = np.full(len(points), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    vertices = points[used]
    faces = remap[hull.simplices]
    interior = vertices.mean(axis=0)
    tri = vertices[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    outward = np.einsum("ij,ij->i", normals, tri.mean(axis=1) - interior)
    flip = outward < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return TriMesh(vertices, faces)


def inflate_hull(hull, offset):
    """Push every vertex radially away from the origin by ``offset`` meters.

    Connectivity is unchanged. The hull must not have a vertex at the origin.
    """
    norms = np.linalg.norm(hull.vertices, axis=1, keepdims=True)
    if norms.min() < 1e-12:
        raise MeshError("hull has a vertex at the origin; cannot inflate radially")
    vertices = hull.vertices + offset * hull.vertices / norms
    return TriMesh(vertices, hull.faces)
