"""Indexed triangle mesh with distance/containment queries.

Units are meters throughout. A mesh is immutable after construction; the
acceleration structure is built lazily on first query and concurrent
read-only queries are safe.
"""

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import MeshError
from .bvh import build_bvh

# faces with area below this are dropped at construction
DEGENERATE_AREA = 1e-14

# within this band of the surface the SDF gradient falls back to the face normal
NEAR_SURFACE = 1e-6


@dataclass
class SurfaceSamples:
    """Struct-of-arrays surface point set: points on faces with outward normals."""

    points: np.ndarray    # (k, 3)
    normals: np.ndarray   # (k, 3) unit
    face_ids: np.ndarray  # (k,) int32

    def __len__(self):
        return len(self.points)


class TriMesh:
    """Triangle mesh over float64 vertices and int32 face indices.

    Degenerate faces (repeated indices or area <= ~0) are dropped at
    construction. ``watertight`` reports whether every edge is shared by
    exactly two faces.
    """

    def __init__(self, vertices, faces):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.ascontiguousarray(faces, dtype=np.int32).reshape(-1, 3)
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("face index out of range")
        faces = self._cleanup(vertices, faces)
        if len(faces) == 0:
            raise MeshError("mesh has no non-degenerate faces")
        self.vertices = vertices
        self.faces = faces
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        self._bvh = None
        self._watertight = None

    @staticmethod
    def _cleanup(vertices, faces):
        if len(faces) == 0:
            return faces
        distinct = ((faces[:, 0] != faces[:, 1])
                    & (faces[:, 1] != faces[:, 2])
                    & (faces[:, 0] != faces[:, 2]))
        tri = vertices[faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area2 = np.linalg.norm(cross, axis=1)
        return faces[distinct & (area2 > 2.0 * DEGENERATE_AREA)]

    # -- basic measures -------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_faces(self):
        return len(self.faces)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def face_areas(self):
        tri = self.vertices[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def face_normals(self):
        tri = self.vertices[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return cross / np.linalg.norm(cross, axis=1, keepdims=True)

    @property
    def watertight(self):
        if self._watertight is None:
            edges = np.concatenate([
                self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]],
            ])
            edges = np.sort(edges, axis=1)
            _, counts = np.unique(edges, axis=0, return_counts=True)
            self._watertight = bool(len(edges)) and bool(np.all(counts == 2))
        return self._watertight

    # -- queries ---------------------------------------------------------

    @property
    def bvh(self):
        if self._bvh is None:
            self._bvh = build_bvh(self.vertices, self.faces)
        return self._bvh

    def closest_points(self, points):
        """Unsigned distance, nearest surface point, and face id per query."""
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        b = self.bvh
        sq, nearest, fid = kernels.closest_points(
            points, self.vertices, self.faces,
            b.node_min, b.node_max, b.node_left, b.node_right, b.prim_index)
        return np.sqrt(sq), nearest, fid

    def winding_numbers(self, points):
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        return kernels.winding_numbers(points, self.vertices, self.faces)

    def contains(self, points):
        """Inside test by generalized winding number (>= 0.5).

        The sign is computed regardless of watertightness but is only
        reliable on (near-)closed surfaces.
        """
        return self.winding_numbers(points) >= 0.5

    def signed_distance(self, points):
        """Signed distance, gradient, nearest point, and face id per query.

        Negative inside. The gradient is the direction of increasing
        distance; within ``NEAR_SURFACE`` of the surface it falls back to
        the nearest face's stored normal.
        """
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        dist, nearest, fid = self.closest_points(points)
        inside = self.contains(points)
        sd = np.where(inside, -dist, dist)
        delta = points - nearest
        grad = np.zeros_like(delta)
        safe = dist > NEAR_SURFACE
        grad[safe] = delta[safe] / dist[safe, None]
        grad[inside & safe] *= -1.0
        if np.any(~safe):
            grad[~safe] = self.face_normals()[fid[~safe]]
        return sd, grad, nearest, fid

    def sample_surface(self, k, rng):
        """k area-weighted samples, uniform within each face; deterministic
        for a fixed generator state."""
        if k < 1:
            raise ValueError("k must be >= 1")
        areas = self.face_areas()
        fid = rng.choice(self.num_faces, size=k, p=areas / areas.sum())
        u = rng.random((k, 1))
        v = rng.random((k, 1))
        flip = (u + v) > 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        tri = self.vertices[self.faces[fid]]
        points = tri[:, 0] + u * (tri[:, 1] - tri[:, 0]) + v * (tri[:, 2] - tri[:, 0])
        return SurfaceSamples(points=points,
                              normals=self.face_normals()[fid],
                              face_ids=fid.astype(np.int32))

    # -- derived meshes ---------------------------------------------------

    def transformed(self, rotation=None, translation=None):
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return TriMesh(v, self.faces)

    def scaled(self, factor):
        return TriMesh(self.vertices * factor, self.faces)


def normalize_to_unit_sphere(mesh):
    """Center on the bounding-box center and scale so max vertex norm is 1.

    Returns (normalized mesh, applied uniform scale factor).
    """
    lo, hi = mesh.bounds()
    centered = mesh.vertices - 0.5 * (lo + hi)
    radius = np.linalg.norm(centered, axis=1).max()
    if radius < 1e-300:
        raise MeshError("cannot normalize: all vertices coincide")
    factor = 1.0 / radius
    return TriMesh(centered * factor, mesh.faces), factor
