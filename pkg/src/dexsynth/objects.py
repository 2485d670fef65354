"""Per-object optimization context: scaled mesh, hulls, fixed sample set."""

import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import TriMesh, convex_hull3, inflate_hull

# tags separating derived rng streams
SEED_OBJECT_SAMPLES = 1
SEED_CONTACT_SAMPLES = 2


def stable_object_key(object_id, scale):
    """Platform-stable integers identifying an (object, scale) pair."""
    return zlib.crc32(str(object_id).encode("utf-8")), int(round(scale * 1e6))


def object_sample_rng(master_seed, object_id, scale):
    key = stable_object_key(object_id, scale)
    return np.random.default_rng([master_seed & 0xFFFFFFFF, *key, SEED_OBJECT_SAMPLES])


def contact_sample_rng(grasp_seed, object_id, scale):
    key = stable_object_key(object_id, scale)
    return np.random.default_rng([grasp_seed & 0xFFFFFFFFFFFF, *key, SEED_CONTACT_SAMPLES])


@dataclass
class GraspObject:
    """Immutable object-side inputs shared by a batch of grasps."""

    object_id: str
    scale: float
    mesh: TriMesh
    samples: object          # SurfaceSamples, fixed for the whole run
    hull: TriMesh
    inflated: TriMesh


def prepare_object(mesh, object_id, scale, master_seed, n_samples=2048,
                   hull_offset=0.2):
    """Build the optimization context for one (object, scale).

    The surface sample set is drawn once with an rng derived from the master
    seed and the (object, scale) key, then fixed for determinism and cost.
    """
    rng = object_sample_rng(master_seed, object_id, scale)
    samples = mesh.sample_surface(n_samples, rng)
    hull = convex_hull3(mesh.vertices)
    return GraspObject(
        object_id=object_id, scale=scale, mesh=mesh, samples=samples,
        hull=hull, inflated=inflate_hull(hull, hull_offset))
