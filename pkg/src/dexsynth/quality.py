"""Grasp evaluation: contacts, wrench-space epsilon quality (Q1),
penetration depth, validity flags, and dataset joint-angle entropy."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .hand import hand_point_depths, hand_surface
from .rotations import orthonormal_tangents


@dataclass
class Q1Config:
    mu: float = 0.5                      # friction coefficient
    cone_edges: int = 8                  # linearized cone edge count (m)
    contact_threshold: float = 0.001     # meters (1 mm)
    penetration_override_cm: float = 0.5  # Q1 forced to 0 above this (5 mm)
    lambda_torque: float = 1.0           # torque normalization length, meters
    samples_per_link: int = 64           # hand-surface samples for contact search
    min_contacts: int = 2                # validity requirement

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Contact:
    point: np.ndarray    # (3,) world
    normal: np.ndarray   # (3,) unit, into the object
    link: int
    distance: float      # unsigned distance to the object surface


def find_contacts(hand, posed, obj, threshold, samples_per_link, rng):
    """At most one contact per link: its closest surface sample to the
    object, kept iff within ``threshold``. Normals come from the object
    surface at the nearest point, oriented into the object."""
    samples, links = hand_surface(hand, posed, samples_per_link, rng)
    dist, _, fid = obj.closest_points(samples.points)
    outward = obj.face_normals()
    contacts = []
    for link in np.unique(links):
        rows = np.nonzero(links == link)[0]
        best = rows[np.argmin(dist[rows])]
        if dist[best] <= threshold:
            contacts.append(Contact(point=samples.points[best],
                                    normal=-outward[fid[best]],
                                    link=int(link),
                                    distance=float(dist[best])))
    return contacts


def cone_wrenches(contact, cfg):
    """Unit-force edge wrenches of the linearized friction cone.

    Each edge force makes angle arctan(mu) with the contact normal; the
    torque part is (point x force) / lambda."""
    n = contact.normal
    e1, e2 = orthonormal_tangents(n)
    k = np.arange(cfg.cone_edges)
    phi = 2.0 * np.pi * k / cfg.cone_edges
    forces = (n[None, :]
              + cfg.mu * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2))
    forces /= np.linalg.norm(forces, axis=1, keepdims=True)
    torques = np.cross(contact.point[None, :], forces) / cfg.lambda_torque
    return np.concatenate([forces, torques], axis=1)


def inscribed_radius(wrenches):
    """Radius of the largest origin-centered ball inside conv(wrenches).

    0 when the origin is outside or on the boundary (within 1e-9) or when
    the set is degenerate (spans fewer dimensions than the space)."""
    try:
        hull = ConvexHull(wrenches)
    except QhullError:
        return 0.0  # spans < full dimension; origin cannot be interior
    offsets = hull.equations[:, -1]
    if offsets.max() > -1e-9:
        return 0.0
    return float(-offsets.max())


def q1(contacts, cfg, penetration_cm=0.0):
    """Wrench-space quality: largest origin-centered ball radius inside the
    convex hull of all contact cone wrenches.

    0 when there are no contacts or when the penetration override threshold
    is exceeded."""
    if not contacts or penetration_cm > cfg.penetration_override_cm:
        return 0.0
    wrenches = np.concatenate([cone_wrenches(c, cfg) for c in contacts])
    return inscribed_radius(wrenches)


def penetration_depth_cm(hand, posed, object_points):
    """Max union penetration depth of the object sample points into the
    posed hand, in centimeters."""
    depth, _, _ = hand_point_depths(hand, posed, object_points)
    return float(depth.max() * 100.0)


def validate(penetration_cm, n_contacts, q1_value, cfg):
    """Analytic validity flags. Simulation shake tests are out of scope;
    records are exported for external simulators instead."""
    flags = {
        "penetration_ok": bool(penetration_cm <= 0.1),
        "has_contacts": bool(n_contacts >= cfg.min_contacts),
        "q1_positive": bool(q1_value > 0.0),
    }
    flags["valid"] = all(flags.values())
    return flags


def joint_entropy(thetas, lower, upper, bins=100):
    """Mean per-joint Shannon entropy (bits) of joint angles over equal-width
    histograms spanning each joint's motion range.

    Out-of-range samples clamp to the edge bins; 0*log(0) counts as 0.
    Returns (mean over joints, per-joint entropies)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if thetas.shape[0] < 1:
        raise ValueError("need at least one sample")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    span = upper - lower
    idx = np.floor((thetas - lower) / span * bins).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    d = thetas.shape[1]
    per_joint = np.empty(d)
    n = thetas.shape[0]
    for j in range(d):
        counts = np.bincount(idx[:, j], minlength=bins)
        p = counts[counts > 0] / n
        per_joint[j] = -(p * np.log2(p)).sum()
    return float(per_joint.mean()), per_joint
