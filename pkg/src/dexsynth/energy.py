"""Grasp energy terms and their analytic gradients.

All terms are differentiated w.r.t. the pose parameter vector
(T, world rotation tangent, theta), length 6+d. Contact normals are taken
from the object surface at the nearest point to each contact, oriented into
the object, and treated as locally constant in the gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from .hand import forward_kinematics, hand_point_depths, point_jacobian, world_candidates, world_spheres


@dataclass
class Weights:
    """Energy mixing weights; the total is
    fc + w_dis*dis + w_pen*pen + w_spen*spen + w_joints*joints."""

    w_dis: float = 100.0
    w_pen: float = 100.0
    w_spen: float = 10.0
    w_joints: float = 1.0

    def to_dict(self):
        return {"w_dis": self.w_dis, "w_pen": self.w_pen,
                "w_spen": self.w_spen, "w_joints": self.w_joints}


@dataclass
class EnergyBreakdown:
    e_fc: float
    e_dis: float
    e_pen: float
    e_spen: float
    e_joints: float
    total: float
    grad: np.ndarray                      # (6+d,)
    term_grads: dict = field(default_factory=dict)  # per-term pose gradients

    def energies(self):
        return {"fc": self.e_fc, "dis": self.e_dis, "pen": self.e_pen,
                "spen": self.e_spen, "joints": self.e_joints, "total": self.total}


def force_closure(points, normals):
    """Residual wrench norm of unit contact forces: the 6-vector of summed
    normals and summed torques points x normals, 2-norm.

    Returns (value, gradient w.r.t. each point). Normals point into the
    object and are treated as constants.
    """
    points = np.atleast_2d(points)
    normals = np.atleast_2d(normals)
    if len(points) == 0:
        raise ValueError("force closure needs at least one contact")
    force = normals.sum(axis=0)
    torque = np.cross(points, normals).sum(axis=0)
    value = float(np.sqrt(force @ force + torque @ torque))
    if value < 1e-12:
        return value, np.zeros_like(points)
    grad = np.cross(normals, torque) / value
    return value, grad


def contact_distance(points, obj):
    """Sum of unsigned point-to-mesh distances; gradient per point."""
    sd, grad_sd, _, _ = obj.signed_distance(points)
    value = float(np.abs(sd).sum())
    return value, np.sign(sd)[:, None] * grad_sd


def reverse_penetration(hand, posed, object_points):
    """Sum over fixed object surface points of their union depth into the
    hand; gradient flows to the pose via the deepest link at each point."""
    depth, deepest, grad_w = hand_point_depths(hand, posed, object_points)
    value = float(depth.sum())
    grad = np.zeros(6 + hand.dof)
    for link in np.unique(deepest[deepest >= 0]):
        rows = np.nonzero(deepest == link)[0]
        jac = point_jacobian(hand, posed, link, object_points[rows])
        grad += np.einsum("qi,qij->j", grad_w[rows], jac)
    return value, grad


def self_penetration(centers, radii, pair_mask):
    """Ordered-pair sphere proximity penalty: sum over ordered pairs (p, q)
    allowed by ``pair_mask`` of max(thr - |p-q|, 0), thr the mean of the two
    radii (equal to the common radius when uniform). Returns (value,
    gradient w.r.t. centers)."""
    centers = np.atleast_2d(centers)
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    thr = 0.5 * (radii[:, None] + radii[None, :])
    act = pair_mask & (dist < thr)
    value = float((thr - dist)[act].sum())
    grad = np.zeros_like(centers)
    if act.any():
        safe = act & (dist > 1e-12)
        u = np.zeros_like(diff)
        u[safe] = diff[safe] / dist[safe, None]
        grad = -u.sum(axis=1) + u.sum(axis=0)
    return value, grad


def joint_limits(theta, lower, upper):
    """Total excursion beyond the joint limits; subgradient 0 at the kinks."""
    over = np.maximum(theta - upper, 0.0)
    under = np.maximum(lower - theta, 0.0)
    value = float(over.sum() + under.sum())
    grad = (theta > upper).astype(np.float64) - (theta < lower).astype(np.float64)
    return value, grad


def contact_normals_from_object(obj, points):
    """Object surface normals at the nearest points, oriented into the object."""
    _, _, _, fid = obj.signed_distance(points)
    return -obj.face_normals()[fid]


def total_energy(pose, contact_indices, hand, obj, object_samples, weights):
    """All five terms plus the combined pose gradient at one grasp state.

    ``object_samples`` is the fixed object surface point set used by the
    reverse penetration term; deterministic given its inputs.
    """
    posed = forward_kinematics(hand, pose)
    x, _, jac = world_candidates(hand, posed, contact_indices)

    sd, grad_sd, _, fid = obj.signed_distance(x)
    normals = -obj.face_normals()[fid]

    fc_val, fc_gx = force_closure(x, normals)
    fc_grad = np.einsum("qi,qij->j", fc_gx, jac)

    dis_val = float(np.abs(sd).sum())
    dis_gx = np.sign(sd)[:, None] * grad_sd
    dis_grad = np.einsum("qi,qij->j", dis_gx, jac)

    pen_val, pen_grad = reverse_penetration(hand, posed, object_samples.points)

    centers, radii, _, sph_jac = world_spheres(hand, posed)
    spen_val, spen_gc = self_penetration(centers, radii, hand.spen_pair_mask())
    spen_grad = np.einsum("qi,qij->j", spen_gc, sph_jac)

    joints_val, joints_gt = joint_limits(pose.theta, hand.lower, hand.upper)
    joints_grad = np.zeros(6 + hand.dof)
    joints_grad[6:] = joints_gt

    total = (fc_val + weights.w_dis * dis_val + weights.w_pen * pen_val
             + weights.w_spen * spen_val + weights.w_joints * joints_val)
    grad = (fc_grad + weights.w_dis * dis_grad + weights.w_pen * pen_grad
            + weights.w_spen * spen_grad + weights.w_joints * joints_grad)
    return EnergyBreakdown(
        e_fc=fc_val, e_dis=dis_val, e_pen=pen_val, e_spen=spen_val,
        e_joints=joints_val, total=total, grad=grad,
        term_grads={"fc": fc_grad, "dis": dis_grad, "pen": pen_grad,
                    "spen": spen_grad, "joints": joints_grad})
