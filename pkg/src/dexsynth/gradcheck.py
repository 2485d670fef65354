"""Finite-difference verification of all energy-term gradients.

Central differences over the full pose parameterization (translation, world
rotation tangent, joint angles) against the analytic gradients, at random
states on a hand/object pair. States falling inside kink neighborhoods
(max() switches, surface crossings, nearest-region ties) are filtered out
and redrawn; the contact normals entering the force-closure term are frozen
at the center state, since that is the function the analytic gradient
differentiates.
"""

import numpy as np

from .energy import Weights, force_closure, joint_limits, self_penetration, total_energy
from .hand import forward_kinematics, hand_point_depths, world_candidates, world_spheres
from .optim import init_grasp

TERMS = ("fc", "dis", "pen", "spen", "joints")

KINK_MARGIN = 1e-4
ACTIVE_EPS = 1e-8


def _perturbed(pose, coord, h):
    from .rotations import apply_tangent
    p = pose.copy()
    if coord < 3:
        p.translation[coord] += h
    elif coord < 6:
        e = np.zeros(3)
        e[coord - 3] = h
        p.rotation = apply_tangent(pose.rotation, e)
    else:
        p.theta[coord - 6] += h
    return p


def _term_value(term, pose, contacts, hand, mesh, sample_points, frozen_normals):
    posed = forward_kinematics(hand, pose)
    if term == "fc":
        x, _, _ = world_candidates(hand, posed, contacts, with_jacobian=False)
        normals = frozen_normals
        if normals is None:
            normals = -mesh.face_normals()[mesh.signed_distance(x)[3]]
        return force_closure(x, normals)[0]
    if term == "dis":
        x, _, _ = world_candidates(hand, posed, contacts, with_jacobian=False)
        sd, _, _, _ = mesh.signed_distance(x)
        return float(np.abs(sd).sum())
    if term == "pen":
        depth, _, _ = hand_point_depths(hand, posed, sample_points)
        return float(depth.sum())
    if term == "spen":
        centers, radii, _, _ = world_spheres(hand, posed, with_jacobian=False)
        return self_penetration(centers, radii, hand.spen_pair_mask())[0]
    if term == "joints":
        return joint_limits(pose.theta, hand.lower, hand.upper)[0]
    raise ValueError(term)


def _nearest_is_ambiguous(mesh, point, margin):
    """True when two distinct surface regions are within ``margin`` of the
    nearest distance (distance-gradient tie: medial axis or wedge boundary)."""
    from .kernels import numpy_backend
    tri = mesh.vertices[mesh.faces]
    pts = numpy_backend._closest_on_triangles(
        point[None, None, :], tri[None, :, 0], tri[None, :, 1], tri[None, :, 2])[0]
    d = np.linalg.norm(pts - point, axis=1)
    order = np.argsort(d)
    best = order[0]
    for other in order[1:]:
        if d[other] > d[best] + margin:
            break
        if np.linalg.norm(pts[other] - pts[best]) > 1e-6:
            return True
    return False


def _kink_free(term, pose, contacts, hand, mesh, sample_points, margin=KINK_MARGIN):
    posed = forward_kinematics(hand, pose)
    if term in ("fc", "dis"):
        x, _, _ = world_candidates(hand, posed, contacts, with_jacobian=False)
        sd, _, _, fid = mesh.signed_distance(x)
        if np.any(np.abs(sd) < margin):
            return False
        if term == "fc":
            return force_closure(x, -mesh.face_normals()[fid])[0] > 1e-6
        return not any(_nearest_is_ambiguous(mesh, p, margin) for p in x)
    if term == "pen":
        return _pen_kink_free(hand, posed, sample_points, margin)
    if term == "spen":
        centers, radii, _, _ = world_spheres(hand, posed, with_jacobian=False)
        mask = hand.spen_pair_mask()
        dist = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
        thr = 0.5 * (radii[:, None] + radii[None, :])
        near_kink = mask & (np.abs(dist - thr) < margin)
        too_close = mask & (dist < 1e-6)
        return not (near_kink.any() or too_close.any())
    if term == "joints":
        return bool(np.all(np.abs(pose.theta - hand.lower) > margin)
                    and np.all(np.abs(pose.theta - hand.upper) > margin))
    raise ValueError(term)


def _pen_kink_free(hand, posed, points, margin):
    """No object sample within ``margin`` of any link surface, and no
    near-tie between the two deepest links at a penetrating sample."""
    depths = np.zeros((len(points), len(hand.link_meshes)))
    for link, mesh in enumerate(hand.link_meshes):
        if mesh is None:
            continue
        lo, hi = hand.link_bounds[link]
        local = (points - posed.pos[link]) @ posed.rot[link]
        box = np.all((local >= lo - margin) & (local <= hi + margin), axis=1)
        if not box.any():
            continue
        rows = np.nonzero(box)[0]
        sd, _, _, _ = mesh.signed_distance(local[rows])
        if np.any(np.abs(sd) < margin):
            return False
        inside = sd < 0
        depths[rows[inside], link] = -sd[inside]
    deep = np.sort(depths, axis=1)
    ties = (deep[:, -1] > 0) & (deep[:, -2] > 0) & (deep[:, -1] - deep[:, -2] < margin)
    return not ties.any()


def _random_state(hand, obj, rng, config):
    """Random grasp state straddling all energy regimes: pulled toward the
    object, sometimes curled, sometimes beyond the joint limits."""
    state = init_grasp(hand, obj, rng, config)
    pose = state.pose
    pose.translation = pose.translation * rng.uniform(0.05, 1.0)
    if rng.random() < 0.5:
        span = hand.upper - hand.lower
        pose.theta = hand.upper - rng.uniform(0.0, 0.1) * span
    if rng.random() < 0.4:
        j = rng.integers(hand.dof)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        bound = hand.upper[j] if sign > 0 else hand.lower[j]
        pose.theta[j] = bound + sign * rng.uniform(0.05, 0.3)
    return state


def run(hand, obj, seed=0, n_states=20, h=1e-6, min_active=8, config=None):
    """FD-verify each term at ``n_states`` kink-free states.

    Per term: the worst relative gradient error over states, requiring at
    least ``min_active`` states where the term is nonzero.
    """
    from .optim import OptimConfig
    config = config or OptimConfig()
    rng = np.random.default_rng(seed)
    weights = Weights()
    dim = 6 + hand.dof
    report = {}
    for term in TERMS:
        worst = 0.0
        used = active = attempts = 0
        while used < n_states:
            attempts += 1
            if attempts > 300 * n_states:
                raise RuntimeError(f"could not find kink-free states for {term}")
            state = _random_state(hand, obj, rng, config)
            value = _term_value(term, state.pose, state.contact_indices,
                                hand, obj.mesh, obj.samples.points, None)
            is_active = value > ACTIVE_EPS
            # keep enough slots free to meet the active-state quota
            if not is_active and (n_states - used) <= (min_active - active):
                continue
            if not _kink_free(term, state.pose, state.contact_indices,
                              hand, obj.mesh, obj.samples.points):
                continue
            breakdown = total_energy(state.pose, state.contact_indices, hand,
                                     obj.mesh, obj.samples, weights)
            analytic = breakdown.term_grads[term]
            frozen = None
            if term == "fc":
                posed = forward_kinematics(hand, state.pose)
                x, _, _ = world_candidates(hand, posed, state.contact_indices,
                                           with_jacobian=False)
                fid = obj.mesh.signed_distance(x)[3]
                frozen = -obj.mesh.face_normals()[fid]
            fd = np.empty(dim)
            for c in range(dim):
                up = _term_value(term, _perturbed(state.pose, c, h),
                                 state.contact_indices, hand, obj.mesh,
                                 obj.samples.points, frozen)
                dn = _term_value(term, _perturbed(state.pose, c, -h),
                                 state.contact_indices, hand, obj.mesh,
                                 obj.samples.points, frozen)
                fd[c] = (up - dn) / (2.0 * h)
            scale = max(np.abs(analytic).max(), np.abs(fd).max(), 1e-9)
            err = np.abs(fd - analytic).max() / scale
            worst = max(worst, err)
            used += 1
            if is_active:
                active += 1
        report[term] = {"worst_rel_err": worst, "states": used, "active": active}
    return report
