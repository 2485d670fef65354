"""Articulated hand model.

Parses a URDF-subset description (revolute + fixed joints, mesh geometry)
plus a JSON annotation sidecar carrying the canonical joint vector, contact
candidates, self-collision proxy spheres, and the palm axis. Provides
forward kinematics with analytic point jacobians w.r.t. the grasp pose
(translation, world rotation tangent, joint angles).

Annotation schema::

    {
      "theta_ref": [d floats],
      "contact_candidates": [{"link": str, "point": [3], "normal": [3]}, ...],
      "spen_spheres": [{"link": str, "center": [3], "radius": float}, ...],
      "palm_axis": [3]            # optional, root-link frame, default +z
    }

Angles are radians, lengths meters. ``theta_ref`` follows the document
order of the revolute joints in the description file.
"""

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HandError
from .geometry import TriMesh, load_mesh
from .geometry.mesh import NEAR_SURFACE, SurfaceSamples
from .rotations import axis_angle_matrix, quat_to_matrix


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int
    child: int
    origin_rot: np.ndarray   # (3, 3) rotation of <origin>
    origin_pos: np.ndarray   # (3,)
    axis: np.ndarray | None  # unit, joint frame; None for fixed joints
    lower: float
    upper: float
    theta_index: int         # -1 for fixed joints


@dataclass
class GraspPose:
    """Optimization variable: global translation, rotation, joint angles."""

    translation: np.ndarray  # (3,)
    rotation: np.ndarray     # (4,) unit quaternion, w-x-y-z
    theta: np.ndarray        # (d,)

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)

    def validate(self, dof):
        if abs(np.linalg.norm(self.rotation) - 1.0) > 1e-9:
            raise ValueError("rotation quaternion is not unit length")
        if len(self.theta) != dof:
            raise ValueError(f"theta has length {len(self.theta)}, expected {dof}")

    def copy(self):
        return GraspPose(self.translation.copy(), self.rotation.copy(), self.theta.copy())


@dataclass
class Posed:
    """World transforms of all links plus the data point jacobians need."""

    rot: np.ndarray           # (L, 3, 3)
    pos: np.ndarray           # (L, 3)
    joint_axis_w: np.ndarray  # (d, 3) world joint axes
    joint_origin_w: np.ndarray  # (d, 3) world joint pivot points
    root_t: np.ndarray        # (3,) rotation-tangent lever-arm reference


@dataclass
class HandModel:
    link_names: list[str]
    link_meshes: list  # TriMesh | None per link
    joints: list[Joint]  # topological order
    root: int
    theta_ref: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    candidate_link: np.ndarray    # (C,) int32
    candidate_point: np.ndarray   # (C, 3) link frame
    candidate_normal: np.ndarray  # (C, 3) unit, link frame
    sphere_link: np.ndarray       # (S,) int32
    sphere_center: np.ndarray     # (S, 3) link frame
    sphere_radius: np.ndarray     # (S,)
    palm_axis: np.ndarray         # (3,) unit, root-link frame
    ancestor: np.ndarray = field(default=None)  # (L, d) bool, filled post-init
    link_bounds: list = field(default=None)

    def __post_init__(self):
        L, d = len(self.link_names), self.dof
        parent_joint = {j.child: j for j in self.joints}
        anc = np.zeros((L, d), dtype=bool)
        for link in range(L):
            cur = link
            while cur in parent_joint:
                j = parent_joint[cur]
                if j.theta_index >= 0:
                    anc[link, j.theta_index] = True
                cur = j.parent
        self.ancestor = anc
        self.link_bounds = [m.bounds() if m is not None else None
                            for m in self.link_meshes]
        adj = np.zeros((L, L), dtype=bool)
        for j in self.joints:
            adj[j.parent, j.child] = adj[j.child, j.parent] = True
        self.link_adjacent = adj

    @property
    def dof(self):
        return sum(1 for j in self.joints if j.theta_index >= 0)

    @property
    def num_candidates(self):
        return len(self.candidate_link)

    def spen_pair_mask(self):
        """Ordered sphere pairs counted by the self-penetration energy.

        Pairs on the same link or on links adjacent in the joint tree are
        exempt (those legitimately touch at joints).
        """
        links = self.sphere_link
        same = links[:, None] == links[None, :]
        adjacent = self.link_adjacent[links[:, None], links[None, :]]
        mask = ~(same | adjacent)
        np.fill_diagonal(mask, False)
        return mask


# -- loading ---------------------------------------------------------------


def _parse_origin(elem):
    rot = np.eye(3)
    pos = np.zeros(3)
    if elem is not None:
        pos = np.array([float(x) for x in elem.get("xyz", "0 0 0").split()])
        r, p, y = (float(x) for x in elem.get("rpy", "0 0 0").split())
        rot = (axis_angle_matrix([0, 0, 1], y)
               @ axis_angle_matrix([0, 1, 0], p)
               @ axis_angle_matrix([1, 0, 0], r))
    return rot, pos


def _load_link_mesh(link_elem, base_dir):
    """Merged mesh of the link's collision (preferred) or visual geometry."""
    chunks = link_elem.findall("collision") or link_elem.findall("visual")
    vertices, faces, offset = [], [], 0
    for chunk in chunks:
        geom = chunk.find("geometry")
        if geom is None:
            continue
        mesh_elem = geom.find("mesh")
        if mesh_elem is None:
            raise HandError(
                f"link {link_elem.get('name')!r}: only mesh geometry is supported")
        fname = mesh_elem.get("filename")
        path = base_dir / fname
        if not path.is_file():
            raise HandError(f"link mesh file not found: {path}")
        mesh = load_mesh(path)
        v = mesh.vertices
        scale = mesh_elem.get("scale")
        if scale is not None:
            v = v * np.array([float(x) for x in scale.split()])
        rot, pos = _parse_origin(chunk.find("origin"))
        vertices.append(v @ rot.T + pos)
        faces.append(mesh.faces + offset)
        offset += len(v)
    if not vertices:
        return None
    return TriMesh(np.concatenate(vertices), np.concatenate(faces))


def load_hand(description, annotations):
    """Load a hand from a URDF-subset file and its JSON annotation sidecar."""
    description = Path(description)
    annotations = Path(annotations)
    try:
        root_elem = ET.parse(description).getroot()
    except (OSError, ET.ParseError) as exc:
        raise HandError(f"cannot parse hand description {description}: {exc}") from exc

    link_elems = root_elem.findall("link")
    if not link_elems:
        raise HandError("hand description has no links")
    link_names = [e.get("name") for e in link_elems]
    index = {name: i for i, name in enumerate(link_names)}
    meshes = [_load_link_mesh(e, description.parent) for e in link_elems]

    joints_doc = []
    theta_count = 0
    for e in root_elem.findall("joint"):
        jtype = e.get("type")
        if jtype not in ("revolute", "fixed"):
            raise HandError(f"unsupported joint type {jtype!r} (joint {e.get('name')!r})")
        parent = e.find("parent").get("link")
        child = e.find("child").get("link")
        if parent not in index or child not in index:
            raise HandError(f"joint {e.get('name')!r} references unknown link")
        rot, pos = _parse_origin(e.find("origin"))
        axis = None
        lower = upper = 0.0
        theta_index = -1
        if jtype == "revolute":
            axis_elem = e.find("axis")
            axis = np.array([float(x) for x in
                             (axis_elem.get("xyz") if axis_elem is not None else "1 0 0").split()])
            axis = axis / np.linalg.norm(axis)
            limit = e.find("limit")
            if limit is None:
                raise HandError(f"revolute joint {e.get('name')!r} has no limit")
            lower = float(limit.get("lower"))
            upper = float(limit.get("upper"))
            if not lower < upper:
                raise HandError(f"joint {e.get('name')!r}: need lower < upper")
            theta_index = theta_count
            theta_count += 1
        joints_doc.append(Joint(e.get("name"), index[parent], index[child],
                                rot, pos, axis, lower, upper, theta_index))

    # tree check + topological order from the root (= the palm)
    children = {}
    has_parent = set()
    for j in joints_doc:
        if j.child in has_parent:
            raise HandError(f"link {link_names[j.child]!r} has two parent joints")
        has_parent.add(j.child)
        children.setdefault(j.parent, []).append(j)
    roots = [i for i in range(len(link_names)) if i not in has_parent]
    if len(roots) != 1:
        raise HandError(f"joint graph must be a tree with one root, found {len(roots)} roots")
    root = roots[0]
    ordered = []
    stack = [root]
    while stack:
        link = stack.pop()
        for j in children.get(link, []):
            ordered.append(j)
            stack.append(j.child)
    if len(ordered) != len(joints_doc):
        raise HandError("joint graph contains a cycle")

    try:
        annot = json.loads(annotations.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise HandError(f"cannot parse annotations {annotations}: {exc}") from exc

    lower = np.array([j.lower for j in joints_doc if j.theta_index >= 0])
    upper = np.array([j.upper for j in joints_doc if j.theta_index >= 0])
    theta_ref = np.asarray(annot.get("theta_ref", np.zeros(theta_count)), dtype=np.float64)
    if len(theta_ref) != theta_count:
        raise HandError(f"theta_ref has length {len(theta_ref)}, hand has {theta_count} joints")
    if theta_count and (np.any(theta_ref < lower) or np.any(theta_ref > upper)):
        raise HandError("theta_ref violates joint limits")

    def link_of(entry, what):
        name = entry.get("link")
        if name not in index:
            raise HandError(f"{what} references unknown link {name!r}")
        return index[name]

    cands = annot.get("contact_candidates", [])
    cand_link = np.array([link_of(c, "contact candidate") for c in cands], dtype=np.int32)
    cand_point = np.array([c["point"] for c in cands], dtype=np.float64).reshape(-1, 3)
    cand_normal = np.array([c["normal"] for c in cands], dtype=np.float64).reshape(-1, 3)
    if len(cand_normal):
        cand_normal = cand_normal / np.linalg.norm(cand_normal, axis=1, keepdims=True)

    spheres = annot.get("spen_spheres", [])
    sph_link = np.array([link_of(s, "spen sphere") for s in spheres], dtype=np.int32)
    sph_center = np.array([s["center"] for s in spheres], dtype=np.float64).reshape(-1, 3)
    sph_radius = np.array([s["radius"] for s in spheres], dtype=np.float64)
    if np.any(sph_radius <= 0):
        raise HandError("spen sphere radius must be > 0")

    palm_axis = np.asarray(annot.get("palm_axis", [0.0, 0.0, 1.0]), dtype=np.float64)
    palm_axis = palm_axis / np.linalg.norm(palm_axis)

    return HandModel(
        link_names=link_names, link_meshes=meshes, joints=ordered, root=root,
        theta_ref=theta_ref, lower=lower, upper=upper,
        candidate_link=cand_link, candidate_point=cand_point, candidate_normal=cand_normal,
        sphere_link=sph_link, sphere_center=sph_center, sphere_radius=sph_radius,
        palm_axis=palm_axis)


# -- kinematics --------------------------------------------------------------


def forward_kinematics(hand, pose):
    """World transforms per link; joint angles are evaluated as given
    (limits are enforced only by the energy terms and initialization)."""
    L = len(hand.link_names)
    d = hand.dof
    rot = np.empty((L, 3, 3))
    pos = np.empty((L, 3))
    rot[hand.root] = quat_to_matrix(pose.rotation)
    pos[hand.root] = pose.translation
    axis_w = np.zeros((d, 3))
    origin_w = np.zeros((d, 3))
    for j in hand.joints:
        rj = rot[j.parent] @ j.origin_rot
        tj = rot[j.parent] @ j.origin_pos + pos[j.parent]
        if j.theta_index >= 0:
            axis_w[j.theta_index] = rj @ j.axis
            origin_w[j.theta_index] = tj
            rj = rj @ axis_angle_matrix(j.axis, pose.theta[j.theta_index])
        rot[j.child] = rj
        pos[j.child] = tj
    return Posed(rot=rot, pos=pos, joint_axis_w=axis_w, joint_origin_w=origin_w,
                 root_t=np.array(pose.translation))


def point_jacobian(hand, posed, link, points):
    """d(world point)/d(T, R-tangent, theta) for points attached to a link.

    Rotation increments are world-frame tangents applied about the hand
    origin: a point w moves by omega x (w - T). Returns (Q, 3, 6+d).
    """
    points = np.atleast_2d(points)
    q = len(points)
    jac = np.zeros((q, 3, 6 + hand.dof))
    jac[:, 0, 0] = jac[:, 1, 1] = jac[:, 2, 2] = 1.0
    rel = points - posed.root_t
    jac[:, 0, 4] = rel[:, 2]
    jac[:, 0, 5] = -rel[:, 1]
    jac[:, 1, 3] = -rel[:, 2]
    jac[:, 1, 5] = rel[:, 0]
    jac[:, 2, 3] = rel[:, 1]
    jac[:, 2, 4] = -rel[:, 0]
    for t in np.nonzero(hand.ancestor[link])[0]:
        jac[:, :, 6 + t] = np.cross(posed.joint_axis_w[t],
                                    points - posed.joint_origin_w[t])
    return jac


def world_candidates(hand, posed, indices, with_jacobian=True):
    """Contact candidates mapped to world: points, normals, and jacobians
    (None when ``with_jacobian`` is off)."""
    indices = np.asarray(indices, dtype=np.int64)
    if len(indices) and (indices.min() < 0 or indices.max() >= hand.num_candidates):
        raise IndexError("contact candidate index out of range")
    links = hand.candidate_link[indices]
    pts_local = hand.candidate_point[indices]
    nrm_local = hand.candidate_normal[indices]
    points = np.empty((len(indices), 3))
    normals = np.empty((len(indices), 3))
    jac = np.empty((len(indices), 3, 6 + hand.dof)) if with_jacobian else None
    for i, (link, p, n) in enumerate(zip(links, pts_local, nrm_local)):
        points[i] = posed.rot[link] @ p + posed.pos[link]
        normals[i] = posed.rot[link] @ n
        if with_jacobian:
            jac[i] = point_jacobian(hand, posed, link, points[i][None])[0]
    return points, normals, jac


def world_spheres(hand, posed, with_jacobian=True):
    """Self-penetration proxy spheres in world frame with jacobians."""
    n = len(hand.sphere_link)
    centers = np.empty((n, 3))
    jac = np.empty((n, 3, 6 + hand.dof)) if with_jacobian else None
    for i in range(n):
        link = hand.sphere_link[i]
        centers[i] = posed.rot[link] @ hand.sphere_center[i] + posed.pos[link]
        if with_jacobian:
            jac[i] = point_jacobian(hand, posed, link, centers[i][None])[0]
    return centers, hand.sphere_radius, hand.sphere_link, jac


def hand_surface(hand, posed, k_per_link, rng):
    """Area-weighted surface samples of every link mesh, in world frame.

    Returns (SurfaceSamples, link_ids). Links are visited in index order so
    the draw sequence is reproducible for a fixed generator.
    """
    points, normals, fids, links = [], [], [], []
    for link, mesh in enumerate(hand.link_meshes):
        if mesh is None:
            continue
        s = mesh.sample_surface(k_per_link, rng)
        points.append(s.points @ posed.rot[link].T + posed.pos[link])
        normals.append(s.normals @ posed.rot[link].T)
        fids.append(s.face_ids)
        links.append(np.full(len(s), link, dtype=np.int32))
    samples = SurfaceSamples(points=np.concatenate(points),
                             normals=np.concatenate(normals),
                             face_ids=np.concatenate(fids))
    return samples, np.concatenate(links)


def hand_point_depths(hand, posed, points):
    """Union penetration depth of world points into the posed hand.

    depth(v) = max over links of max(0, -signed_distance_link(v)); also
    returns the deepest link per point (-1 when outside every link) and the
    world-frame distance gradient there, for chaining through jacobians.
    Points outside a link's local bounding box are culled exactly (outside
    the box implies outside the mesh).
    """
    points = np.atleast_2d(points)
    q = len(points)
    depth = np.zeros(q)
    deepest = np.full(q, -1, dtype=np.int32)
    grad = np.zeros((q, 3))
    for link, mesh in enumerate(hand.link_meshes):
        if mesh is None:
            continue
        lo, hi = hand.link_bounds[link]
        local = (points - posed.pos[link]) @ posed.rot[link]
        box = np.all((local >= lo) & (local <= hi), axis=1)
        if not box.any():
            continue
        cand = np.nonzero(box)[0]
        inside = mesh.contains(local[cand])
        if not inside.any():
            continue
        cand = cand[inside]
        dist, nearest, fid = mesh.closest_points(local[cand])
        better = dist > depth[cand]
        cand = cand[better]
        if not len(cand):
            continue
        dist = dist[better]
        nearest = nearest[better]
        fid = fid[better]
        g_local = np.empty((len(cand), 3))
        safe = dist > NEAR_SURFACE
        g_local[safe] = (nearest[safe] - local[cand][safe]) / dist[safe, None]
        if np.any(~safe):
            g_local[~safe] = mesh.face_normals()[fid[~safe]]
        depth[cand] = dist
        deepest[cand] = link
        grad[cand] = g_local @ posed.rot[link].T
    return depth, deepest, grad
