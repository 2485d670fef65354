"""Mesh file IO: OBJ (ASCII), OFF, and STL input; OBJ export.

Polygonal faces are fan-triangulated. STL input welds exactly coincident
vertices so the usual triangle-soup output can still pass the watertight
check. Units are meters.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import MeshError
from .mesh import TriMesh


def load_mesh(path):
    """Load a mesh file by extension (.obj/.off/.stl), cleaned.

    Raises MeshError for unreadable files or meshes that are empty after
    degenerate-face cleanup.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"cannot read mesh file: {path}")
    ext = path.suffix.lower()
    if ext == ".obj":
        vertices, faces = _parse_obj(path)
    elif ext == ".off":
        vertices, faces = _parse_off(path)
    elif ext == ".stl":
        vertices, faces = _parse_stl(path)
    else:
        raise MeshError(f"unsupported mesh format: {path.suffix!r}")
    if len(vertices) == 0 or len(faces) == 0:
        raise MeshError(f"no triangles in {path}")
    return TriMesh(vertices, faces)


def _fan(indices, faces):
    for i in range(1, len(indices) - 1):
        faces.append((indices[0], indices[i], indices[i + 1]))


def _parse_obj(path):
    vertices = []
    faces = []
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise MeshError(f"cannot read mesh file: {path}") from exc
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            # index may be v, v/vt, v/vt/vn, or v//vn; negatives count from the end
            idx = []
            for tok in parts[1:]:
                raw = int(tok.split("/")[0])
                idx.append(raw - 1 if raw > 0 else len(vertices) + raw)
            _fan(idx, faces)
    return np.asarray(vertices, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def _parse_off(path):
    try:
        tokens = path.read_text().split()
    except (OSError, UnicodeDecodeError) as exc:
        raise MeshError(f"cannot read mesh file: {path}") from exc
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"not an OFF file: {path}")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4  # skip edge count
    vertices = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(tokens[pos])
        _fan([int(t) for t in tokens[pos + 1:pos + 1 + k]], faces)
        pos += 1 + k
    return vertices, np.asarray(faces, dtype=np.int64)


def _parse_stl(path):
    data = path.read_bytes()
    if data[:5] == b"solid" and b"facet" in data[:512]:
        tris = _parse_stl_ascii(data.decode("ascii", errors="replace"))
    else:
        tris = _parse_stl_binary(data, path)
    return _weld(np.asarray(tris, dtype=np.float64).reshape(-1, 3))


def _parse_stl_ascii(text):
    tris = []
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0] == "vertex":
            tris.append([float(x) for x in parts[1:4]])
    return tris


def _parse_stl_binary(data, path):
    if len(data) < 84:
        raise MeshError(f"truncated STL file: {path}")
    (count,) = struct.unpack_from("<I", data, 80)
    need = 84 + 50 * count
    if len(data) < need:
        raise MeshError(f"truncated STL file: {path}")
    raw = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    rec = raw.reshape(count, 50)[:, 12:48].copy()
    return rec.view("<f4").astype(np.float64).reshape(count * 3, 3)


def _weld(points):
    verts, inverse = np.unique(points, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    return verts, faces.astype(np.int64)


def save_obj(path, mesh=None, groups=None):
    """Write an OBJ file from one mesh or from named (name, vertices, faces)
    groups (one ``g`` block each, shared vertex numbering)."""
    path = Path(path)
    if groups is None:
        groups = [(None, mesh.vertices, mesh.faces)]
    lines = []
    offset = 0
    face_blocks = []
    for name, vertices, faces in groups:
        for v in vertices:
            lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        face_blocks.append((name, faces + offset + 1))
        offset += len(vertices)
    for name, faces in face_blocks:
        if name is not None:
            lines.append(f"g {name}")
        for f in faces:
            lines.append(f"f {f[0]} {f[1]} {f[2]}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise MeshError(f"cannot write {path}") from exc
    return path
