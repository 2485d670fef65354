"""Pure-numpy distance/containment kernels.

Same call signatures as the compiled extension ``dexsynth.kernels._core``.
Closest-point queries brute-force over all faces (vectorized, chunked); the
BVH arrays in the signature are accepted and ignored. Results are contracted
to be identical to the accelerated path: per-face arithmetic uses the same
operation order, and ties on exact squared distance resolve to the lowest
face index.
"""

import numpy as np

NAME = "numpy"

# queries x faces budget per chunk, keeps temporaries ~10 MB
_CHUNK_BUDGET = 500_000


def _dot3(u, v):
    # explicit component order matches the C kernel exactly
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _closest_on_triangles(p, a, b, c):
    """Closest point to ``p`` on each triangle (a, b, c).

    Vectorized region walk (Ericson, Real-Time Collision Detection ch. 5).
    All inputs broadcast against each other; returns points of the broadcast
    shape.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot3(ab, ap)
    d2 = _dot3(ac, ap)
    bp = p - b
    d3 = _dot3(ab, bp)
    d4 = _dot3(ac, bp)
    cp = p - c
    d5 = _dot3(ab, cp)
    d6 = _dot3(ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom

    m_a = (d1 <= 0.0) & (d2 <= 0.0)
    m_b = ~m_a & (d3 >= 0.0) & (d4 <= d3)
    seen = m_a | m_b
    m_ab = ~seen & (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
    seen |= m_ab
    m_c = ~seen & (d6 >= 0.0) & (d5 <= d6)
    seen |= m_c
    m_ac = ~seen & (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0)
    seen |= m_ac
    m_bc = ~seen & (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0)
    seen |= m_bc

    out = a + v_in[..., None] * ab + w_in[..., None] * ac
    out = np.where(m_bc[..., None], b + w_bc[..., None] * (c - b), out)
    out = np.where(m_ac[..., None], a + w_ac[..., None] * ac, out)
    out = np.where(m_c[..., None], c, out)
    out = np.where(m_ab[..., None], a + v_ab[..., None] * ab, out)
    out = np.where(m_b[..., None], b, out)
    out = np.where(m_a[..., None], a, out)
    return out


def closest_points(queries, vertices, faces,
                   node_min=None, node_max=None, node_left=None,
                   node_right=None, prim_index=None):
    """Nearest surface point per query over all faces.

    Returns (sqdist (Q,), nearest (Q,3), face_id (Q,)). Ties on exact squared
    distance go to the lowest face index.
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    nq = queries.shape[0]
    nf = faces.shape[0]
    tri_a = vertices[faces[:, 0]]
    tri_b = vertices[faces[:, 1]]
    tri_c = vertices[faces[:, 2]]

    sq = np.empty(nq)
    nearest = np.empty((nq, 3))
    fid = np.empty(nq, dtype=np.int32)
    step = max(1, _CHUNK_BUDGET // max(1, nf))
    for s in range(0, nq, step):
        e = min(nq, s + step)
        p = queries[s:e, None, :]
        pts = _closest_on_triangles(p, tri_a[None], tri_b[None], tri_c[None])
        d = p - pts
        dsq = _dot3(d, d)
        idx = np.argmin(dsq, axis=1)  # first minimum = lowest face id
        rows = np.arange(e - s)
        sq[s:e] = dsq[rows, idx]
        nearest[s:e] = pts[rows, idx]
        fid[s:e] = idx
    return sq, nearest, fid


def winding_numbers(queries, vertices, faces):
    """Generalized winding number of the mesh at each query point.

    Sum of signed solid angles over all faces / 4*pi (van Oosterom &
    Strackee). For watertight meshes this is ~1 inside and ~0 outside.
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    nq = queries.shape[0]
    nf = faces.shape[0]
    tri_a = vertices[faces[:, 0]]
    tri_b = vertices[faces[:, 1]]
    tri_c = vertices[faces[:, 2]]

    w = np.empty(nq)
    step = max(1, _CHUNK_BUDGET // max(1, nf))
    for s in range(0, nq, step):
        e = min(nq, s + step)
        a = tri_a[None] - queries[s:e, None, :]
        b = tri_b[None] - queries[s:e, None, :]
        c = tri_c[None] - queries[s:e, None, :]
        la = np.sqrt(_dot3(a, a))
        lb = np.sqrt(_dot3(b, b))
        lc = np.sqrt(_dot3(c, c))
        num = _dot3(a, np.cross(b, c))
        den = (la * lb * lc + _dot3(a, b) * lc
               + _dot3(b, c) * la + _dot3(c, a) * lb)
        w[s:e] = np.sum(2.0 * np.arctan2(num, den), axis=1) / (4.0 * np.pi)
    return w
