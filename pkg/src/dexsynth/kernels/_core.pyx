# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance/containment kernels.

BVH-accelerated closest-point queries and exact generalized winding numbers.
Semantics match ``numpy_backend`` exactly: identical per-face arithmetic
(the build disables FP contraction) and lowest-face-id tie-breaking.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, atan2, sqrt

cnp.import_array()

NAME = "compiled"

DEF STACK_CAP = 128


cdef inline double _closest_on_triangle(
        double px, double py, double pz,
        double ax, double ay, double az,
        double bx, double by, double bz,
        double cx, double cy, double cz,
        double* ox, double* oy, double* oz) noexcept nogil:
    """Ericson region walk; writes the closest point, returns squared distance."""
    cdef double abx = bx - ax, aby = by - ay, abz = bz - az
    cdef double acx = cx - ax, acy = cy - ay, acz = cz - az
    cdef double apx = px - ax, apy = py - ay, apz = pz - az
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double bpx = px - bx, bpy = py - by, bpz = pz - bz
    cdef double d3 = abx * bpx + aby * bpy + abz * bpz
    cdef double d4 = acx * bpx + acy * bpy + acz * bpz
    cdef double cpx = px - cx, cpy = py - cy, cpz = pz - cz
    cdef double d5 = abx * cpx + aby * cpy + abz * cpz
    cdef double d6 = acx * cpx + acy * cpy + acz * cpz
    cdef double vc = d1 * d4 - d3 * d2
    cdef double vb = d5 * d2 - d1 * d6
    cdef double va = d3 * d6 - d5 * d4
    cdef double v, w, denom, dx, dy, dz

    if d1 <= 0.0 and d2 <= 0.0:
        ox[0] = ax; oy[0] = ay; oz[0] = az
    elif d3 >= 0.0 and d4 <= d3:
        ox[0] = bx; oy[0] = by; oz[0] = bz
    elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        ox[0] = ax + v * abx; oy[0] = ay + v * aby; oz[0] = az + v * abz
    elif d6 >= 0.0 and d5 <= d6:
        ox[0] = cx; oy[0] = cy; oz[0] = cz
    elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        ox[0] = ax + w * acx; oy[0] = ay + w * acy; oz[0] = az + w * acz
    elif va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        ox[0] = bx + w * (cx - bx); oy[0] = by + w * (cy - by); oz[0] = bz + w * (cz - bz)
    else:
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        ox[0] = (ax + v * abx) + w * acx
        oy[0] = (ay + v * aby) + w * acy
        oz[0] = (az + v * abz) + w * acz

    dx = px - ox[0]; dy = py - oy[0]; dz = pz - oz[0]
    return dx * dx + dy * dy + dz * dz


cdef inline double _box_sqdist(double px, double py, double pz,
                               const double* mn, const double* mx) noexcept nogil:
    cdef double acc = 0.0, d
    if px < mn[0]:
        d = mn[0] - px; acc += d * d
    elif px > mx[0]:
        d = px - mx[0]; acc += d * d
    if py < mn[1]:
        d = mn[1] - py; acc += d * d
    elif py > mx[1]:
        d = py - mx[1]; acc += d * d
    if pz < mn[2]:
        d = mn[2] - pz; acc += d * d
    elif pz > mx[2]:
        d = pz - mx[2]; acc += d * d
    return acc


def closest_points(const double[:, ::1] queries, const double[:, ::1] vertices, const int[:, ::1] faces,
                   const double[:, ::1] node_min, const double[:, ::1] node_max,
                   const int[::1] node_left, const int[::1] node_right, const int[::1] prim_index):
    """Nearest surface point per query via BVH traversal.

    Returns (sqdist (Q,), nearest (Q,3), face_id (Q,)). Nodes are pruned only
    when strictly farther than the current best so exact ties still resolve
    to the lowest face index, matching brute force.
    """
    cdef Py_ssize_t nq = queries.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sq_arr = np.empty(nq, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] near_arr = np.empty((nq, 3), dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] fid_arr = np.empty(nq, dtype=np.int32)
    cdef double[::1] sq = sq_arr
    cdef double[:, ::1] near = near_arr
    cdef int[::1] fid = fid_arr

    cdef int stack[STACK_CAP]
    cdef int top, node, left, right, start, count, k, f, best_f
    cdef Py_ssize_t i
    cdef double px, py, pz, best, d2, dl, dr
    cdef double cpx, cpy, cpz, bx, by, bz

    with nogil:
        for i in range(nq):
            px = queries[i, 0]; py = queries[i, 1]; pz = queries[i, 2]
            best = 1e300
            best_f = -1
            bx = px; by = py; bz = pz
            top = 0
            stack[top] = 0
            top += 1
            while top > 0:
                top -= 1
                node = stack[top]
                if _box_sqdist(px, py, pz, &node_min[node, 0], &node_max[node, 0]) > best:
                    continue
                left = node_left[node]
                if left < 0:
                    start = -(left + 1)
                    count = node_right[node]
                    for k in range(start, start + count):
                        f = prim_index[k]
                        d2 = _closest_on_triangle(
                            px, py, pz,
                            vertices[faces[f, 0], 0], vertices[faces[f, 0], 1], vertices[faces[f, 0], 2],
                            vertices[faces[f, 1], 0], vertices[faces[f, 1], 1], vertices[faces[f, 1], 2],
                            vertices[faces[f, 2], 0], vertices[faces[f, 2], 1], vertices[faces[f, 2], 2],
                            &cpx, &cpy, &cpz)
                        if d2 < best or (d2 == best and f < best_f):
                            best = d2
                            best_f = f
                            bx = cpx; by = cpy; bz = cpz
                else:
                    right = node_right[node]
                    dl = _box_sqdist(px, py, pz, &node_min[left, 0], &node_max[left, 0])
                    dr = _box_sqdist(px, py, pz, &node_min[right, 0], &node_max[right, 0])
                    # push the farther child first so the nearer is popped first
                    if dl <= dr:
                        if dr <= best:
                            stack[top] = right; top += 1
                        if dl <= best:
                            stack[top] = left; top += 1
                    else:
                        if dl <= best:
                            stack[top] = left; top += 1
                        if dr <= best:
                            stack[top] = right; top += 1
            sq[i] = best
            near[i, 0] = bx; near[i, 1] = by; near[i, 2] = bz
            fid[i] = best_f
    return sq_arr, near_arr, fid_arr


def winding_numbers(const double[:, ::1] queries, const double[:, ::1] vertices, const int[:, ::1] faces):
    """Generalized winding number at each query (van Oosterom & Strackee)."""
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t nf = faces.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nq, dtype=np.float64)
    cdef double[::1] w = out
    cdef Py_ssize_t i, f
    cdef double px, py, pz, acc
    cdef double axx, axy, axz, bxx, bxy, bxz, cxx, cxy, cxz
    cdef double la, lb, lc, num, den
    cdef double cbx, cby, cbz

    with nogil:
        for i in range(nq):
            px = queries[i, 0]; py = queries[i, 1]; pz = queries[i, 2]
            acc = 0.0
            for f in range(nf):
                axx = vertices[faces[f, 0], 0] - px
                axy = vertices[faces[f, 0], 1] - py
                axz = vertices[faces[f, 0], 2] - pz
                bxx = vertices[faces[f, 1], 0] - px
                bxy = vertices[faces[f, 1], 1] - py
                bxz = vertices[faces[f, 1], 2] - pz
                cxx = vertices[faces[f, 2], 0] - px
                cxy = vertices[faces[f, 2], 1] - py
                cxz = vertices[faces[f, 2], 2] - pz
                la = sqrt(axx * axx + axy * axy + axz * axz)
                lb = sqrt(bxx * bxx + bxy * bxy + bxz * bxz)
                lc = sqrt(cxx * cxx + cxy * cxy + cxz * cxz)
                cbx = bxy * cxz - bxz * cxy
                cby = bxz * cxx - bxx * cxz
                cbz = bxx * cxy - bxy * cxx
                num = axx * cbx + axy * cby + axz * cbz
                den = (la * lb * lc
                       + (axx * bxx + axy * bxy + axz * bxz) * lc
                       + (bxx * cxx + bxy * cxy + bxz * cxz) * la
                       + (cxx * axx + cxy * axy + cxz * axz) * lb)
                acc += 2.0 * atan2(num, den)
            w[i] = acc / (4.0 * M_PI)
    return out
