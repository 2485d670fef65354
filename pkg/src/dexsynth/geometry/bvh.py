"""Bounding-volume hierarchy over mesh faces.

Median split on the longest axis of face centroids, exact triangle bounds
per node. The tree is plain arrays so both kernel backends can consume it;
the exactness contract (identical answers to brute force) makes the
structure swappable.
"""

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 8


@dataclass(frozen=True)
class Bvh:
    node_min: np.ndarray   # (N, 3) float64
    node_max: np.ndarray   # (N, 3) float64
    node_left: np.ndarray  # (N,) int32; internal: left child, leaf: -(start+1)
    node_right: np.ndarray  # (N,) int32; internal: right child, leaf: count
    prim_index: np.ndarray  # (F,) int32 permutation of face ids


def build_bvh(vertices, faces, leaf_size=LEAF_SIZE):
    nf = len(faces)
    tri = vertices[faces]  # (F, 3, 3)
    tri_min = tri.min(axis=1)
    tri_max = tri.max(axis=1)
    centroid = tri.mean(axis=1)

    order = np.arange(nf, dtype=np.int64)
    node_min, node_max, node_left, node_right = [], [], [], []

    # (start, count) ranges over `order`; children patched after allocation
    stack = [(0, nf, -1, False)]
    while stack:
        start, count, parent, is_right = stack.pop()
        idx = len(node_min)
        seg = order[start:start + count]
        node_min.append(tri_min[seg].min(axis=0))
        node_max.append(tri_max[seg].max(axis=0))
        if parent >= 0:
            if is_right:
                node_right[parent] = idx
            else:
                node_left[parent] = idx
        if count <= leaf_size:
            node_left.append(-(start + 1))
            node_right.append(count)
            continue
        cen = centroid[seg]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        half = count // 2
        # argpartition gives a median split without a full sort
        part = np.argpartition(cen[:, axis], half)
        order[start:start + count] = seg[part]
        node_left.append(0)
        node_right.append(0)
        stack.append((start + half, count - half, idx, True))
        stack.append((start, half, idx, False))

    return Bvh(
        node_min=np.ascontiguousarray(node_min, dtype=np.float64),
        node_max=np.ascontiguousarray(node_max, dtype=np.float64),
        node_left=np.ascontiguousarray(node_left, dtype=np.int32),
        node_right=np.ascontiguousarray(node_right, dtype=np.int32),
        prim_index=np.ascontiguousarray(order, dtype=np.int32),
    )
