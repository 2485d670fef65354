"""Backend parity and correctness of the distance/containment kernels."""

import numpy as np
import pytest

from _oracles import brute_force_closest
from _toys import cube_mesh, icosphere

from dexsynth import kernels


def _random_queries(n, scale=2.0, seed=1):
    return np.random.default_rng(seed).uniform(-scale, scale, size=(n, 3))


@pytest.fixture(scope="module")
def mesh():
    return icosphere(2, 1.0)  # 320 faces


def test_backend_selection_reports_name():
    assert kernels.BACKEND in ("compiled", "numpy")
    assert "numpy" in kernels.available_backends()


@pytest.mark.skipif("compiled" not in kernels.available_backends(),
                    reason="extension not built")
def test_closest_points_parity_between_backends(mesh):
    b = mesh.bvh
    q = _random_queries(500)
    args = (mesh.vertices, mesh.faces, b.node_min, b.node_max,
            b.node_left, b.node_right, b.prim_index)
    sq_c, near_c, fid_c = kernels.get_backend("compiled").closest_points(q, *args)
    sq_n, near_n, fid_n = kernels.get_backend("numpy").closest_points(q, *args)
    np.testing.assert_array_equal(fid_c, fid_n)
    np.testing.assert_allclose(sq_c, sq_n, rtol=0, atol=1e-15)
    np.testing.assert_allclose(near_c, near_n, rtol=0, atol=1e-15)


@pytest.mark.skipif("compiled" not in kernels.available_backends(),
                    reason="extension not built")
def test_winding_parity_between_backends(mesh):
    q = _random_queries(300)
    w_c = kernels.get_backend("compiled").winding_numbers(q, mesh.vertices, mesh.faces)
    w_n = kernels.get_backend("numpy").winding_numbers(q, mesh.vertices, mesh.faces)
    np.testing.assert_allclose(w_c, w_n, rtol=0, atol=1e-12)


def test_bvh_closest_matches_brute_force(mesh):
    q = _random_queries(400, seed=3)
    sq, near, fid = kernels.closest_points(
        q, mesh.vertices, mesh.faces, mesh.bvh.node_min, mesh.bvh.node_max,
        mesh.bvh.node_left, mesh.bvh.node_right, mesh.bvh.prim_index)
    sq_b, near_b, fid_b = brute_force_closest(mesh, q)
    np.testing.assert_allclose(np.sqrt(sq), np.sqrt(sq_b), rtol=0, atol=1e-9)
    np.testing.assert_array_equal(fid, fid_b)


def test_winding_inside_outside_cube():
    cube = cube_mesh(1.0)
    inside = np.array([[0.0, 0.0, 0.0], [0.3, -0.2, 0.4]])
    outside = np.array([[0.7, 0.0, 0.0], [2.0, 2.0, 2.0]])
    w_in = kernels.winding_numbers(inside, cube.vertices, cube.faces)
    w_out = kernels.winding_numbers(outside, cube.vertices, cube.faces)
    np.testing.assert_allclose(w_in, 1.0, atol=1e-10)
    np.testing.assert_allclose(w_out, 0.0, atol=1e-10)


def test_deep_bvh_on_large_mesh():
    big = icosphere(4, 1.0)  # 5120 faces
    q = _random_queries(50, seed=7)
    sq, _, fid = kernels.closest_points(
        q, big.vertices, big.faces, big.bvh.node_min, big.bvh.node_max,
        big.bvh.node_left, big.bvh.node_right, big.bvh.prim_index)
    sq_b, _, fid_b = brute_force_closest(big, q)
    np.testing.assert_allclose(sq, sq_b, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(fid, fid_b)
