import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisurf import core
from heisurf.poly import DimensionError, Poly, random_poly


def rand_point(rng, n, scale=2.0):
    return rng.uniform(-scale, scale, 2 * n + 1)


def test_symplectic_q_examples():
    assert core.symplectic_q([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert core.symplectic_q([0.0, 1.0], [1.0, 0.0]) == 1.0
    assert core.symplectic_q([1, 2, 3, 4], [5, 6, 7, 8]) == 16.0
    # scripted re-evaluation of the same sum
    z, zp = np.array([1, 2, 3, 4.0]), np.array([5, 6, 7, 8.0])
    assert sum(zp[j] * z[2 + j] - z[j] * zp[2 + j] for j in range(2)) == 16.0
    with pytest.raises(DimensionError):
        core.symplectic_q([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])


def test_group_mul_hand_example():
    np.testing.assert_array_equal(core.group_mul([1.0, 0, 0], [0, 1.0, 0]), [1, 1, -1])


def test_identity_inverse_and_mismatch(rng):
    for n in (1, 2, 3):
        p = rand_point(rng, n)
        np.testing.assert_array_equal(core.group_mul(p, core.origin(n)), p)
        np.testing.assert_allclose(core.group_mul(p, core.group_inv(p)), 0, atol=1e-14)
        np.testing.assert_allclose(core.group_mul(core.group_inv(p), p), 0, atol=1e-14)
    np.testing.assert_array_equal(core.group_inv(core.origin(2)), 0)
    with pytest.raises(DimensionError):
        core.group_mul(np.zeros(3), np.zeros(5))
    with pytest.raises(DimensionError):
        core.group_mul(np.zeros(4), np.zeros(4))


def test_associativity(rng):
    for n in (1, 2, 3):
        for _ in range(100):
            p, q, r = (rand_point(rng, n) for _ in range(3))
            a = core.group_mul(core.group_mul(p, q), r)
            b = core.group_mul(p, core.group_mul(q, r))
            np.testing.assert_allclose(a, b, atol=1e-12)


def test_dilations(rng):
    p, q = rand_point(rng, 2), rand_point(rng, 2)
    np.testing.assert_array_equal(core.dilate(1.0, p), p)
    np.testing.assert_allclose(core.dilate(2.0, core.dilate(0.3, p)), core.dilate(0.6, p), atol=1e-14)
    np.testing.assert_allclose(core.dilate(1.7, core.group_mul(p, q)),
                               core.group_mul(core.dilate(1.7, p), core.dilate(1.7, q)), atol=1e-12)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            core.dilate(bad, p)


def test_left_translation(rng):
    p, q = rand_point(rng, 2), rand_point(rng, 2)
    np.testing.assert_array_equal(core.left_translate(core.origin(2), p), p)
    np.testing.assert_allclose(core.left_translate(q, core.left_translate(core.group_inv(q), p)), p, atol=1e-13)
    np.testing.assert_array_equal(core.left_translate(q, core.origin(2)), q)


def test_complex_structure(rng):
    np.testing.assert_array_equal(core.j_apply([1.0, 0, 0, 0]), [0, 0, 1.0, 0])
    for _ in range(20):
        u, v = rng.normal(size=6), rng.normal(size=6)
        np.testing.assert_allclose(core.j_apply(core.j_apply(v)), -v, atol=1e-14)
        assert abs(core.j_apply(v) @ v) < 1e-14
        assert core.j_apply(u) @ core.j_apply(v) == pytest.approx(u @ v, abs=1e-14)


def test_frame_vectors():
    n = 2
    p = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    np.testing.assert_array_equal(core.frame_vector(5, p), [0, 0, 0, 0, 1])
    np.testing.assert_array_equal(core.frame_vector(1, core.origin(n)), [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(core.frame_vector(1, p), [1, 0, 0, 0, 3])
    np.testing.assert_array_equal(core.frame_vector(4, p), [0, 0, 0, 1, -2])
    with pytest.raises(IndexError):
        core.frame_vector(0, p)
    with pytest.raises(IndexError):
        core.frame_vector(6, p)
    M = core.frame_matrix(p)
    for i in range(5):
        np.testing.assert_array_equal(M[i], core.frame_vector(i + 1, p))


def test_symbolic_commutators(rng):
    for n in (1, 2, 3):
        nv = 2 * n + 1
        # integer coefficients keep every symbolic operation exact in floating point
        f = Poly(nv, {e: float(round(c * 10)) for e, c in random_poly(rng, nv, 4, n_terms=10).items()})
        T = core.frame_apply(nv, f, n)
        for i in range(1, nv + 1):
            for j in range(1, nv + 1):
                c = core.frame_commutator(i, j, f, n)
                if j == i + n and i <= n:
                    assert c == T * -2.0
                elif i == j + n and j <= n:
                    assert c == T * 2.0
                else:
                    assert c.is_zero()


def test_commutator_finite_difference(rng):
    # [X_1, Y_1] f = -2 T f through numerical directional derivatives
    f = random_poly(rng, 3, 3)
    p = rng.uniform(-1, 1, 3)
    h = 1e-4

    def Z(i, g):
        return lambda x: (g(x + h * core.frame_vector(i, x)) - g(x - h * core.frame_vector(i, x))) / (2 * h)

    lhs = Z(1, Z(2, f))(p) - Z(2, Z(1, f))(p)
    rhs = -2 * core.frame_apply(3, f, 1)(p)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_euclid_frame_roundtrip(rng):
    p = rand_point(rng, 2)
    v = rng.normal(size=4)
    u = core.hvec_to_euclid(v, p)
    c = core.euclid_to_frame(u, p)
    np.testing.assert_allclose(c[:4], v, atol=1e-14)
    assert abs(c[-1]) < 1e-14


def test_block_rotation(rng):
    R = core.BlockRotation.random(3, rng)
    M = R.matrix
    np.testing.assert_allclose(M.T @ M, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(R.transpose().matrix, M.T, atol=0)
    with pytest.raises(ValueError):
        core.BlockRotation(np.eye(2) * 1.1, np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        core.BlockRotation(np.eye(2), np.zeros((3, 3)))
    p = rand_point(rng, 3)
    ident = core.BlockRotation(np.eye(3), np.zeros((3, 3)))
    np.testing.assert_array_equal(core.pseudoherm_transform(ident, p), p)


def test_rotation_is_group_automorphism(rng):
    for _ in range(20):
        R = core.BlockRotation.random(2, rng)
        p, q = rand_point(rng, 2), rand_point(rng, 2)
        np.testing.assert_allclose(core.pseudoherm_transform(R, core.group_mul(p, q)),
                                   core.group_mul(core.pseudoherm_transform(R, p), core.pseudoherm_transform(R, q)),
                                   atol=1e-12)
        v, s = rng.normal(size=4), rng.uniform(-2, 2)
        np.testing.assert_allclose(core.pseudoherm_transform(R, core.ray_point(p, v, s)),
                                   core.ray_point(core.pseudoherm_transform(R, p),
                                                  core.pseudoherm_pushforward(R, v), s), atol=1e-12)


def test_rotation_from_unitary_matches_complex_action(rng):
    R = core.BlockRotation.random(2, rng)
    U = R.A - 1j * R.B
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    w = U @ z
    out = R.matrix @ np.concatenate([z.real, z.imag])
    np.testing.assert_allclose(out, np.concatenate([w.real, w.imag]), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=15, max_size=15))
def test_associativity_property(vals):
    p, q, r = np.array(vals[:5]), np.array(vals[5:10]), np.array(vals[10:])
    np.testing.assert_allclose(core.group_mul(core.group_mul(p, q), r),
                               core.group_mul(p, core.group_mul(q, r)), atol=1e-12)
