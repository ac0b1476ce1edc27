import numpy as np
import pytest

from heisurf import core
from heisurf import fixtures as fx
from heisurf import ruling as ru
from heisurf import surface as sf
from heisurf.poly import Poly


def vh_point(S, rng):
    n = S.n
    a0 = S.f.diff(0)(np.zeros(2 * n + 1))
    z = rng.uniform(-1, 1, 2 * n)
    z[0] -= S.f(np.append(z, 0.0)) / a0
    return np.append(z, rng.uniform(-2, 2))


def test_ray_points_match_group_law(rng):
    p, w = rng.normal(size=5), rng.normal(size=4)
    s = np.array([0.0, 0.3, -1.2, 5.0])
    X = ru.ray_points(p, w, s)
    for k in range(4):
        np.testing.assert_allclose(X[k], core.ray_point(p, w, s[k]), atol=1e-14)


def test_vertical_hyperplane_rays_stay(rng):
    S = sf.vertical_hyperplane([1.0, -0.5], [0.25, 2.0], 0.3)
    for _ in range(5):
        p = vh_point(S, rng)
        rep = ru.local_ruling_check(S, p, n_dirs=6, s_probe=10.0)
        assert rep.ruled
        assert rep.max_residual < 1e-12
        assert len(rep.verdicts) == 12


def test_horizontal_plane_locally_ruled():
    S = sf.horizontal_plane(2)
    rep = ru.local_ruling_check(S, [1.0, 0, 0, 0, 0], n_dirs=6, s_probe=10.0)
    assert rep.ruled and rep.max_residual < 1e-12


def test_helicoid_rulings():
    H = sf.helicoid()
    for r, th in ((0.5, 0.7), (-1.2, 2.0)):
        p = H.parametrize([r, th])
        v = ru.ray_scan(H, p, np.array([np.cos(th), np.sin(th)]))
        assert v.stays_within_horizon and v.max_residual_before_exit < 1e-10
        assert v.exit_s is None and v.endpoint_characteristic is None
    rep = ru.local_ruling_check(H, H.parametrize([0.5, 0.7]), n_dirs=3)
    assert rep.ruled and len(rep.verdicts) == 2


def test_saddle_witness_exits_noncharacteristically():
    S, p, w = fx.saddle_witness()
    v = ru.ray_scan(S, p, w)
    assert not v.stays_within_horizon
    assert v.endpoint_characteristic is False
    assert v.exit_NH > 0.1
    # the residual is s^2 (w1^2 - w3^2)/2 / |grad F(p)|; the exit is where it reaches tol
    g = np.linalg.norm(S.defining_jets(p)[1][0])
    s_exact = np.sqrt(2 * ru.RAY_TOL * g / abs(w[0] ** 2 - w[2] ** 2))
    assert v.exit_s == pytest.approx(s_exact, abs=2 * ru.DEFAULT_RAY_STEP * 1e-3)
    assert v.max_residual_before_exit <= ru.RAY_TOL
    assert not ru.local_ruling_check(S, p, n_dirs=4).ruled


def test_saddle_ruling_directions(rng):
    # w1 = w_{n+1} makes the second-order term vanish: these rays do stay
    S = sf.saddle(2)
    p = S.parametrize(np.array(fx.SADDLE_WITNESS_Z))
    E = sf.horizontal_tangent_basis(S, p)
    assert ru.ray_scan(S, p, E[0]).stays_within_horizon


def test_preconditions():
    S = sf.horizontal_plane(2)
    p = np.array([1.0, 0, 0, 0, 0])
    with pytest.raises(ru.RulingError):
        ru.ray_scan(S, p, [0.0, 0.0, 2.0, 0.0])
    nu = sf.surface_point_data(S, p).nuH
    with pytest.raises(ru.RulingError):
        ru.ray_scan(S, p, nu)
    with pytest.raises(sf.CharacteristicPointError):
        ru.ray_scan(S, core.origin(2), [1.0, 0, 0, 0])
    with pytest.raises(ValueError):
        ru.ray_scan(S, p, [0.0, 1.0, 0.0, 0.0], step=0.0)


def test_sphere_directions():
    D = ru.sphere_directions(3, 20)
    np.testing.assert_allclose(np.linalg.norm(D, axis=1), 1, atol=1e-14)
    np.testing.assert_array_equal(D, ru.sphere_directions(3, 20))
    assert ru.sphere_directions(1, 5).shape == (1, 1)


def test_translation_of_plane_is_hyperplane(rng):
    S = sf.horizontal_plane(2)
    p = S.parametrize(rng.uniform(-1, 1, 4))
    w = sf.horizontal_tangent_basis(S, p)[1]
    q = rng.uniform(-1, 1, 5)
    rows = ru.invariance_suite(S, p, w, q=q, residual_bound=1e-12)
    assert rows[0].ok and rows[0].image.stays_within_horizon
    TS, Tp, Tw, _ = ru.transformed_ray(S, sf.Translation(q), p, w)
    ref = sf.hyperplane(-q[2:4], q[:2], 1.0, -q[4])
    assert ref.membership_residual(Tp) < 1e-13
    assert ru.ray_scan(ref, Tp, Tw).max_residual_before_exit < 1e-12


def test_dilation_of_vertical_hyperplane(rng):
    S = sf.vertical_hyperplane([1.0, 2.0], [0.0, -1.0], 0.8)
    p = vh_point(S, rng)
    E = sf.horizontal_tangent_basis(S, p)
    TS, Tp, Tw, scale = ru.transformed_ray(S, sf.Dilation(1.5), p, E[0])
    # still a vertical hyperplane: no t dependence, linear in (x, y)
    F = TS.defining_poly()
    assert F.degree == 1 and F.diff(4).is_zero()
    rows = ru.invariance_suite(S, p, E[0], lam=1.5, residual_bound=1e-12)
    assert rows[0].ok


def test_invariance_of_saddle_witness(rng):
    S, p, w = fx.saddle_witness()
    for _ in range(3):
        rows = ru.invariance_suite(S, p, w, rng.uniform(-1, 1, 5), 1.3, core.BlockRotation.random(2, rng))
        for row in rows:
            assert row.ok
            assert not row.image.stays_within_horizon
            assert row.image.endpoint_characteristic is False
            assert row.exit_s_ratio == pytest.approx(1.0, rel=0.5)


def test_helicoid_invariance_uses_chain_rule(rng):
    H = sf.helicoid()
    th = 0.4
    p = H.parametrize([0.8, th])
    w = np.array([np.cos(th), np.sin(th)])
    rows = ru.invariance_suite(H, p, w, rng.uniform(-1, 1, 3), 0.7, core.BlockRotation.random(1, rng),
                               residual_bound=1e-10)
    assert all(r.ok and r.image.stays_within_horizon for r in rows)


def test_local_and_global_consistency(rng):
    # surfaces where every local check passes must not show non-characteristic exits
    for S in (sf.horizontal_plane(1), sf.vertical_hyperplane([1.0], [1.0], 0.0)):
        for _ in range(3):
            p = S.parametrize(rng.uniform(-1, 1, 2)) if isinstance(S, sf.TGraph) else vh_point(S, rng)
            rep = ru.local_ruling_check(S, p, n_dirs=2, s_probe=10.0)
            assert rep.ruled
            assert all(v.exit_s is None for v in rep.verdicts)
