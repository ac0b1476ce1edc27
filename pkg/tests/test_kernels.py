import numpy as np
import pytest

from heisurf import _pykernels
from heisurf.poly import random_poly

ck = pytest.importorskip("heisurf._ckernels")


def test_backends_agree_on_stack_eval(rng):
    p = random_poly(rng, 5, 5, n_terms=12)
    plan = p._jet_plan()
    X = rng.uniform(-1, 1, (50, 5))
    np.testing.assert_allclose(ck.eval_stack_batch(*plan, X), _pykernels.eval_stack_batch(*plan, X),
                               rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ck.eval_stack(*plan, X[0]), _pykernels.eval_stack(*plan, X[0]),
                               rtol=1e-13, atol=1e-13)


def test_backends_agree_on_rk4(rng):
    n = 2
    phi = random_poly(rng, 2 * n, 3, n_terms=6, scale=0.1)
    plan = phi._jet_plan()
    y0 = np.concatenate([rng.uniform(-0.2, 0.2, 2 * n), rng.normal(size=2 * n - 1) * 0.3])
    lo, hi = -np.ones(2 * n) * 5, np.ones(2 * n) * 5
    a = ck.rk4_geodesic(*plan, n, y0, 1e-2, 100, lo, hi)
    b = _pykernels.rk4_geodesic(*plan, n, y0, 1e-2, 100, lo, hi)
    assert a[1:] == b[1:]
    np.testing.assert_allclose(a[0][:a[1] + 1], b[0][:b[1] + 1], rtol=1e-11, atol=1e-12)


def test_rk4_box_exit_reported():
    from heisurf.poly import Poly
    phi = Poly(2)
    plan = phi._jet_plan()
    y0 = np.array([0.0, 0.0, 1.0])
    for mod in (ck, _pykernels):
        states, done, exited = mod.rk4_geodesic(*plan, 1, y0, 0.1, 100, np.array([-1.0, -1]), np.array([1.0, 1]))
        assert exited and done == 10
