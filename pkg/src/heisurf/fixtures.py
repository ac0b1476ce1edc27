"""Frozen inputs and regression values for the reproduction suite."""

import numpy as np

from heisurf import surface as sf
from heisurf.poly import Poly

SEED = 20240611

# a1 x1 + a2 x2 + b1 y1 + b2 y2 + t + d = 0 in H^2
HYPERPLANE_A = (1.0, -2.0)
HYPERPLANE_B = (0.5, 0.0)
HYPERPLANE_D = 3.0

# max |h~|^2 of the saddle on the 21^4 grid over [-1, 1]^4 (Frobenius route),
# attained next to the characteristic line at (-1, -0.1, -1, 0)
SADDLE_GRID_MAX_TILDE_H_SQ = 200.00000000000009

# saddle ray leaving the surface at a non-characteristic point:
# base point over z, direction = normalized combination of the tangent basis
SADDLE_WITNESS_Z = (0.5, 0.3, -0.2, 0.4)
SADDLE_WITNESS_COEFFS = (1.0, 2.0, 3.0)


def reference_hyperplane() -> sf.Implicit:
    return sf.hyperplane(HYPERPLANE_A, HYPERPLANE_B, 1.0, HYPERPLANE_D)


def saddle_witness():
    S = sf.saddle(2)
    p = S.parametrize(np.array(SADDLE_WITNESS_Z))
    E = sf.horizontal_tangent_basis(S, p)
    w = np.array(SADDLE_WITNESS_COEFFS) @ E
    return S, p, w / np.linalg.norm(w)


def geodesic_graph() -> Poly:
    """phi(xi1, xi2, eta2, tau) = 0.1 xi2^2 + 0.05 tau."""
    return Poly(4, {(0, 2, 0, 0): 0.1, (0, 0, 0, 1): 0.05})


GEODESIC_Q0 = (0.1, 0.2, -0.1, 0.05)
GEODESIC_DIRECTIONS = 4
GEODESIC_BOX = sf.Box(-5.0 * np.ones(4), 5.0 * np.ones(4))
