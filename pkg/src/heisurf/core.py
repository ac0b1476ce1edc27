"""Group algebra of the Heisenberg group H^n in exponential coordinates.

Points are numpy arrays ``(x_1..x_n, y_1..y_n, t)`` of length 2n+1 and
horizontal vectors are arrays of length 2n holding coefficients over the
frame ``X_1..X_n, Y_1..Y_n``. The dimension n is read off the array length
and every binary operation insists both operands share it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heisurf.poly import DimensionError, Poly


def dim_of_point(p) -> int:
    p = np.asarray(p)
    if p.ndim != 1 or p.shape[0] < 3 or p.shape[0] % 2 == 0:
        raise DimensionError(f"a point of H^n needs 2n+1 >= 3 coordinates, got shape {p.shape}")
    return (p.shape[0] - 1) // 2


def dim_of_hvec(v) -> int:
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] < 2 or v.shape[0] % 2:
        raise DimensionError(f"a horizontal vector needs 2n >= 2 components, got shape {v.shape}")
    return v.shape[0] // 2


def point(x, y, t) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError("x and y blocks must have the same length")
    return np.concatenate([x, y, [float(t)]])


def origin(n: int) -> np.ndarray:
    return np.zeros(2 * n + 1)


def _pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if dim_of_point(p) != dim_of_point(q):
        raise DimensionError(f"points live in H^{dim_of_point(p)} and H^{dim_of_point(q)}")
    return p, q


def symplectic_q(z, zp) -> float:
    """``sum_j (x'_j y_j - x_j y'_j)`` for z = (x, y), z' = (x', y')."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    if z.shape != zp.shape:
        raise DimensionError(f"shape mismatch {z.shape} vs {zp.shape}")
    n = dim_of_hvec(z)
    x, y = z[:n], z[n:]
    xp, yp = zp[:n], zp[n:]
    return float(np.dot(xp, y) - np.dot(x, yp))


def group_mul(p, q) -> np.ndarray:
    p, q = _pair(p, q)
    out = p + q
    out[-1] = p[-1] + q[-1] + symplectic_q(p[:-1], q[:-1])
    return out


def group_inv(p) -> np.ndarray:
    dim_of_point(p)
    return -np.asarray(p, dtype=float)


def dilate(lam: float, p) -> np.ndarray:
    """Intrinsic dilation ``(z, t) -> (lam z, lam^2 t)``."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    dim_of_point(p)
    out = lam * np.asarray(p, dtype=float)
    out[-1] *= lam
    return out


def left_translate(q, p) -> np.ndarray:
    return group_mul(q, p)


def hvec_as_point(v) -> np.ndarray:
    """The identification of ``sum v_j Z_j`` with the point ``(v, 0)``."""
    dim_of_hvec(v)
    return np.append(np.asarray(v, dtype=float), 0.0)


def ray_point(p, v, s: float) -> np.ndarray:
    """``p . delta_s(v)`` for a horizontal vector v."""
    return group_mul(p, hvec_as_point(s * np.asarray(v, dtype=float)))


def j_apply(v) -> np.ndarray:
    """Complex structure: X_i -> Y_i, Y_i -> -X_i."""
    n = dim_of_hvec(v)
    v = np.asarray(v, dtype=float)
    return np.concatenate([-v[n:], v[:n]])


def frame_vector(i: int, p) -> np.ndarray:
    """Euclidean components of Z_i at p (1-based: X_j = Z_j, Y_j = Z_{n+j}, T = Z_{2n+1}).

    Uses Y_j = d/dy_j - x_j d/dt, the only choice consistent with
    [X_j, Y_j] = -2T.
    """
    n = dim_of_point(p)
    if not 1 <= i <= 2 * n + 1:
        raise IndexError(f"frame index {i} outside 1..{2 * n + 1}")
    p = np.asarray(p, dtype=float)
    e = np.zeros(2 * n + 1)
    e[i - 1] = 1.0
    if i <= n:
        e[-1] = p[n + i - 1]
    elif i <= 2 * n:
        e[-1] = -p[i - n - 1]
    return e


def frame_matrix(p) -> np.ndarray:
    """Rows are the Euclidean components of Z_1..Z_{2n+1} at p."""
    n = dim_of_point(p)
    return frame_matrices(np.asarray(p, dtype=float)[None, :], n)[0]


def frame_matrices(P: np.ndarray, n: int) -> np.ndarray:
    """Batched :func:`frame_matrix` over rows of ``P`` (shape (m, 2n+1))."""
    m = P.shape[0]
    F = np.broadcast_to(np.eye(2 * n + 1), (m, 2 * n + 1, 2 * n + 1)).copy()
    F[:, :n, -1] = P[:, n:2 * n]
    F[:, n:2 * n, -1] = -P[:, :n]
    return F


def hvec_to_euclid(v, p) -> np.ndarray:
    """Euclidean components of the horizontal vector ``sum v_i Z_i|_p``."""
    n = dim_of_point(p)
    if dim_of_hvec(v) != n:
        raise DimensionError("vector and point dimensions differ")
    return np.asarray(v, dtype=float) @ frame_matrix(p)[:2 * n]


def euclid_to_frame(u, p) -> np.ndarray:
    """Coefficients of a Euclidean vector u over Z_1..Z_{2n+1} at p."""
    n = dim_of_point(p)
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    c = u.copy()
    c[-1] = u[-1] - np.dot(u[:n], p[n:2 * n]) + np.dot(u[n:2 * n], p[:n])
    return c


# -- frame fields as operators on polynomials ---------------------------

def frame_apply(i: int, f: Poly, n: int) -> Poly:
    """Apply Z_i (1-based) to a polynomial in the ambient coordinates of H^n."""
    nv = 2 * n + 1
    if f.nvars != nv:
        raise DimensionError(f"expected a polynomial in {nv} variables, got {f.nvars}")
    if not 1 <= i <= nv:
        raise IndexError(f"frame index {i} outside 1..{nv}")
    out = f.diff(i - 1)
    if i <= n:
        out = out + Poly.variable(nv, n + i - 1) * f.diff(nv - 1)
    elif i <= 2 * n:
        out = out - Poly.variable(nv, i - n - 1) * f.diff(nv - 1)
    return out


def frame_commutator(i: int, j: int, f: Poly, n: int) -> Poly:
    """``[Z_i, Z_j] f`` computed symbolically."""
    return frame_apply(i, frame_apply(j, f, n), n) - frame_apply(j, frame_apply(i, f, n), n)


# -- pseudohermitian rotations -----------------------------------------

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class BlockRotation:
    """Orthogonal map ``R = [[A, B], [-B, A]]`` acting on (x, y)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise DimensionError(f"A and B must be equal square matrices, got {A.shape}, {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        R = self.matrix
        scale = max(1.0, np.linalg.norm(R))
        err = np.linalg.norm(R.T @ R - np.eye(R.shape[0]))
        if err > ORTHO_TOL * scale:
            raise ValueError(f"block matrix is not orthogonal (|R^T R - I| = {err:.3e})")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [-self.B, self.A]])

    @classmethod
    def from_unitary(cls, U) -> "BlockRotation":
        """R from a unitary U = A - iB acting on x + iy."""
        U = np.asarray(U, dtype=complex)
        return cls(U.real.copy(), -U.imag.copy())

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BlockRotation":
        Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        Qm, Rm = np.linalg.qr(Z)
        Qm = Qm * (np.diag(Rm) / np.abs(np.diag(Rm)))
        return cls.from_unitary(Qm)

    def transpose(self) -> "BlockRotation":
        return BlockRotation(self.A.T.copy(), -self.B.T.copy())


def pseudoherm_transform(R: BlockRotation, p) -> np.ndarray:
    """``(z, t) -> (R z, t)``."""
    n = dim_of_point(p)
    if R.n != n:
        raise DimensionError(f"rotation acts on H^{R.n}, point lives in H^{n}")
    p = np.asarray(p, dtype=float)
    return np.append(R.matrix @ p[:-1], p[-1])


def pseudoherm_pushforward(R: BlockRotation, v) -> np.ndarray:
    """Differential of the rotation on horizontal vectors: v -> R v."""
    if dim_of_hvec(v) != R.n:
        raise DimensionError("rotation and vector dimensions differ")
    return R.matrix @ np.asarray(v, dtype=float)
