"""Hypersurface representations and their first-order horizontal geometry.

Every representation reduces to a defining function F with S = {F = 0}:

* ``TGraph``: F = u(x, y) - t, so the normal is (Du, -1)/sqrt(1+|Du|^2)
* ``IntrinsicY1Graph``: F = y_1 - phi(Pi(p)), phi composed exactly into a polynomial
* ``Implicit``: F = f
* ``Helicoid`` (H^1 only): F = x sin t - y cos t

All geometric quantities are computed from the 2-jet of F, vectorized over a
leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from heisurf import core
from heisurf.poly import DimensionError, Jet2, Poly, poly_jet2, poly_jet2_batch

CHAR_TOL = 1e-8
MEMBER_TOL = 1e-9
GRAD_TOL = 1e-10


class SurfaceError(ValueError):
    pass


class NotOnSurfaceError(SurfaceError):
    pass


class CharacteristicPointError(SurfaceError):
    pass


class DomainError(SurfaceError):
    pass


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box corners must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError(f"empty box: lo={lo.tolist()} hi={hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def to_json(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


class ChartFunction(Protocol):
    """Anything usable as the graph function phi of an intrinsic graph."""

    nvars: int

    def value(self, q) -> float: ...

    def jet2(self, q) -> Jet2: ...


# ---------------------------------------------------------------------------
# representations


class Surface:
    """Base class; subclasses provide ``n`` and ``defining_jets``."""

    n: int
    kind: str = "surface"

    @property
    def ambient_dim(self) -> int:
        return 2 * self.n + 1

    def defining_poly(self) -> Poly | None:
        return None

    def check_region(self, P: np.ndarray) -> None:
        """Raise DomainError when a row of P lies outside the surface's region."""

    def defining_jets(self, P: np.ndarray):
        """(values (m,), gradients (m, 2n+1), Hessians (m, 2n+1, 2n+1)) of F."""
        raise NotImplementedError

    def defining_values(self, P: np.ndarray) -> np.ndarray:
        return self.defining_jets(P)[0]

    def membership_residual(self, p) -> float:
        P = _as_points(p, self.n)
        return float(abs(self.defining_values(P)[0]))

    def parametrize(self, params) -> np.ndarray:
        raise SurfaceError(f"{self.kind} surfaces have no global parametrization")


def _as_points(P, n: int) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or P.shape[1] != 2 * n + 1:
        raise DimensionError(f"expected points of H^{n} (2n+1 = {2 * n + 1} coordinates), got shape {P.shape}")
    return np.ascontiguousarray(P)


class _PolySurface(Surface):
    """Surfaces whose defining function is an ambient polynomial."""

    _F: Poly

    def defining_poly(self) -> Poly:
        return self._F

    def defining_jets(self, P):
        P = _as_points(P, self.n)
        self.check_region(P)
        return poly_jet2_batch(self._F, P)


@dataclass(eq=False)
class TGraph(_PolySurface):
    """S = {(z, u(z))} for a polynomial u in the 2n horizontal coordinates."""

    u: Poly
    kind: str = field(default="t-graph", init=False)

    def __post_init__(self):
        if self.u.nvars % 2:
            raise DimensionError(f"t-graph function needs 2n variables, got {self.u.nvars}")
        self.n = self.u.nvars // 2
        nv = 2 * self.n + 1
        self._F = self.u.embed(nv, list(range(2 * self.n))) - Poly.variable(nv, nv - 1)

    def parametrize(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.append(z, self.u(z))

    def parametrize_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        vals = poly_jet2_batch(self.u, Z)[0] if len(Z) else np.zeros(0)
        return np.column_stack([Z, vals])


@dataclass(eq=False)
class Implicit(_PolySurface):
    """Regular level set {f = 0} of a polynomial in 2n+1 variables."""

    f: Poly
    region: Box | None = None
    kind: str = field(default="implicit", init=False)

    def __post_init__(self):
        if self.f.nvars % 2 == 0:
            raise DimensionError(f"ambient polynomial needs 2n+1 variables, got {self.f.nvars}")
        self.n = (self.f.nvars - 1) // 2
        self._F = self.f
        if self.region is not None:
            if self.region.dim != self.f.nvars:
                raise DimensionError("region box dimension must equal the ambient dimension")
            self._check_regular()

    def _check_regular(self, samples: int = 64):
        from scipy.stats import qmc

        pts = qmc.Halton(d=self.f.nvars, scramble=False).random(samples)
        pts = self.region.lo + pts * (self.region.hi - self.region.lo)
        grads = poly_jet2_batch(self.f, pts)[1]
        if np.min(np.linalg.norm(grads, axis=1)) <= GRAD_TOL:
            raise SurfaceError("defining polynomial has a vanishing gradient inside the region")

    def check_region(self, P):
        if self.region is None:
            return
        bad = np.any((P < self.region.lo) | (P > self.region.hi), axis=1)
        if np.any(bad):
            raise DomainError(f"point {P[np.argmax(bad)].tolist()} lies outside the region box")


@dataclass(eq=False)
class IntrinsicY1Graph(Surface):
    """Y_1-graph of phi over a box of R^{2n} with coordinates (xi, eta_2..eta_n, tau)."""

    phi: object
    box: Box
    kind: str = field(default="intrinsic-y1", init=False)

    def __post_init__(self):
        nv = self.phi.nvars
        if nv % 2:
            raise DimensionError(f"graph function needs 2n variables, got {nv}")
        self.n = nv // 2
        if self.box.dim != nv:
            raise DimensionError("domain box dimension must equal 2n")
        self._F = _compose_y1_defining(self.phi, self.n) if isinstance(self.phi, Poly) else None

    def defining_poly(self) -> Poly | None:
        return self._F

    def check_region(self, P):
        Q = project_pi_batch(P, self.n)
        bad = np.any((Q < self.box.lo) | (Q > self.box.hi), axis=1)
        if np.any(bad):
            raise DomainError(f"Pi(p) = {Q[np.argmax(bad)].tolist()} lies outside the graph domain")

    def defining_jets(self, P):
        P = _as_points(P, self.n)
        self.check_region(P)
        if self._F is not None:
            return poly_jet2_batch(self._F, P)
        return _y1_defining_chain_rule(self.phi, self.n, P)

    def parametrize(self, q) -> np.ndarray:
        return lift_psi(self.phi, q, self.box)


@dataclass(eq=False)
class Helicoid(Surface):
    """The H^1 surface (r cos th, r sin th, th), i.e. {x sin t - y cos t = 0}."""

    kind: str = field(default="helicoid", init=False)

    def __post_init__(self):
        self.n = 1

    def defining_jets(self, P):
        P = _as_points(P, 1)
        x, y, t = P[:, 0], P[:, 1], P[:, 2]
        s, c = np.sin(t), np.cos(t)
        F = x * s - y * c
        g = np.column_stack([s, -c, x * c + y * s])
        H = np.zeros((len(P), 3, 3))
        H[:, 0, 2] = H[:, 2, 0] = c
        H[:, 1, 2] = H[:, 2, 1] = s
        H[:, 2, 2] = -x * s + y * c
        return F, g, H

    def parametrize(self, rt) -> np.ndarray:
        r, th = float(rt[0]), float(rt[1])
        return np.array([r * np.cos(th), r * np.sin(th), th])

    @staticmethod
    def coordinate_fields(r: float, th: float):
        """Euclidean d/dr and d/dth of the parametrization."""
        return (np.array([np.cos(th), np.sin(th), 0.0]),
                np.array([-r * np.sin(th), r * np.cos(th), 1.0]))

    def membership_residual(self, p) -> float:
        # |z| sin(t - atan2(y, x)): the angular mismatch between the point and the sweep
        p = _as_points(p, 1)[0]
        r = np.hypot(p[0], p[1])
        return float(abs(r * np.sin(p[2] - np.arctan2(p[1], p[0]))))


@dataclass(eq=False)
class Pulled(Surface):
    """Image T(S) of a surface under a group map T, via F(T^{-1} x) and the chain rule."""

    base: Surface
    transform: "GroupMap"
    kind: str = field(default="transformed", init=False)

    def __post_init__(self):
        self.n = self.base.n
        self._inv = self.transform.inverse_polys(self.n)

    def defining_jets(self, P):
        P = _as_points(P, self.n)
        G, dG, ddG = zip(*(poly_jet2_batch(g, P) for g in self._inv))
        Y = np.column_stack(G)
        J = np.stack(dG, axis=1)                  # (m, 2n+1 out, 2n+1 in)
        Hg = np.stack(ddG, axis=1)                # (m, out, in, in)
        F, gF, HF = self.base.defining_jets(Y)
        grad = np.einsum("mi,mij->mj", gF, J)
        hess = np.einsum("mai,mab,mbj->mij", J, HF, J) + np.einsum("ma,maij->mij", gF, Hg)
        return F, grad, hess

    def membership_residual(self, p) -> float:
        P = _as_points(p, self.n)
        Y = np.array([[g(P[0]) for g in self._inv]])
        return self.base.membership_residual(Y[0])


# ---------------------------------------------------------------------------
# group maps acting on surfaces


class GroupMap:
    """Left translation, dilation or pseudohermitian rotation of H^n."""

    def apply(self, p) -> np.ndarray:
        raise NotImplementedError

    def push(self, w) -> np.ndarray:
        """Action on a horizontal ray direction."""
        raise NotImplementedError

    def inverse_polys(self, n: int) -> list[Poly]:
        raise NotImplementedError


@dataclass(frozen=True)
class Translation(GroupMap):
    q: np.ndarray

    def apply(self, p):
        return core.left_translate(self.q, p)

    def push(self, w):
        return np.asarray(w, dtype=float)

    def inverse_polys(self, n):
        qi = core.group_inv(self.q)
        nv = 2 * n + 1
        v = [Poly.variable(nv, i) for i in range(nv)]
        out = [v[i] + qi[i] for i in range(2 * n)]
        # t' = qi_t + t + Q(qi_z, z) = qi_t + t + sum(x_j qi_y_j - qi_x_j y_j)
        t = v[-1] + qi[-1]
        for j in range(n):
            t = t + v[j] * qi[n + j] - v[n + j] * qi[j]
        return out + [t]


@dataclass(frozen=True)
class Dilation(GroupMap):
    lam: float

    def apply(self, p):
        return core.dilate(self.lam, p)

    def push(self, w):
        # delta_lam(p . delta_s w) = delta_lam(p) . delta_s(lam w)
        return self.lam * np.asarray(w, dtype=float)

    def inverse_polys(self, n):
        nv = 2 * n + 1
        out = [Poly.variable(nv, i) * (1.0 / self.lam) for i in range(2 * n)]
        return out + [Poly.variable(nv, nv - 1) * (1.0 / self.lam ** 2)]


@dataclass(frozen=True)
class Rotation(GroupMap):
    R: core.BlockRotation

    def apply(self, p):
        return core.pseudoherm_transform(self.R, p)

    def push(self, w):
        return core.pseudoherm_pushforward(self.R, w)

    def inverse_polys(self, n):
        nv = 2 * n + 1
        Rt = self.R.matrix.T
        out = [Poly.linear(list(Rt[i]) + [0.0]) for i in range(2 * n)]
        return out + [Poly.variable(nv, nv - 1)]


def transform_surface(S: Surface, T: GroupMap) -> Surface:
    """T(S): exact polynomial substitution when S has a defining polynomial."""
    F = S.defining_poly()
    if F is not None and not isinstance(S, Pulled):
        region = getattr(S, "region", None)
        if region is not None or isinstance(S, IntrinsicY1Graph):
            # boxes are not preserved by the map; fall back to the unbounded level set
            pass
        return Implicit(F.compose(T.inverse_polys(S.n)))
    return Pulled(S, T)


# ---------------------------------------------------------------------------
# builtins


def vertical_hyperplane(a, b, c: float) -> Implicit:
    """<(a, b), (x, y)> = c."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or not np.any(np.concatenate([a, b])):
        raise SurfaceError("vertical hyperplane needs a nonzero (a, b) with len(a) == len(b)")
    return Implicit(Poly.linear(list(a) + list(b) + [0.0], -c))


def hyperplane(a, b, c: float, d: float) -> Implicit:
    """sum a_j x_j + sum b_j y_j + c t + d = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("a and b must have equal length")
    return Implicit(Poly.linear(list(a) + list(b) + [c], d))


def horizontal_plane(n: int) -> TGraph:
    """The plane {t = 0} as the t-graph of u = 0."""
    return TGraph(Poly(2 * n))


def saddle(n: int) -> TGraph:
    """t = x_1^2/2 - y_1^2/2 in H^n."""
    nv = 2 * n
    e = [0] * nv
    ex, ey = list(e), list(e)
    ex[0] = 2
    ey[n] = 2
    return TGraph(Poly(nv, {tuple(ex): 0.5, tuple(ey): -0.5}))


def helicoid() -> Helicoid:
    return Helicoid()


@dataclass(frozen=True)
class SaddleY1Chart:
    """Closed-form Y_1-graph chart of the saddle t = x_1^2/2 - y_1^2/2.

    Solving for y_1 in Pi-coordinates gives phi = xi_1 + branch*sqrt(2 xi_1^2 - 2 tau),
    valid where the radicand is positive; no polynomial chart exists.
    """

    n: int
    branch: int = 1

    @property
    def nvars(self) -> int:
        return 2 * self.n

    def _root(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.nvars,):
            raise DimensionError(f"expected {self.nvars} chart coordinates, got shape {q.shape}")
        r = 2.0 * q[0] ** 2 - 2.0 * q[-1]
        if r <= 0:
            raise DomainError(f"saddle chart undefined where 2 xi_1^2 - 2 tau <= 0 (got {r})")
        return q, np.sqrt(r)

    def value(self, q) -> float:
        q, S = self._root(q)
        return float(q[0] + self.branch * S)

    __call__ = value

    def jet2(self, q) -> Jet2:
        q, S = self._root(q)
        b = self.branch
        x = q[0]
        m = self.nvars
        g = np.zeros(m)
        g[0] = 1.0 + b * 2.0 * x / S
        g[-1] = -b / S
        H = np.zeros((m, m))
        H[0, 0] = b * (2.0 / S - 4.0 * x * x / S ** 3)
        H[0, -1] = H[-1, 0] = b * 2.0 * x / S ** 3
        H[-1, -1] = -b / S ** 3
        return Jet2(float(x + b * S), g, H)


# ---------------------------------------------------------------------------
# intrinsic graph machinery


def _compose_y1_defining(phi: Poly, n: int) -> Poly:
    nv = 2 * n + 1
    v = [Poly.variable(nv, i) for i in range(nv)]
    subs = [v[j] for j in range(n)]                   # xi_j -> x_j
    subs += [v[n + j] for j in range(1, n)]           # eta_j -> y_j, j >= 2
    subs.append(v[2 * n] + v[0] * v[n])               # tau -> t + x_1 y_1
    return v[n] - phi.compose(subs)


def _pi_jacobian(n: int, p: np.ndarray) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n + 1))
    for j in range(n):
        J[j, j] = 1.0
    for j in range(1, n):
        J[n + j - 1, n + j] = 1.0
    J[-1, -1] = 1.0
    J[-1, 0] = p[n]
    J[-1, n] = p[0]
    return J


def _y1_defining_chain_rule(phi, n: int, P: np.ndarray):
    m = P.shape[0]
    nv = 2 * n + 1
    F = np.empty(m)
    grad = np.empty((m, nv))
    hess = np.empty((m, nv, nv))
    for r in range(m):
        p = P[r]
        jet = phi.jet2(project_pi(p))
        J = _pi_jacobian(n, p)
        F[r] = p[n] - jet.value
        grad[r] = -J.T @ jet.gradient
        grad[r, n] += 1.0
        hess[r] = -J.T @ jet.hessian @ J
        hess[r, 0, n] -= jet.gradient[-1]
        hess[r, n, 0] -= jet.gradient[-1]
    return F, grad, hess


def project_pi(p) -> np.ndarray:
    """Pi(x, y, t) = (x, y_2..y_n, t + x_1 y_1)."""
    n = core.dim_of_point(p)
    return project_pi_batch(np.asarray(p, dtype=float)[None, :], n)[0]


def project_pi_batch(P: np.ndarray, n: int) -> np.ndarray:
    return np.column_stack([P[:, :n], P[:, n + 1:2 * n], P[:, 2 * n] + P[:, 0] * P[:, n]])


def _check_q(phi, q, box: Box | None) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (phi.nvars,):
        raise DimensionError(f"expected {phi.nvars} graph coordinates, got shape {q.shape}")
    if box is not None and not box.contains(q):
        raise DomainError(f"q = {q.tolist()} lies outside the graph domain")
    return q


def lift_psi(phi, q, box: Box | None = None) -> np.ndarray:
    """Psi(xi, eta, tau) = (xi, phi, eta, tau - xi_1 phi)."""
    q = _check_q(phi, q, box)
    n = phi.nvars // 2
    a = phi.value(q)
    return np.concatenate([q[:n], [a], q[n:2 * n - 1], [q[-1] - q[0] * a]])


@dataclass(frozen=True)
class GraphDerivatives:
    """phi(q) together with W^phi phi, X~_j phi, Y~_j phi (j = 2..n) and W."""

    alpha: float
    w_phi: float
    x_tilde: np.ndarray
    y_tilde: np.ndarray

    @property
    def W(self) -> float:
        return 1.0 + self.w_phi ** 2 + float(self.x_tilde @ self.x_tilde + self.y_tilde @ self.y_tilde)


def graph_derivatives(phi, q, box: Box | None = None, jet: Jet2 | None = None) -> GraphDerivatives:
    q = _check_q(phi, q, box)
    n = phi.nvars // 2
    if jet is None:
        jet = phi.jet2(q)
    g = jet.gradient
    phi_tau = g[-1]
    xi, eta = q[:n], q[n:2 * n - 1]
    return GraphDerivatives(
        alpha=jet.value,
        w_phi=g[0] + 2.0 * jet.value * phi_tau,
        x_tilde=g[1:n] + eta * phi_tau,
        y_tilde=g[n:2 * n - 1] - xi[1:] * phi_tau,
    )


def intrinsic_graph_frames(phi, q, box: Box | None = None) -> np.ndarray:
    """Rows E_1, E_2..E_n, F_2..F_n in Z-frame coefficients at Psi(q)."""
    d = graph_derivatives(phi, q, box)
    n = phi.nvars // 2
    frames = np.zeros((2 * n - 1, 2 * n))
    frames[0, 0] = 1.0
    frames[0, n] = d.w_phi
    for j in range(1, n):
        frames[j, j] = 1.0
        frames[j, n] = d.x_tilde[j - 1]
        frames[n + j - 1, n + j] = 1.0
        frames[n + j - 1, n] = d.y_tilde[j - 1]
    return frames


def intrinsic_normal(phi, q, box: Box | None = None) -> np.ndarray:
    """W^{-1/2} (W^phi phi X_1 + sum X~_j phi X_j - Y_1 + sum Y~_j phi Y_j)."""
    d = graph_derivatives(phi, q, box)
    n = phi.nvars // 2
    v = np.concatenate([[d.w_phi], d.x_tilde, [-1.0], d.y_tilde])
    assert v.shape == (2 * n,)
    return v / np.sqrt(d.W)


# ---------------------------------------------------------------------------
# normals and characteristic points


def _require_on(S: Surface, P: np.ndarray, F: np.ndarray, tol: float):
    bad = np.abs(F) >= tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NotOnSurfaceError(f"point {P[i].tolist()} is off the surface (residual {abs(F[i]):.3e})")


def _normals(S: Surface, P, tol_member: float):
    P = _as_points(P, S.n)
    F, g, H = S.defining_jets(P)
    _require_on(S, P, F, tol_member)
    gn = np.linalg.norm(g, axis=1)
    if np.any(gn <= GRAD_TOL):
        raise SurfaceError("degenerate defining gradient at a surface point")
    return P, F, g, H, gn


def euclidean_normal(S: Surface, p, tol_member: float = MEMBER_TOL) -> np.ndarray:
    """Euclidean unit normal; t-graphs follow (Du, -1), level sets follow +grad f."""
    if isinstance(S, Helicoid):
        _normals(S, p, tol_member)
        p = np.asarray(p, dtype=float)
        th = p[2]
        r = p[0] * np.cos(th) + p[1] * np.sin(th)
        a, b = Helicoid.coordinate_fields(r, th)
        N = np.cross(a, b)
        return N / np.linalg.norm(N)
    _, _, g, _, gn = _normals(S, p, tol_member)
    return g[0] / gn[0]


def horizontal_normal_raw(S: Surface, p, tol_member: float = MEMBER_TOL) -> np.ndarray:
    """N^H: components <N, Z_k> for k = 1..2n."""
    N = euclidean_normal(S, p, tol_member)
    Fm = core.frame_matrix(np.asarray(p, dtype=float))
    return Fm[:2 * S.n] @ N


def is_characteristic(S: Surface, p, tol: float = CHAR_TOL, tol_member: float = MEMBER_TOL) -> bool:
    return bool(np.linalg.norm(horizontal_normal_raw(S, p, tol_member)) <= tol)


@dataclass
class SurfacePointData:
    p: np.ndarray
    N: np.ndarray
    NH: np.ndarray
    nuH: np.ndarray | None
    TdH: float | None
    charFlag: bool


def surface_point_data(S: Surface, p, tol: float = CHAR_TOL, tol_member: float = MEMBER_TOL) -> SurfacePointData:
    p = np.asarray(p, dtype=float)
    N = euclidean_normal(S, p, tol_member)
    NH = core.frame_matrix(p)[:2 * S.n] @ N
    nh = float(np.linalg.norm(NH))
    if nh <= tol:
        return SurfacePointData(p, N, NH, None, None, True)
    return SurfacePointData(p, N, NH, NH / nh, float(N[-1] / nh), False)


def horizontal_normals_batch(S: Surface, P, tol_member: float = MEMBER_TOL):
    """Vectorized (G^H, |G^H|, T-component of grad F, grad F, Hess F) for rows of P.

    G^H_k = Z_k F is the unnormalized horizontal normal; nu^H = G^H/|G^H| and
    Td^H = dF/dt / |G^H| because both are invariant under rescaling F.
    """
    P, F, g, H, gn = _normals(S, P, tol_member)
    n = S.n
    Fm = core.frame_matrices(P, n)
    GH = np.einsum("mki,mi->mk", Fm[:, :2 * n], g)
    return P, GH, np.linalg.norm(GH, axis=1), g, H


# ---------------------------------------------------------------------------
# tangent bases


def tangent_bases(nu: np.ndarray, nonzero_tol: float = 1e-12) -> np.ndarray:
    """Orthonormal bases of nu^perp, shape (m, 2n-1, 2n), deterministically pivoted.

    Candidates are the projections Z_i - <Z_i, nu> nu. At each step the
    candidate with the largest residual norm is taken (lowest index on ties),
    orthogonalized twice against the chosen vectors, normalized, and its sign
    fixed so the first entry above ``nonzero_tol`` is positive.
    """
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    m, d = nu.shape
    C = np.eye(d)[None, :, :] - nu[:, :, None] * nu[:, None, :]
    basis = np.zeros((m, d - 1, d))
    used = np.zeros((m, d), dtype=bool)
    rows = np.arange(m)
    for k in range(d - 1):
        R = C.copy()
        for _ in range(2):
            if k:
                coef = np.einsum("mid,mjd->mij", R, basis[:, :k])
                R = R - np.einsum("mij,mjd->mid", coef, basis[:, :k])
        norms = np.linalg.norm(R, axis=2)
        norms[used] = -1.0
        pick = np.argmax(norms, axis=1)
        used[rows, pick] = True
        e = R[rows, pick] / norms[rows, pick][:, None]
        first = np.argmax(np.abs(e) > nonzero_tol, axis=1)
        sign = np.where(e[rows, first] < 0, -1.0, 1.0)
        basis[:, k] = e * sign[:, None]
    return basis


def horizontal_tangent_basis(S: Surface, p, tol: float = CHAR_TOL, tol_member: float = MEMBER_TOL) -> np.ndarray:
    """Orthonormal basis of HT_pS as rows (2n-1 of them)."""
    data = surface_point_data(S, p, tol, tol_member)
    if data.charFlag:
        raise CharacteristicPointError(f"p = {np.asarray(p).tolist()} is characteristic")
    return tangent_bases(data.nuH[None, :])[0]
