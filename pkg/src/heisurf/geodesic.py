"""Surface geodesics on intrinsic Y_1-graphs through the reduced first-order system.

A geodesic Gamma = Psi(gamma) is determined by gamma = (xi, eta~, tau) in the
graph domain. The doubled state is

    [xi (n), eta~ (n-1), tau, Xi = xi' (n), Eta' = eta~' (n-1)]   (4n-1 reals)

with tau' fixed by horizontality, tau' = 2 alpha Xi_1 + sum eta_j Xi_j - sum xi_j Eta'_j,
and the accelerations Xi_1' = -W^phi phi M / W, Xi_j' = -X~_j phi M / W,
Eta'_j' = -Y~_j phi M / W, where M = 2 phi_tau alpha' Xi_1 + <D^2 phi gamma', gamma'>.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from heisurf import core
from heisurf import surface as sf
from heisurf._backend import kernels
from heisurf._pykernels import geodesic_rhs_from_jet
from heisurf.poly import DimensionError, Poly

DEFAULT_STEP = 1e-3
TANGENT_TOL = 1e-9


class GeodesicError(ValueError):
    pass


@dataclass(frozen=True)
class GeodesicState:
    xi: np.ndarray
    eta: np.ndarray
    tau: float
    Xi: np.ndarray
    Eta_dot: np.ndarray

    @property
    def n(self) -> int:
        return len(self.xi)

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([self.xi, self.eta, [self.tau]])

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.xi, self.eta, [self.tau], self.Xi, self.Eta_dot])

    @classmethod
    def from_array(cls, y, n: int) -> "GeodesicState":
        y = np.asarray(y, dtype=float)
        if y.shape != (4 * n - 1,):
            raise DimensionError(f"state for n = {n} has 4n-1 = {4 * n - 1} entries, got shape {y.shape}")
        m = 2 * n
        return cls(y[:n].copy(), y[n:m - 1].copy(), float(y[m - 1]), y[m:m + n].copy(), y[m + n:].copy())


@dataclass
class Trajectory:
    s: np.ndarray           # (k,)
    states: np.ndarray      # (k, 4n-1)
    step: float
    n: int
    exited: bool = False

    @property
    def last_s(self) -> float:
        return float(self.s[-1])

    def state(self, i: int) -> GeodesicState:
        return GeodesicState.from_array(self.states[i], self.n)


def _phi_n(phi) -> int:
    if phi.nvars % 2:
        raise DimensionError(f"graph function needs 2n variables, got {phi.nvars}")
    return phi.nvars // 2


def _velocity(y: np.ndarray, alpha: float, n: int) -> np.ndarray:
    """gamma' = (Xi, Eta', tau') with tau' from the horizontality constraint."""
    m = 2 * n
    xi, eta, Xi, Hd = y[:n], y[n:m - 1], y[m:m + n], y[m + n:]
    tau_dot = 2.0 * alpha * Xi[0] + eta @ Xi[1:] - xi[1:] @ Hd
    return np.concatenate([Xi, Hd, [tau_dot]])


def m_term(phi, q, vel, box: sf.Box | None = None) -> float:
    """M = 2 phi_tau(q) alpha' xi_1' + vel^T D^2 phi(q) vel with alpha' = <vel, D phi(q)>."""
    q = sf._check_q(phi, q, box)
    vel = np.asarray(vel, dtype=float)
    if vel.shape != q.shape:
        raise DimensionError("velocity must have the same length as q")
    jet = phi.jet2(q)
    alpha_dot = vel @ jet.gradient
    return float(2.0 * jet.gradient[-1] * alpha_dot * vel[0] + vel @ jet.hessian @ vel)


def geodesic_rhs(phi, state, box: sf.Box | None = None) -> np.ndarray:
    """Time derivative of the doubled state (flat array in the state layout)."""
    n = _phi_n(phi)
    y = state.to_array() if isinstance(state, GeodesicState) else np.asarray(state, dtype=float)
    if y.shape != (4 * n - 1,):
        raise DimensionError(f"expected a state of length {4 * n - 1}, got shape {y.shape}")
    jet = phi.jet2(sf._check_q(phi, y[:2 * n], box))
    return geodesic_rhs_from_jet(n, y, jet.value, jet.gradient, jet.hessian)


def initial_state(phi, p, w, box: sf.Box | None = None, tol: float = TANGENT_TOL,
                  tol_member: float = sf.MEMBER_TOL) -> GeodesicState:
    """State at s = 0 for the geodesic through p with horizontal tangent velocity w."""
    n = _phi_n(phi)
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    if core.dim_of_point(p) != n or core.dim_of_hvec(w) != n:
        raise DimensionError("point, velocity and graph function dimensions differ")
    q = sf.project_pi(p)
    S = sf.IntrinsicY1Graph(phi, box) if box is not None else None
    if S is not None:
        data = sf.surface_point_data(S, p, tol_member=tol_member)
        if data.charFlag:
            raise sf.CharacteristicPointError(f"p = {p.tolist()} is characteristic")
    else:
        resid = abs(p[n] - phi.value(q))
        if resid >= tol_member:
            raise sf.NotOnSurfaceError(f"point is off the graph (residual {resid:.3e})")
    nu = sf.intrinsic_normal(phi, q, box)
    if abs(w @ nu) > tol:
        raise GeodesicError(f"w is not tangent to the surface (<w, nu> = {w @ nu:.3e})")
    d = sf.graph_derivatives(phi, q, box)
    alpha_dot = w[0] * d.w_phi + w[1:n] @ d.x_tilde + w[n + 1:] @ d.y_tilde
    if abs(alpha_dot - w[n]) > tol:
        raise GeodesicError(f"inconsistent Y_1 component: derived {alpha_dot!r}, given {w[n]!r}")
    return GeodesicState(q[:n].copy(), q[n:2 * n - 1].copy(), float(q[-1]), w[:n].copy(), w[n + 1:].copy())


def _box_arrays(phi, box: sf.Box | None):
    if box is None:
        return np.full(phi.nvars, -np.inf), np.full(phi.nvars, np.inf)
    return box.lo, box.hi


def integrate(phi, state0, step: float = DEFAULT_STEP, n_steps: int = 1000,
              box: sf.Box | None = None) -> Trajectory:
    """Classical RK4 with a fixed step; stops (exited=True) before leaving the box."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    n = _phi_n(phi)
    y0 = state0.to_array() if isinstance(state0, GeodesicState) else np.asarray(state0, dtype=float)
    if y0.shape != (4 * n - 1,):
        raise DimensionError(f"expected a state of length {4 * n - 1}, got shape {y0.shape}")
    sf._check_q(phi, y0[:2 * n], box)
    lo, hi = _box_arrays(phi, box)
    if isinstance(phi, Poly):
        exps, coeffs, offsets = phi._jet_plan()
        states, done, exited = kernels.rk4_geodesic(exps, coeffs, offsets, n, np.ascontiguousarray(y0),
                                                    float(step), int(n_steps), lo, hi)
    else:
        states, done, exited = _rk4_generic(phi, n, y0, step, n_steps, lo, hi)
    states = np.asarray(states)[:done + 1].copy()
    return Trajectory(step * np.arange(done + 1), states, float(step), n, bool(exited))


def _rk4_generic(phi, n, y0, h, nsteps, lo, hi):
    """RK4 for closed-form charts; mirrors the compiled loop."""
    m = 2 * n

    def f(y):
        if np.any(y[:m] < lo) or np.any(y[:m] > hi):
            raise sf.DomainError("RK4 stage left the graph domain")
        j = phi.jet2(y[:m])
        return geodesic_rhs_from_jet(n, y, j.value, j.gradient, j.hessian)

    states = np.empty((nsteps + 1, len(y0)))
    states[0] = y0
    y = y0.copy()
    for k in range(nsteps):
        try:
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
        except sf.DomainError:
            return states, k, True
        y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            raise FloatingPointError(f"non-finite geodesic state after step {k + 1}")
        if np.any(y_new[:m] < lo) or np.any(y_new[:m] > hi):
            return states, k, True
        states[k + 1] = y_new
        y = y_new
    return states, nsteps, False


def reversed_state(state: GeodesicState) -> GeodesicState:
    return GeodesicState(state.xi, state.eta, state.tau, -state.Xi, -state.Eta_dot)


# ---------------------------------------------------------------------------
# lifting


@dataclass(frozen=True)
class LiftedSample:
    s: float
    point: np.ndarray        # Psi(gamma(s))
    velocity: np.ndarray     # horizontal frame coefficients of Gamma'
    surface_residual: float
    horizontality_residual: float

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


def _psi_jacobian(n: int, q: np.ndarray, alpha: float, grad: np.ndarray) -> np.ndarray:
    """Euclidean Jacobian of Psi at q (rows: x, y, t; columns: xi, eta~, tau)."""
    m = 2 * n
    J = np.zeros((m + 1, m))
    for j in range(n):
        J[j, j] = 1.0
    J[n] = grad
    for j in range(1, n):
        J[n + j, n + j - 1] = 1.0
    J[m] = -q[0] * grad
    J[m, m - 1] += 1.0
    J[m, 0] -= alpha
    return J


def lift_trajectory(phi, traj: Trajectory) -> list[LiftedSample]:
    """Gamma(s) = Psi(gamma(s)) with Gamma' = sum Xi_j X_j + alpha' Y_1 + sum Eta'_j Y_j.

    The horizontality residual is the T-coefficient of d/ds Psi(gamma(s))
    obtained through the Euclidean chain rule, independently of the
    assembled horizontal velocity.
    """
    n = traj.n
    m = 2 * n
    out = []
    for s, y in zip(traj.s, traj.states):
        q = y[:m]
        jet = phi.jet2(q)
        vel = _velocity(y, jet.value, n)
        alpha_dot = vel @ jet.gradient
        point = np.concatenate([q[:n], [jet.value], q[n:m - 1], [q[-1] - q[0] * jet.value]])
        hv = np.concatenate([y[m:m + n], [alpha_dot], y[m + n:]])
        euclid = _psi_jacobian(n, q, jet.value, jet.gradient) @ vel
        coeffs = core.euclid_to_frame(euclid, point)
        horiz = max(abs(coeffs[-1]), float(np.max(np.abs(coeffs[:m] - hv))))
        member = abs(point[n] - phi.value(sf.project_pi(point)))
        out.append(LiftedSample(float(s), point, hv, float(member), float(horiz)))
    return out


def is_horizontal_line(curve: list[LiftedSample], tol: float = 1e-6) -> bool:
    """Constant frame velocity and Gamma(s) = Gamma(s_0) . delta_{s - s_0}(v) within tol."""
    if len(curve) < 3:
        raise ValueError("need at least three samples to test straightness")
    V = np.array([c.velocity for c in curve])
    v = V.mean(axis=0)
    if np.max(np.abs(V - v)) >= tol:
        return False
    p0, s0 = curve[0].point, curve[0].s
    return all(np.max(np.abs(core.ray_point(p0, v, c.s - s0) - c.point)) < tol for c in curve)




def trajectory_csv(phi, traj: Trajectory) -> str:
    n = traj.n
    names = [f"xi{j + 1}" for j in range(n)] + [f"eta{j + 2}" for j in range(n - 1)] + ["tau"]
    names += [f"x{j + 1}" for j in range(n)] + [f"y{j + 1}" for j in range(n)] + ["t"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s"] + names + ["speed", "surface_residual", "horizontality_residual"])
    for y, c in zip(traj.states, lift_trajectory(phi, traj)):
        w.writerow([repr(c.s)] + [repr(float(v)) for v in y[:2 * n]] + [repr(float(v)) for v in c.point]
                   + [repr(c.speed), repr(c.surface_residual), repr(c.horizontality_residual)])
    return buf.getvalue()


@dataclass(frozen=True)
class IdentityCheck:
    normal_acceleration: float   # max |<Gamma'', nu> + W^{-1/2} M|
    alpha_redundancy: float      # max |alpha'' - M / W|


def identity_residuals(phi, traj: Trajectory) -> IdentityCheck:
    """Finite-difference checks of the normal acceleration and alpha'' identities.

    Gamma'' is the s-derivative of the horizontal frame coefficients (the
    connection is flat in that frame) and alpha = phi(gamma(s)); both use
    fourth-order five-point stencils on interior samples.
    """
    if len(traj.s) < 5:
        raise ValueError("need at least five samples")
    n = traj.n
    m = 2 * n
    h = traj.step
    lifted = lift_trajectory(phi, traj)
    V = np.array([c.velocity for c in lifted])
    alpha = np.array([c.point[n] for c in lifted])
    acc = (-V[4:] + 8 * V[3:-1] - 8 * V[1:-3] + V[:-4]) / (12 * h)
    alpha_dd = (-alpha[4:] + 16 * alpha[3:-1] - 30 * alpha[2:-2] + 16 * alpha[1:-3] - alpha[:-4]) / (12 * h * h)
    worst_n = worst_a = 0.0
    for k in range(2, len(traj.s) - 2):
        y = traj.states[k]
        q = y[:m]
        jet = phi.jet2(q)
        vel = _velocity(y, jet.value, n)
        M = m_term(phi, q, vel)
        d = sf.graph_derivatives(phi, q, jet=jet)
        nu = sf.intrinsic_normal(phi, q)
        worst_n = max(worst_n, abs(acc[k - 2] @ nu + M / np.sqrt(d.W)))
        worst_a = max(worst_a, abs(alpha_dd[k - 2] - M / d.W))
    return IdentityCheck(float(worst_n), float(worst_a))
