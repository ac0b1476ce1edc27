"""Numerical checks of the ruling property along horizontal tangent rays.

A ray is p . delta_s(w) = (z + s w, t + s Q(z, w)). Membership along it is
measured by |F(x)| / |grad F(p)|, i.e. the defining function rescaled to unit
gradient at the base point, so the tolerance is scale-free.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from heisurf import core
from heisurf import surface as sf
from heisurf.poly import poly_eval_batch

RAY_TOL = 1e-9
DEFAULT_HORIZON = 10.0
DEFAULT_RAY_STEP = 1e-3


class RulingError(ValueError):
    pass


@dataclass
class RayVerdict:
    stays_within_horizon: bool
    exit_s: float | None
    endpoint_characteristic: bool | None
    max_residual_before_exit: float
    horizon: float
    exit_NH: float | None = None         # |N^H| at the last on-surface point

    def to_json(self) -> dict:
        return asdict(self)


def ray_points(p, w, s) -> np.ndarray:
    """p . delta_s(w) for an array of s values."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    n = core.dim_of_point(p)
    if core.dim_of_hvec(w) != n:
        raise core.DimensionError("ray direction and base point dimensions differ")
    qz = core.symplectic_q(p[:-1], w)
    X = np.empty((len(s), 2 * n + 1))
    X[:, :-1] = p[:-1] + s[:, None] * w
    X[:, -1] = p[-1] + s * qz
    return X


class _Residual:
    """|F| / |grad F(p)|, skipping chart/region limits when a global polynomial exists."""

    def __init__(self, S: sf.Surface, p: np.ndarray):
        self.S = S
        self.F = S.defining_poly()
        g = S.defining_jets(p[None, :])[1][0]
        self.scale = float(np.linalg.norm(g))
        if self.scale <= sf.GRAD_TOL:
            raise sf.SurfaceError("degenerate defining gradient at the ray base point")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.F is not None:
            vals = poly_eval_batch(self.F, X)
        else:
            vals = self.S.defining_values(X)
        return np.abs(vals) / self.scale


def _nh_at(S: sf.Surface, x: np.ndarray) -> float:
    """|N^H| from the ambient gradient, without a membership requirement."""
    g = S.defining_jets(x[None, :])[1][0]
    n = S.n
    GH = core.frame_matrix(x)[:2 * n] @ g
    return float(np.linalg.norm(GH) / np.linalg.norm(g))


def _check_ray_start(S: sf.Surface, p, w, tol_char, tol_member, tol_tangent=1e-9):
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    data = sf.surface_point_data(S, p, tol_char, tol_member)
    if data.charFlag:
        raise sf.CharacteristicPointError(f"ray base point {p.tolist()} is characteristic")
    if abs(np.linalg.norm(w) - 1) > 1e-9:
        raise RulingError(f"ray direction must be a unit vector (|w| = {np.linalg.norm(w)!r})")
    if abs(w @ data.nuH) > tol_tangent:
        raise RulingError(f"w is not horizontal tangent (<w, nu> = {w @ data.nuH:.3e})")
    return p, w


def ray_scan(S: sf.Surface, p, w, s_max: float = DEFAULT_HORIZON, step: float = DEFAULT_RAY_STEP,
             tol: float = RAY_TOL, tol_char: float = sf.CHAR_TOL,
             tol_member: float = sf.MEMBER_TOL) -> RayVerdict:
    """Walk s = 0, step, ..., s_max; on the first residual above tol, bisect to step*1e-3."""
    if not (step > 0 and s_max > 0):
        raise ValueError("step and s_max must be positive")
    p, w = _check_ray_start(S, p, w, tol_char, tol_member)
    resid = _Residual(S, p)
    k = int(np.floor(s_max / step + 1e-9))
    s = step * np.arange(k + 1)
    if s[-1] < s_max:
        s = np.append(s, s_max)
    r = resid(ray_points(p, w, s))
    bad = np.flatnonzero(r > tol)
    if bad.size == 0:
        return RayVerdict(True, None, None, float(r.max()), float(s_max))
    i = int(bad[0])
    worst = float(r[:i].max()) if i else 0.0
    lo, hi = s[i - 1], s[i]
    while hi - lo > step * 1e-3:
        mid = 0.5 * (lo + hi)
        rm = float(resid(ray_points(p, w, [mid]))[0])
        if rm > tol:
            hi = mid
        else:
            lo = mid
            worst = max(worst, rm)
    x_exit = ray_points(p, w, [lo])[0]
    nh = _nh_at(S, x_exit)
    return RayVerdict(False, float(lo), bool(nh <= tol_char), worst, float(s_max), nh)


# ---------------------------------------------------------------------------
# local checks


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """``count`` deterministic unit vectors in R^dim from Gaussian-mapped Halton points.

    In R^1 the sphere is {+1, -1}; callers scan both senses, so one vector is returned.
    """
    if count < 1:
        raise ValueError("need at least one direction")
    if dim == 1:
        return np.ones((1, 1))
    U = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    G = norm.ppf(U)
    return G / np.linalg.norm(G, axis=1)[:, None]


@dataclass
class LocalRulingReport:
    ruled: bool
    directions: np.ndarray
    verdicts: list[RayVerdict] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(v.max_residual_before_exit for v in self.verdicts)

    def to_json(self) -> dict:
        return {
            "ruled": self.ruled,
            "horizon_bounded": True,
            "directions": self.directions.tolist(),
            "verdicts": [v.to_json() for v in self.verdicts],
        }


def local_ruling_check(S: sf.Surface, p, n_dirs: int = 16, s_probe: float = 1.0,
                       step: float = DEFAULT_RAY_STEP, tol: float = RAY_TOL,
                       tol_char: float = sf.CHAR_TOL, tol_member: float = sf.MEMBER_TOL) -> LocalRulingReport:
    """Rays in both senses along n_dirs tangent directions; ruled iff all stay to s_probe."""
    E = sf.horizontal_tangent_basis(S, p, tol_char, tol_member)
    coeffs = sphere_directions(E.shape[0], n_dirs)
    dirs = []
    verdicts = []
    for c in coeffs:
        w = c @ E
        w /= np.linalg.norm(w)
        for sign in (1.0, -1.0):
            dirs.append(sign * w)
            verdicts.append(ray_scan(S, p, sign * w, s_probe, step, tol, tol_char, tol_member))
    return LocalRulingReport(all(v.stays_within_horizon for v in verdicts), np.array(dirs), verdicts)


# ---------------------------------------------------------------------------
# invariance under translations, dilations and pseudohermitian rotations


@dataclass
class InvarianceRow:
    transform: str
    base: RayVerdict
    image: RayVerdict
    verdict_equal: bool
    class_equal: bool
    residual_ok: bool
    exit_s_ratio: float | None     # image exit_s (rescaled) over base exit_s; informational

    @property
    def ok(self) -> bool:
        # exit_s marks where a scale-normalized residual crosses tol; the maps are not
        # Euclidean isometries, so that crossing moves and is not compared
        return self.verdict_equal and self.class_equal and self.residual_ok


def _describe(T: sf.GroupMap) -> str:
    if isinstance(T, sf.Translation):
        return "translation"
    if isinstance(T, sf.Dilation):
        return "dilation"
    return "rotation"


def transformed_ray(S: sf.Surface, T: sf.GroupMap, p, w):
    """Image surface, base point, unit direction and parameter scale of the ray under T.

    Dilations satisfy delta_lam(p . delta_s(w)) = delta_lam(p) . delta_{lam s}(w),
    so the direction is unchanged and s is rescaled by lam.
    """
    TS = sf.transform_surface(S, T)
    Tp = T.apply(p)
    if isinstance(T, sf.Dilation):
        return TS, Tp, np.asarray(w, dtype=float), T.lam
    return TS, Tp, T.push(w), 1.0


def invariance_suite(S: sf.Surface, p, w, q=None, lam: float | None = None, R: core.BlockRotation | None = None,
                     s_max: float = DEFAULT_HORIZON, step: float = DEFAULT_RAY_STEP, tol: float = RAY_TOL,
                     residual_bound: float | None = None) -> list[InvarianceRow]:
    """Compare ray_scan(S, p, w) with the scan of the transformed ray on T(S).

    ``residual_bound`` (default ``tol``) is the fixture bound; image residuals
    must stay within ten times it.
    """
    bound = tol if residual_bound is None else residual_bound
    base = ray_scan(S, p, w, s_max, step, tol)
    maps: list[sf.GroupMap] = []
    if q is not None:
        maps.append(sf.Translation(np.asarray(q, dtype=float)))
    if lam is not None:
        maps.append(sf.Dilation(float(lam)))
    if R is not None:
        maps.append(sf.Rotation(R))
    rows = []
    for T in maps:
        TS, Tp, Tw, scale = transformed_ray(S, T, p, w)
        image = ray_scan(TS, Tp, Tw, s_max * scale, step * scale, tol)
        same = base.stays_within_horizon == image.stays_within_horizon
        cls = base.endpoint_characteristic == image.endpoint_characteristic
        ratio = None
        if base.exit_s and image.exit_s is not None:
            ratio = image.exit_s / scale / base.exit_s
        res_ok = image.max_residual_before_exit <= 10 * max(bound, base.max_residual_before_exit)
        rows.append(InvarianceRow(_describe(T), base, image, same, cls, res_ok, ratio))
    return rows
