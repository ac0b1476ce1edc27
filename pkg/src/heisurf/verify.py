"""The reproduction suite: eight numbered criteria with fixed seeds and tolerances.

Each ``criterion_k`` returns a :class:`CriterionResult`; ``run_all`` runs them in
order. Shared by ``heisurf verify`` and the acceptance tests.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import numpy as np

from heisurf import core
from heisurf import curvature as cv
from heisurf import fixtures as fx
from heisurf import geodesic as gd
from heisurf import ruling as ru
from heisurf import surface as sf
from heisurf.poly import Poly, random_poly


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    checks: dict[str, bool] = field(default_factory=dict)
    detail: dict[str, float] = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [k for k, v in self.checks.items() if not v]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        return f"[{status}] criterion {self.number}: {self.name}{extra}"


def _result(number, name, checks, detail) -> CriterionResult:
    return CriterionResult(number, name, all(checks.values()), checks, detail)


# ---------------------------------------------------------------------------
# 1. hyperplane with closed-form |h|^2


def criterion_1(seed: int = fx.SEED) -> CriterionResult:
    rng = np.random.default_rng(seed)
    S = fx.reference_hyperplane()
    a, b, d = np.array(fx.HYPERPLANE_A), np.array(fx.HYPERPLANE_B), fx.HYPERPLANE_D
    rel = tilde = 0.0
    count = 0
    while count < 100:
        z = rng.uniform(-3, 3, 4)
        p = np.append(z, -(a @ z[:2] + b @ z[2:] + d))
        if sf.is_characteristic(S, p):
            continue
        count += 1
        x, y = p[:2], p[2:4]
        expected = 2.0 / np.sum(np.concatenate([a + y, b - x]) ** 2)
        rel = max(rel, abs(cv.norm_h_sq_formula(S, p) - expected) / expected)
        tilde = max(tilde, abs(cv.norm_tilde_h_sq_formula(S, p)))
    H0 = sf.hyperplane([0.0, 0.0], [0.0, 0.0], 1.0, 0.0)
    unit = cv.norm_h_sq_formula(H0, [1.0, 0.0, 0.0, 0.0, 0.0])
    checks = {
        "|h|^2 formula (rel 1e-8)": rel < 1e-8,
        "|h~|^2 < 1e-10": tilde < 1e-10,
        "zero-parameter |h|^2 = 2": abs(unit - 2.0) < 1e-10,
    }
    return _result(1, "hyperplane |h|^2 and h~ = 0", checks,
                   {"max_rel_err": rel, "max_tilde_h_sq": tilde, "unit_case": unit})


# ---------------------------------------------------------------------------
# 2. |h|^2 - |h~|^2 identity on random surfaces


def random_surface_point(rng: np.random.Generator, n: int):
    """A random degree <= 3 polynomial surface and a non-characteristic point on it."""
    kinds = ("t-graph", "implicit", "intrinsic-y1")
    while True:
        kind = kinds[int(rng.integers(3))]
        if kind == "t-graph":
            S = sf.TGraph(random_poly(rng, 2 * n, 3))
            p = S.parametrize(rng.uniform(-1, 1, 2 * n))
        elif kind == "intrinsic-y1":
            phi = random_poly(rng, 2 * n, 3)
            box = sf.Box(-2 * np.ones(2 * n), 2 * np.ones(2 * n))
            S = sf.IntrinsicY1Graph(phi, box)
            p = sf.lift_psi(phi, rng.uniform(-1, 1, 2 * n), box)
        else:
            g = random_poly(rng, 2 * n + 1, 3)
            p = rng.uniform(-1, 1, 2 * n + 1)
            S = sf.Implicit(g - g(p))
            if np.linalg.norm(S.defining_jets(p)[1][0]) <= sf.GRAD_TOL:
                continue
        if not sf.is_characteristic(S, p):
            return S, p


def criterion_2(seed: int = fx.SEED, count: int = 200) -> CriterionResult:
    rng = np.random.default_rng(seed)
    ident = fro = 0.0
    for k in range(count):
        n = (1, 2, 3)[k % 3]
        S, p = random_surface_point(rng, n)
        h2 = cv.norm_h_sq_formula(S, p)
        th2 = cv.norm_tilde_h_sq_formula(S, p)
        form = cv.second_fundamental_form(S, p)
        scale = 1.0 + abs(h2)
        ident = max(ident, abs(h2 - th2 - 2 * (n - 1) * form.TdH ** 2) / scale)
        fro = max(fro, abs(form.norm_sq - h2), abs(cv.symmetrize(form).norm_sq - th2))
    checks = {"identity < 1e-8 (1+|h|^2)": ident < 1e-8, "Frobenius route to 1e-8": fro < 1e-8}
    return _result(2, "|h|^2 = |h~|^2 + 2(n-1)(Td^H)^2 on random surfaces", checks,
                   {"max_scaled_identity_err": ident, "max_frobenius_err": fro})


# ---------------------------------------------------------------------------
# 3. saddle: minimal but not horizontally totally geodesic


def saddle_grid(resolution: int = 21) -> cv.CurvatureGrid:
    S = sf.saddle(2)
    g = np.linspace(-1.0, 1.0, resolution)
    Z = np.array(np.meshgrid(g, g, g, g, indexing="ij")).reshape(4, -1).T
    return cv.curvature_grid(S, S.parametrize_batch(Z), frobenius=True)


def criterion_3() -> CriterionResult:
    G = saddle_grid()
    ok = ~G.char
    maxH = float(np.max(np.abs(G.H[ok])))
    max_t = float(np.max(G.tilde_h_sq_frobenius[ok]))
    checks = {
        "|H| < 1e-8 off the characteristic set": maxH < 1e-8,
        "max |h~|^2 > 1e-3": max_t > 1e-3,
        "max |h~|^2 matches regression value": abs(max_t - fx.SADDLE_GRID_MAX_TILDE_H_SQ)
        <= 1e-9 * fx.SADDLE_GRID_MAX_TILDE_H_SQ,
    }
    return _result(3, "saddle grid: H = 0, h~ != 0", checks,
                   {"max_abs_H": maxH, "max_tilde_h_sq": max_t, "characteristic_points": int(G.char.sum())})


# ---------------------------------------------------------------------------
# 4-5. geodesics


def geodesic_runs(step: float = gd.DEFAULT_STEP, horizon: float = 1.0):
    """Trajectories of the fixture graph from q0 along deterministic unit tangent directions."""
    phi = fx.geodesic_graph()
    q0 = np.array(fx.GEODESIC_Q0)
    p0 = sf.lift_psi(phi, q0)
    E = sf.tangent_bases(sf.intrinsic_normal(phi, q0)[None])[0]
    out = []
    for c in ru.sphere_directions(E.shape[0], fx.GEODESIC_DIRECTIONS):
        w = c @ E
        w /= np.linalg.norm(w)
        s0 = gd.initial_state(phi, p0, w, fx.GEODESIC_BOX)
        out.append((s0, gd.integrate(phi, s0, step, int(round(horizon / step)), fx.GEODESIC_BOX)))
    return phi, out


def _halving_ratio(phi, s0, step: float, horizon: float) -> float:
    runs = [gd.integrate(phi, s0, h, int(round(horizon / h)), fx.GEODESIC_BOX) for h in (step, step / 2, step / 4)]
    e1 = np.max(np.abs(runs[0].states - runs[1].states[::2]))
    e2 = np.max(np.abs(runs[1].states - runs[2].states[::2]))
    return float(e1 / e2) if e2 > 0 else float("inf")


def criterion_4(step: float = gd.DEFAULT_STEP) -> CriterionResult:
    phi, runs = geodesic_runs(step)
    member = horiz = drift = closure = 0.0
    ratios = []
    for s0, traj in runs:
        curve = gd.lift_trajectory(phi, traj)
        member = max(member, max(c.surface_residual for c in curve))
        horiz = max(horiz, max(c.horizontality_residual for c in curve))
        speeds = [c.speed for c in curve]
        drift = max(drift, max(speeds) - min(speeds))
        back = gd.integrate(phi, gd.reversed_state(traj.state(-1)), step, len(traj.s) - 1, fx.GEODESIC_BOX)
        closure = max(closure, float(np.max(np.abs(back.states[-1][:4] - s0.q))))
        ratios.append(_halving_ratio(phi, s0, step, 1.0))
    checks = {
        "on-surface < 1e-7": member < 1e-7,
        "horizontality < 1e-8": horiz < 1e-8,
        "speed drift < 1e-6": drift < 1e-6,
        "time reversal < 1e-6": closure < 1e-6,
        "step-halving ratio in [12, 20]": all(12 <= r <= 20 for r in ratios),
    }
    return _result(4, "geodesic integrity", checks,
                   {"surface_residual": member, "horizontality_residual": horiz, "speed_drift": drift,
                    "reversal_closure": closure, "min_ratio": min(ratios), "max_ratio": max(ratios)})


def criterion_5(step: float = gd.DEFAULT_STEP) -> CriterionResult:
    phi, runs = geodesic_runs(step)
    normal = alpha = 0.0
    for _, traj in runs:
        chk = gd.identity_residuals(phi, traj)
        normal = max(normal, chk.normal_acceleration)
        alpha = max(alpha, chk.alpha_redundancy)
    checks = {"<Gamma'', nu> = -W^-1/2 M to 1e-5": normal < 1e-5, "alpha'' = M/W to 1e-6": alpha < 1e-6}
    return _result(5, "normal acceleration and alpha redundancy", checks,
                   {"normal_acceleration": normal, "alpha_redundancy": alpha})


# ---------------------------------------------------------------------------
# 6-7. ruling


def ruling_fixtures(seed: int = fx.SEED):
    """(name, surface, base point, unit direction, residual bound) tuples."""
    rng = np.random.default_rng(seed)
    out = []
    vh1 = sf.vertical_hyperplane([1.0], [2.0], 0.5)
    vh2 = sf.vertical_hyperplane([1.0, -0.5], [0.25, 2.0], 0.3)
    h0 = sf.horizontal_plane(2)
    for name, S in (("vertical-hyperplane-H1", vh1), ("vertical-hyperplane-H2", vh2), ("horizontal-plane-H2", h0)):
        for _ in range(3):
            n = S.n
            if isinstance(S, sf.TGraph):
                p = S.parametrize(rng.uniform(-1, 1, 2 * n))
            else:
                a = S.f.diff(0)(np.zeros(2 * n + 1))
                z = rng.uniform(-1, 1, 2 * n)
                z[0] -= S.f(np.append(z, 0.0)) / a
                p = np.append(z, rng.uniform(-2, 2))
            E = sf.horizontal_tangent_basis(S, p)
            for c in ru.sphere_directions(E.shape[0], 4):
                w = c @ E
                out.append((name, S, p, w / np.linalg.norm(w), 1e-12))
    H = sf.helicoid()
    for r, th in ((0.5, 0.7), (-1.2, 2.0), (2.0, -1.1)):
        out.append(("helicoid", H, H.parametrize([r, th]), np.array([np.cos(th), np.sin(th)]), 1e-10))
    S, p, w = fx.saddle_witness()
    out.append(("saddle-witness", S, p, w, ru.RAY_TOL))
    return out


def criterion_6(seed: int = fx.SEED) -> CriterionResult:
    flat = helic = 0.0
    flat_stay = helic_stay = True
    witness = None
    for name, S, p, w, _ in ruling_fixtures(seed):
        v = ru.ray_scan(S, p, w, s_max=10.0)
        if name == "helicoid":
            helic = max(helic, v.max_residual_before_exit)
            helic_stay &= v.stays_within_horizon
        elif name == "saddle-witness":
            witness = v
        else:
            flat = max(flat, v.max_residual_before_exit)
            flat_stay &= v.stays_within_horizon
    checks = {
        "flat rays < 1e-12 on [0, 10]": flat_stay and flat < 1e-12,
        "helicoid rulings < 1e-10": helic_stay and helic < 1e-10,
        "saddle witness exits with |N^H| > 0.1": (not witness.stays_within_horizon)
        and witness.exit_NH is not None and witness.exit_NH > 0.1 and witness.endpoint_characteristic is False,
    }
    return _result(6, "ruling fixtures", checks,
                   {"flat_max_residual": flat, "helicoid_max_residual": helic,
                    "witness_exit_s": witness.exit_s, "witness_exit_NH": witness.exit_NH})


def criterion_7(seed: int = fx.SEED, count: int = 20) -> CriterionResult:
    rng = np.random.default_rng(seed + 7)
    fixtures = ruling_fixtures(seed)
    # one representative ray per fixture family
    seen = {}
    for f in fixtures:
        seen.setdefault(f[0], f)
    bad = 0
    total = 0
    worst_ratio = 0.0
    for name, S, p, w, bound in seen.values():
        for _ in range(count):
            q = rng.uniform(-1, 1, 2 * S.n + 1)
            lam = float(np.exp(rng.uniform(np.log(0.5), np.log(2.0))))
            R = core.BlockRotation.random(S.n, rng)
            rows = ru.invariance_suite(S, p, w, q, lam, R, s_max=10.0, residual_bound=bound)
            for row in rows:
                total += 1
                bad += not row.ok
                worst_ratio = max(worst_ratio, row.image.max_residual_before_exit / bound)
    checks = {"all verdicts and classes preserved": bad == 0}
    return _result(7, "ruling invariance under translations, dilations, rotations", checks,
                   {"comparisons": total, "mismatches": bad, "worst_residual_over_bound": worst_ratio})


# ---------------------------------------------------------------------------
# 8. algebra


def criterion_8(seed: int = fx.SEED) -> CriterionResult:
    rng = np.random.default_rng(seed + 8)
    assoc = inv = dil = jj = 0.0
    for _ in range(300):
        n = int(rng.integers(1, 4))
        p, q, r = (rng.uniform(-2, 2, 2 * n + 1) for _ in range(3))
        assoc = max(assoc, np.max(np.abs(core.group_mul(core.group_mul(p, q), r)
                                         - core.group_mul(p, core.group_mul(q, r)))))
        inv = max(inv, np.max(np.abs(core.group_mul(p, core.group_inv(p)))),
                  np.max(np.abs(core.group_mul(core.group_inv(p), p))))
        lam = float(rng.uniform(0.2, 3.0))
        dil = max(dil, np.max(np.abs(core.dilate(lam, core.group_mul(p, q))
                                     - core.group_mul(core.dilate(lam, p), core.dilate(lam, q)))))
        v = rng.normal(size=2 * n)
        jj = max(jj, np.max(np.abs(core.j_apply(core.j_apply(v)) + v)))
    comm_ok = True
    for n in (1, 2, 3):
        nv = 2 * n + 1
        f = Poly(nv, {e: float(round(c * 10)) for e, c in random_poly(rng, nv, 4, n_terms=10).items()})
        T = core.frame_apply(nv, f, n)
        for i in range(1, nv + 1):
            for j in range(1, nv + 1):
                c = core.frame_commutator(i, j, f, n)
                if i <= n and j == i + n:
                    comm_ok &= c == T * -2.0
                elif j <= n and i == j + n:
                    comm_ok &= c == T * 2.0
                else:
                    comm_ok &= c.is_zero()
    checks = {
        "associativity 1e-12": assoc <= 1e-12,
        "inverse 1e-12": inv <= 1e-12,
        "dilation homomorphism 1e-12": dil <= 1e-12,
        "J^2 = -id": jj <= 1e-14,
        "[X_j, Y_j] = -2T, others zero (exact)": bool(comm_ok),
    }
    return _result(8, "group algebra", checks,
                   {"associativity": assoc, "inverse": inv, "dilation": dil, "J2": jj})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8)


@contextlib.contextmanager
def corrupted_group_law():
    """Mutation hook: swap in a non-associative product to prove criterion 8 can fail."""
    original = core.group_mul

    def broken(p, q):
        out = original(p, q)
        out[-1] += np.asarray(p, dtype=float)[0] ** 2 * np.asarray(q, dtype=float)[0]
        return out

    core.group_mul = broken
    try:
        yield
    finally:
        core.group_mul = original


def run_all(mutate: str | None = None, only: list[int] | None = None) -> list[CriterionResult]:
    ctx = corrupted_group_law() if mutate == "group-law" else contextlib.nullcontext()
    if mutate not in (None, "group-law"):
        raise ValueError(f"unknown mutation {mutate!r}")
    results = []
    with ctx:
        for k, fn in enumerate(CRITERIA, start=1):
            if only is None or k in only:
                results.append(fn())
    return results
