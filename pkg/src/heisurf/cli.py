"""``heisurf`` command line: curvature grids, geodesics, ruling scans and the verify suite.

Exit codes: 0 success, 1 computation failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from heisurf import config as cf
from heisurf import curvature as cv
from heisurf import geodesic as gd
from heisurf import ruling as ru
from heisurf import surface as sf
from heisurf import verify
from heisurf.poly import poly_jet2_batch

# fixed so that chunking, and hence output, does not depend on --workers
GRID_CHUNK = 4096
NEWTON_ITERS = 60


class ComputationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# worker pool


def _pool_map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map, in a process pool when it can help."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# curvature


def _solve_implicit(S: sf.Implicit, Z: np.ndarray, axis: int) -> np.ndarray:
    """Put grid points on {f = 0} by Newton iteration in one coordinate (started at 0)."""
    m = Z.shape[0]
    X = np.zeros((m, 2 * S.n + 1))
    X[:, [i for i in range(2 * S.n + 1) if i != axis]] = Z
    for _ in range(NEWTON_ITERS):
        F, G, _ = poly_jet2_batch(S.f, X)
        d = G[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            X[:, axis] -= np.where(d != 0, F / d, np.nan)
    F, G, _ = poly_jet2_batch(S.f, X)
    with np.errstate(invalid="ignore"):
        bad = ~(np.abs(F) <= 1e-12 * np.maximum(1.0, np.linalg.norm(G, axis=1)))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ComputationError(f"could not solve for coordinate {axis} at grid point {Z[i].tolist()}")
    return X


def grid_points(S: sf.Surface, grid: cf.Grid) -> np.ndarray:
    Z = grid.coordinates()
    if isinstance(S, sf.TGraph):
        return S.parametrize_batch(Z)
    if isinstance(S, sf.Implicit):
        return _solve_implicit(S, Z, grid.solve_axis)
    return np.array([S.parametrize(z) for z in Z])


def _curvature_chunk(args) -> cv.CurvatureGrid:
    S, P, tol_char, tol_member, tol_htg, frob = args
    return cv.curvature_grid(S, P, tol_char, tol_member, tol_htg, frobenius=frob)


def _concat_grids(parts: list[cv.CurvatureGrid]) -> cv.CurvatureGrid:
    def cat(name):
        cols = [getattr(g, name) for g in parts]
        return None if cols[0] is None else np.concatenate(cols)
    return cv.CurvatureGrid(*(cat(f) for f in ("P", "char", "TdH", "H", "h_sq", "tilde_h_sq", "htg",
                                                "h_sq_frobenius", "tilde_h_sq_frobenius")))


def cmd_curvature(cfg: cf.RunConfig, workers: int = 1) -> tuple[str, str]:
    """Returns (csv, json) renderings callers pick from."""
    S, p = cfg.surface, cfg.params
    P = grid_points(S, p["grid"]) if "grid" in p else p["points"]
    tol_char = p.get("tol_char", sf.CHAR_TOL)
    tol_member = p.get("tol_member", sf.MEMBER_TOL)
    tol_htg = p.get("tol_htg", cv.HTG_TOL)
    frob = p.get("frobenius", False)
    chunks = [(S, P[i:i + GRID_CHUNK], tol_char, tol_member, tol_htg, frob)
              for i in range(0, len(P), GRID_CHUNK)]
    G = _concat_grids(_pool_map(_curvature_chunk, chunks, workers))
    doc = {"surface": cfg.surface_spec, "columns": cv.GRID_COLUMNS, "rows": len(G.P),
           "characteristic_rows": int(G.char.sum()), **G.to_json()}
    if frob:
        doc["h_sq_frobenius"] = [None if not np.isfinite(v) else float(v) for v in G.h_sq_frobenius]
        doc["tilde_h_sq_frobenius"] = [None if not np.isfinite(v) else float(v)
                                       for v in G.tilde_h_sq_frobenius]
    return G.to_csv(), _dumps(doc)


# ---------------------------------------------------------------------------
# geodesic


def cmd_geodesic(cfg: cf.RunConfig) -> tuple[str, str, gd.Trajectory]:
    S, p = cfg.surface, cfg.params
    phi, box = S.phi, S.box
    tol_member = p.get("tol_member", sf.MEMBER_TOL)
    point = S.parametrize(p["start"]) if "start" in p else p["point"]
    if "direction" in p:
        w = p["direction"]
    else:
        E = sf.horizontal_tangent_basis(S, point, p.get("tol_char", sf.CHAR_TOL), tol_member)
        w = p["tangent_coeffs"] @ E
        if np.linalg.norm(w) == 0:
            raise ComputationError("tangent_coeffs must not all vanish")
        w = w / np.linalg.norm(w)
    step = p.get("step", gd.DEFAULT_STEP)
    horizon = p.get("horizon", 1.0)
    state0 = gd.initial_state(phi, point, w, box, tol_member=tol_member)
    traj = gd.integrate(phi, state0, step, int(round(horizon / step)), box)
    text = gd.trajectory_csv(phi, traj)
    rows = list(csv.reader(io.StringIO(text)))
    doc = {"surface": cfg.surface_spec, "step": step, "horizon": horizon, "exited": traj.exited,
           "last_s": traj.last_s, "columns": rows[0],
           "rows": [[float(v) for v in r] for r in rows[1:]]}
    return text, _dumps(doc), traj


# ---------------------------------------------------------------------------
# ruling


def _ray_job(args) -> ru.RayVerdict:
    S, p, w, s_max, step, tol, tol_char, tol_member = args
    return ru.ray_scan(S, p, w, s_max, step, tol, tol_char, tol_member)


def _ruling_directions(S, p, params, tol_char, tol_member) -> np.ndarray:
    if "directions" in params:
        D = params["directions"]
        return D / np.linalg.norm(D, axis=1)[:, None]
    E = sf.horizontal_tangent_basis(S, p, tol_char, tol_member)
    dirs = []
    for c in ru.sphere_directions(E.shape[0], params.get("n_dirs", 16)):
        w = c @ E
        w = w / np.linalg.norm(w)
        dirs.extend([w, -w])
    return np.array(dirs)


def cmd_ruling(cfg: cf.RunConfig, workers: int = 1) -> tuple[str, str]:
    S, p = cfg.surface, cfg.params
    tol_char = p.get("tol_char", sf.CHAR_TOL)
    tol_member = p.get("tol_member", sf.MEMBER_TOL)
    s_max = p.get("horizon", ru.DEFAULT_HORIZON)
    step = p.get("step", ru.DEFAULT_RAY_STEP)
    tol = p.get("tol", ru.RAY_TOL)
    if "params" in p:
        try:
            points = np.array([S.parametrize(q) for q in p["params"]])
        except sf.SurfaceError as exc:
            raise cf.ConfigError("param", str(exc)) from None
    else:
        points = p["points"]
    jobs, owner = [], []
    for i, x in enumerate(points):
        for w in _ruling_directions(S, x, p, tol_char, tol_member):
            jobs.append((S, x, w, s_max, step, tol, tol_char, tol_member))
            owner.append(i)
    verdicts = _pool_map(_ray_job, jobs, workers)

    reports = []
    for i, x in enumerate(points):
        rays = [{"direction": jobs[k][2].tolist(), **verdicts[k].to_json()}
                for k in range(len(jobs)) if owner[k] == i]
        reports.append({"point": x.tolist(), "ruled": all(r["stays_within_horizon"] for r in rays),
                        "rays": rays})
    doc = {"surface": cfg.surface_spec, "horizon": s_max, "step": step, "tol": tol,
           "all_ruled": all(r["ruled"] for r in reports), "points": reports}

    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    d = points.shape[1]
    wr.writerow(["point_index"] + [f"p{j}" for j in range(d)] + [f"w{j}" for j in range(d - 1)]
                + ["stays_within_horizon", "exit_s", "endpoint_characteristic",
                   "max_residual_before_exit", "exit_NH"])
    for k, (job, v) in enumerate(zip(jobs, verdicts)):
        wr.writerow([owner[k]] + [repr(float(c)) for c in job[1]] + [repr(float(c)) for c in job[2]]
                    + [int(v.stays_within_horizon), _opt(v.exit_s),
                       "" if v.endpoint_characteristic is None else int(v.endpoint_characteristic),
                       repr(v.max_residual_before_exit), _opt(v.exit_NH)])
    return buf.getvalue(), _dumps(doc)


def _opt(v) -> str:
    return "" if v is None else repr(float(v))


# ---------------------------------------------------------------------------
# verify


def cmd_verify(mutate: str | None = None, only: list[int] | None = None) -> list[verify.CriterionResult]:
    return verify.run_all(mutate=mutate, only=only)


# ---------------------------------------------------------------------------
# plumbing


def _dumps(doc) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o).__name__)
    return json.dumps(doc, indent=2, default=default, allow_nan=False) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _positive(kind):
    def parse(s):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {s!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heisurf",
        description="Hypersurfaces in the Heisenberg group: curvature, geodesics and ruling checks.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(sp, config_required=True):
        sp.add_argument("--config", metavar="PATH", required=config_required, help="JSON run configuration")
        sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        sp.add_argument("--format", choices=cf.FORMATS, help="report format")

    def tolerances(sp):
        sp.add_argument("--tol-char", type=_positive(float), help="characteristic threshold on |N^H|")
        sp.add_argument("--tol-member", type=_positive(float), help="surface membership tolerance")

    def pool(sp):
        sp.add_argument("--workers", type=_positive(int), default=os.cpu_count() or 1,
                        help="worker processes (default: CPU count)")

    c = sub.add_parser("curvature", help="curvature quantities over a grid of surface points")
    common(c)
    tolerances(c)
    pool(c)

    g = sub.add_parser("geodesic", help="integrate a geodesic on an intrinsic Y_1-graph")
    common(g)
    tolerances(g)
    g.add_argument("--step", type=_positive(float), help="RK4 step")
    g.add_argument("--horizon", type=_positive(float), help="arc-parameter length to integrate")

    r = sub.add_parser("ruling", help="scan horizontal tangent rays for the ruling property")
    common(r)
    tolerances(r)
    pool(r)
    r.add_argument("--step", type=_positive(float), help="ray sampling step")
    r.add_argument("--horizon", type=_positive(float), help="largest ray parameter")

    v = sub.add_parser("verify", help="run the numbered reproduction criteria")
    common(v, config_required=False)
    v.add_argument("--only", type=int, action="append", metavar="K", help="run criterion K only (repeatable)")
    v.add_argument("--mutate", choices=["group-law"], help=argparse.SUPPRESS)
    return parser


def _apply_flags(cfg: cf.RunConfig, args: argparse.Namespace):
    for flag in ("tol_char", "tol_member", "step", "horizon"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg.params[flag] = val
    if args.out is not None:
        cfg.out = args.out
    if args.format is not None:
        cfg.format = args.format


def _run(args: argparse.Namespace) -> int:
    if args.command == "verify":
        cfg = cf.load_config(args.config, "verify") if args.config else cf.RunConfig("verify")
        _apply_flags(cfg, args)
        results = cmd_verify(args.mutate, args.only)
        if cfg.format == "json":
            text = _dumps([{"criterion": r.number, "name": r.name, "passed": r.passed,
                            "checks": r.checks, "detail": r.detail} for r in results])
        else:
            text = "".join(r.line() + "\n" for r in results)
        _emit(text, cfg.out)
        return 0 if all(r.passed for r in results) else 1

    cfg = cf.load_config(args.config, args.command)
    _apply_flags(cfg, args)
    if args.command == "curvature":
        text_csv, text_json = cmd_curvature(cfg, args.workers)
        fmt = cfg.format or "csv"
    elif args.command == "geodesic":
        text_csv, text_json, traj = cmd_geodesic(cfg)
        fmt = cfg.format or "csv"
        if traj.exited:
            print(f"heisurf: trajectory left the chart domain; last valid s = {traj.last_s!r}",
                  file=sys.stderr)
    else:
        text_csv, text_json = cmd_ruling(cfg, args.workers)
        fmt = cfg.format or "json"
    _emit(text_json if fmt == "json" else text_csv, cfg.out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except cf.ConfigError as exc:
        print(f"heisurf: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, sf.SurfaceError, gd.GeodesicError, ru.RulingError,
            ValueError, ArithmeticError) as exc:
        print(f"heisurf: {args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
