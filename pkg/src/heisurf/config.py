"""JSON run configurations: parsing and validation before any computation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from heisurf import surface as sf
from heisurf.poly import DimensionError, Poly

COMMANDS = ("curvature", "geodesic", "ruling", "verify")
FORMATS = ("csv", "json")

SURFACE_KINDS = ("t-graph", "intrinsic-y1", "implicit", "helicoid",
                 "vertical-hyperplane", "hyperplane", "saddle", "saddle-y1")

_SURFACE_KEYS = {
    "t-graph": {"kind", "n", "poly"},
    "intrinsic-y1": {"kind", "n", "poly", "box"},
    "implicit": {"kind", "n", "poly", "box"},
    "helicoid": {"kind", "n"},
    "vertical-hyperplane": {"kind", "n", "a", "b", "c"},
    "hyperplane": {"kind", "n", "a", "b", "c", "d"},
    "saddle": {"kind", "n"},
    "saddle-y1": {"kind", "n", "box", "branch"},
}

_COMMON = {"command", "surface", "out", "format", "tol_char", "tol_member"}
_COMMAND_KEYS = {
    "curvature": _COMMON | {"grid", "points", "frobenius", "tol_htg"},
    "geodesic": _COMMON | {"start", "point", "direction", "tangent_coeffs", "step", "horizon"},
    "ruling": _COMMON | {"point", "points", "param", "params", "directions", "n_dirs",
                         "step", "horizon", "tol"},
    "verify": {"command", "out", "format"},
}
_GRID_KEYS = {"lo", "hi", "resolution", "solve_axis"}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class Grid:
    lo: np.ndarray
    hi: np.ndarray
    resolution: np.ndarray
    solve_axis: int | None = None

    def coordinates(self) -> np.ndarray:
        axes = [np.linspace(a, b, int(k)) if k > 1 else np.array([a])
                for a, b, k in zip(self.lo, self.hi, self.resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class RunConfig:
    command: str
    surface: sf.Surface | None = None
    surface_spec: dict = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    out: str | None = None
    format: str | None = None


# ---------------------------------------------------------------------------
# primitive readers


def _reject_unknown(obj: dict, allowed: set, prefix: str = ""):
    for k in obj:
        if k not in allowed:
            raise ConfigError(prefix + k, "unknown key")


def _number(obj: dict, key: str, path: str, positive: bool = False) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(path, f"must be positive, got {v!r}")
    return float(v)


def _integer(obj: dict, key: str, path: str, minimum: int = 1) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}, got {v!r}")
    return v


def _vector(v, path: str, length: int | None = None) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(path, "expected a non-empty list of numbers")
    a = np.array(v, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ConfigError(path, "entries must be finite")
    if length is not None and len(a) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(a)}")
    return a


def _vectors(v, path: str, length: int) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a non-empty list of vectors")
    return np.array([_vector(x, f"{path}[{i}]", length) for i, x in enumerate(v)])


def _box(v, path: str, dim: int) -> sf.Box:
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object with 'lo' and 'hi'")
    _reject_unknown(v, {"lo", "hi"}, path + ".")
    for k in ("lo", "hi"):
        if k not in v:
            raise ConfigError(f"{path}.{k}", "missing")
    lo, hi = _vector(v["lo"], path + ".lo", dim), _vector(v["hi"], path + ".hi", dim)
    if np.any(lo > hi):
        raise ConfigError(path, "empty box (lo > hi in some coordinate)")
    return sf.Box(lo, hi)


# ---------------------------------------------------------------------------
# surfaces


def _poly(spec: dict, nvars: int) -> Poly:
    if "poly" not in spec:
        raise ConfigError("surface.poly", "missing")
    recs = spec["poly"]
    if not isinstance(recs, list) or not all(isinstance(r, dict) for r in recs):
        raise ConfigError("surface.poly", "expected a list of {coeff, exps} records")
    for i, r in enumerate(recs):
        for k in r:
            if k not in ("coeff", "exps"):
                raise ConfigError(f"surface.poly[{i}].{k}", "unknown key")
        if "coeff" not in r or "exps" not in r:
            raise ConfigError(f"surface.poly[{i}]", "records need 'coeff' and 'exps'")
        if not isinstance(r["exps"], list) or not all(
                isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in r["exps"]):
            raise ConfigError(f"surface.poly[{i}].exps", "expected non-negative integers")
        if len(r["exps"]) != nvars:
            raise ConfigError(f"surface.poly[{i}].exps", f"expected {nvars} exponents")
        _number(r, "coeff", f"surface.poly[{i}].coeff")
    return Poly.from_records(recs, nvars) if recs else Poly(nvars)


def parse_surface(spec) -> sf.Surface:
    if not isinstance(spec, dict):
        raise ConfigError("surface", "expected an object")
    kind = spec.get("kind")
    if kind not in SURFACE_KINDS:
        raise ConfigError("surface.kind", f"expected one of {', '.join(SURFACE_KINDS)}; got {kind!r}")
    _reject_unknown(spec, _SURFACE_KEYS[kind], "surface.")
    if kind == "helicoid":
        if "n" in spec and spec["n"] != 1:
            raise ConfigError("surface.n", "the helicoid lives in H^1")
        return sf.helicoid()
    if "n" not in spec:
        raise ConfigError("surface.n", "missing")
    n = _integer(spec, "n", "surface.n")
    try:
        if kind == "t-graph":
            return sf.TGraph(_poly(spec, 2 * n))
        if kind == "implicit":
            region = _box(spec["box"], "surface.box", 2 * n + 1) if "box" in spec else None
            return sf.Implicit(_poly(spec, 2 * n + 1), region)
        if kind == "intrinsic-y1":
            if "box" not in spec:
                raise ConfigError("surface.box", "intrinsic graphs need a domain box")
            return sf.IntrinsicY1Graph(_poly(spec, 2 * n), _box(spec["box"], "surface.box", 2 * n))
        if kind == "saddle-y1":
            if "box" not in spec:
                raise ConfigError("surface.box", "intrinsic graphs need a domain box")
            branch = spec.get("branch", 1)
            if branch not in (1, -1):
                raise ConfigError("surface.branch", "expected 1 or -1")
            return sf.IntrinsicY1Graph(sf.SaddleY1Chart(n, branch), _box(spec["box"], "surface.box", 2 * n))
        if kind == "saddle":
            return sf.saddle(n)
        for k in ("a", "b", "c") + (("d",) if kind == "hyperplane" else ()):
            if k not in spec:
                raise ConfigError(f"surface.{k}", "missing")
        a = _vector(spec["a"], "surface.a", n)
        b = _vector(spec["b"], "surface.b", n)
        c = _number(spec, "c", "surface.c")
        if kind == "vertical-hyperplane":
            return sf.vertical_hyperplane(a, b, c)
        return sf.hyperplane(a, b, c, _number(spec, "d", "surface.d"))
    except ConfigError:
        raise
    except (sf.SurfaceError, DimensionError) as exc:
        raise ConfigError("surface", str(exc)) from None


def grid_dim(S: sf.Surface) -> int:
    """Dimension of the parameter grid for S (2n for every supported kind)."""
    return 2 * S.n


def _grid(v, S: sf.Surface) -> Grid:
    if not isinstance(v, dict):
        raise ConfigError("grid", "expected an object")
    _reject_unknown(v, _GRID_KEYS, "grid.")
    for k in ("lo", "hi", "resolution"):
        if k not in v:
            raise ConfigError(f"grid.{k}", "missing")
    d = grid_dim(S)
    lo, hi = _vector(v["lo"], "grid.lo", d), _vector(v["hi"], "grid.hi", d)
    if np.any(lo > hi):
        raise ConfigError("grid", "empty grid box (lo > hi in some coordinate)")
    res = v["resolution"]
    if isinstance(res, int) and not isinstance(res, bool):
        res = [res] * d
    if not isinstance(res, list) or len(res) != d or not all(
            isinstance(r, int) and not isinstance(r, bool) for r in res):
        raise ConfigError("grid.resolution", f"expected an integer or {d} integers")
    if any(r < 1 for r in res):
        raise ConfigError("grid.resolution", "empty grid (resolution < 1)")
    solve_axis = None
    if isinstance(S, sf.Implicit):
        solve_axis = v.get("solve_axis", 2 * S.n)
        if isinstance(solve_axis, bool) or not isinstance(solve_axis, int) or not 0 <= solve_axis <= 2 * S.n:
            raise ConfigError("grid.solve_axis", f"expected an axis index in 0..{2 * S.n}")
    elif "solve_axis" in v:
        raise ConfigError("grid.solve_axis", "only meaningful for implicit surfaces")
    if isinstance(S, sf.IntrinsicY1Graph) and (np.any(lo < S.box.lo) or np.any(hi > S.box.hi)):
        raise ConfigError("grid", "grid box must lie inside surface.box")
    return Grid(lo, hi, np.array(res), solve_axis)


# ---------------------------------------------------------------------------
# whole configs


def _tolerances(raw: dict, out: dict, keys=("tol_char", "tol_member")):
    for k in keys:
        if k in raw:
            out[k] = _number(raw, k, k, positive=True)


def parse_config(raw, command: str) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "a config must be a JSON object")
    if "command" in raw and raw["command"] != command:
        raise ConfigError("command", f"config is for {raw['command']!r}, invoked as {command!r}")
    _reject_unknown(raw, _COMMAND_KEYS[command])
    fmt = raw.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError("format", f"expected one of {', '.join(FORMATS)}")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", "expected a path string")
    cfg = RunConfig(command, out=out, format=fmt)
    if command == "verify":
        return cfg
    if "surface" not in raw:
        raise ConfigError("surface", "missing")
    S = parse_surface(raw["surface"])
    cfg.surface, cfg.surface_spec = S, raw["surface"]
    p = cfg.params
    _tolerances(raw, p)
    n = S.n
    if command == "curvature":
        if ("grid" in raw) == ("points" in raw):
            raise ConfigError("grid", "give exactly one of 'grid' or 'points'")
        if "grid" in raw:
            p["grid"] = _grid(raw["grid"], S)
        else:
            p["points"] = _vectors(raw["points"], "points", 2 * n + 1)
        if "frobenius" in raw:
            if not isinstance(raw["frobenius"], bool):
                raise ConfigError("frobenius", "expected true or false")
            p["frobenius"] = raw["frobenius"]
        _tolerances(raw, p, ("tol_htg",))
    elif command == "geodesic":
        if not isinstance(S, sf.IntrinsicY1Graph):
            raise ConfigError("surface.kind", "geodesics need an intrinsic Y_1-graph chart; "
                                              "use kind 'intrinsic-y1' (polynomial phi) or 'saddle-y1'")
        if ("start" in raw) == ("point" in raw):
            raise ConfigError("start", "give exactly one of 'start' (chart coordinates) or 'point'")
        if "start" in raw:
            p["start"] = _vector(raw["start"], "start", 2 * n)
        else:
            p["point"] = _vector(raw["point"], "point", 2 * n + 1)
        if ("direction" in raw) == ("tangent_coeffs" in raw):
            raise ConfigError("direction", "give exactly one of 'direction' or 'tangent_coeffs'")
        if "direction" in raw:
            p["direction"] = _vector(raw["direction"], "direction", 2 * n)
        else:
            p["tangent_coeffs"] = _vector(raw["tangent_coeffs"], "tangent_coeffs", 2 * n - 1)
        for k in ("step", "horizon"):
            if k in raw:
                p[k] = _number(raw, k, k, positive=True)
    else:
        given = [k for k in ("point", "points", "param", "params") if k in raw]
        if len(given) != 1:
            raise ConfigError("point", "give exactly one of 'point', 'points', 'param' or 'params'")
        k = given[0]
        if k == "point":
            p["points"] = _vector(raw[k], k, 2 * n + 1)[None, :]
        elif k == "points":
            p["points"] = _vectors(raw[k], k, 2 * n + 1)
        else:
            vals = [raw[k]] if k == "param" else raw[k]
            if not isinstance(vals, list) or not vals:
                raise ConfigError(k, "expected parameter vectors")
            p["params"] = np.array([_vector(v, k, 2 * n) for v in vals])
        if ("directions" in raw) and ("n_dirs" in raw):
            raise ConfigError("directions", "give at most one of 'directions' or 'n_dirs'")
        if "directions" in raw:
            p["directions"] = _vectors(raw["directions"], "directions", 2 * n)
        if "n_dirs" in raw:
            p["n_dirs"] = _integer(raw, "n_dirs", "n_dirs")
        for k in ("step", "horizon", "tol"):
            if k in raw:
                p[k] = _number(raw, k, k, positive=True)
    return cfg


def load_config(path: str | Path, command: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(raw, command)
