"""Exact multivariate polynomials over the reals.

A :class:`Poly` is a sparse map from exponent tuples to coefficients. Every
surface in the package is backed by one of these, and all derivatives used
by the curvature and geodesic code are formal derivatives of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from heisurf._backend import kernels


class DimensionError(ValueError):
    """Raised when objects of incompatible dimension are combined."""


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar function at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _ipow(x: float, k: int) -> float:
    # exponentiation by squaring
    result = 1.0
    base = x
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


class Poly:
    """Polynomial in ``nvars`` real variables.

    Terms are stored in canonical (sorted) exponent order and zero
    coefficients are dropped, so iteration and floating-point summation
    order are deterministic.
    """

    __slots__ = ("nvars", "_terms", "_plan")

    def __init__(self, nvars: int, terms: Mapping[tuple, float] | None = None):
        if nvars < 1:
            raise ValueError(f"nvars must be positive, got {nvars}")
        self.nvars = int(nvars)
        acc: dict[tuple, float] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise DimensionError(
                    f"exponent tuple {exps} has length {len(exps)}, expected {self.nvars}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, 0.0) + float(coeff)
        self._terms = {k: acc[k] for k in sorted(acc) if acc[k] != 0.0}
        self._plan = None

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, c: float) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[float], const: float = 0.0) -> "Poly":
        nv = len(coeffs)
        terms = {(0,) * nv: const}
        for i, c in enumerate(coeffs):
            e = [0] * nv
            e[i] = 1
            terms[tuple(e)] = c
        return cls(nv, terms)

    @classmethod
    def from_records(cls, records: Iterable[Mapping], nvars: int | None = None) -> "Poly":
        """Build from ``[{"coeff": c, "exps": [..]}, ...]`` literals."""
        records = list(records)
        if nvars is None:
            if not records:
                raise ValueError("cannot infer nvars from an empty record list")
            nvars = len(records[0]["exps"])
        terms: dict[tuple, float] = {}
        for rec in records:
            unknown = set(rec) - {"coeff", "exps"}
            if unknown:
                raise ValueError(f"unknown polynomial record keys: {sorted(unknown)}")
            exps = tuple(rec["exps"])
            if len(exps) != nvars:
                raise DimensionError(f"record exponent {list(exps)} has length {len(exps)}, expected {nvars}")
            terms[exps] = terms.get(exps, 0.0) + float(rec["coeff"])
        return cls(nvars, terms)

    def to_records(self) -> list[dict]:
        return [{"coeff": c, "exps": list(e)} for e, c in self._terms.items()]

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict[tuple, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"Poly({self.nvars}, 0)"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(f"v{i}^{k}" if k > 1 else f"v{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"Poly({self.nvars}, " + " + ".join(parts) + ")"

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionError(f"cannot combine Poly in {self.nvars} and {other.nvars} variables")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Poly.constant(self.nvars, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Poly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return Poly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Poly.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------
    def diff(self, var: int) -> "Poly":
        return poly_diff(self, var)

    def __call__(self, x) -> float:
        return poly_eval(self, x)

    def value(self, x) -> float:
        return poly_eval(self, x)

    def jet2(self, x) -> Jet2:
        return poly_jet2(self, x)

    def compose(self, subs: Sequence["Poly"]) -> "Poly":
        """Substitute ``subs[i]`` for variable ``i``."""
        if len(subs) != self.nvars:
            raise DimensionError(f"need {self.nvars} substitutions, got {len(subs)}")
        m = subs[0].nvars
        if any(s.nvars != m for s in subs):
            raise DimensionError("substituted polynomials must share nvars")
        out = Poly(m)
        powers: list[dict[int, Poly]] = [{} for _ in subs]
        for e, c in self._terms.items():
            term = Poly.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    if k not in powers[i]:
                        powers[i][k] = subs[i] ** k
                    term = term * powers[i][k]
            out = out + term
        return out

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Re-express in ``nvars`` variables, variable ``i`` going to ``positions[i]``."""
        if len(positions) != self.nvars:
            raise DimensionError("positions must list one target per variable")
        terms = {}
        for e, c in self._terms.items():
            new = [0] * nvars
            for i, k in enumerate(e):
                new[positions[i]] += k
            terms[tuple(new)] = terms.get(tuple(new), 0.0) + c
        return Poly(nvars, terms)

    # -- compiled evaluation plan --------------------------------------
    def _jet_plan(self):
        """Stack of [p, d_i p, d_i d_j p (i <= j)] flattened for the kernels."""
        if self._plan is None:
            nv = self.nvars
            polys = [self]
            firsts = [self.diff(i) for i in range(nv)]
            polys.extend(firsts)
            for i in range(nv):
                for j in range(i, nv):
                    polys.append(firsts[i].diff(j))
            self._plan = _stack(polys)
        return self._plan


def _stack(polys: Sequence[Poly]):
    nv = polys[0].nvars
    offsets = [0]
    exps, coeffs = [], []
    for p in polys:
        for e, c in p.items():
            exps.append(e)
            coeffs.append(c)
        offsets.append(len(coeffs))
    exps_arr = np.array(exps, dtype=np.int64).reshape(-1, nv)
    return (np.ascontiguousarray(exps_arr),
            np.array(coeffs, dtype=np.float64),
            np.array(offsets, dtype=np.int64))


def _as_vector(x, nvars: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != nvars:
        raise DimensionError(f"expected a point with {nvars} coordinates, got shape {x.shape}")
    return np.ascontiguousarray(x)


def poly_eval(p: Poly, x) -> float:
    """Evaluate ``p`` at ``x`` by direct summation over terms."""
    x = _as_vector(x, p.nvars)
    total = 0.0
    for e, c in p.items():
        term = c
        for xi, k in zip(x, e):
            if k:
                term *= _ipow(float(xi), k)
        total += term
    return total


def poly_eval_batch(p: Poly, X) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != p.nvars:
        raise DimensionError(f"expected points of shape (m, {p.nvars}), got {X.shape}")
    exps, coeffs, offsets = _stack([p])
    return kernels.eval_stack_batch(exps, coeffs, offsets, X)[:, 0]


def poly_diff(p: Poly, var: int) -> Poly:
    """Formal partial derivative with respect to variable ``var``."""
    if not 0 <= var < p.nvars:
        raise IndexError(f"variable index {var} out of range for {p.nvars} variables")
    terms = {}
    for e, c in p.items():
        k = e[var]
        if k:
            new = list(e)
            new[var] = k - 1
            terms[tuple(new)] = c * k
    return Poly(p.nvars, terms)


def _unpack_jet(vals: np.ndarray, nv: int):
    """Split stacked plan values (..., 1 + nv + nv(nv+1)/2) into value/grad/Hessian."""
    value = vals[..., 0]
    grad = vals[..., 1:1 + nv]
    hess = np.empty(vals.shape[:-1] + (nv, nv))
    k = 1 + nv
    for i in range(nv):
        for j in range(i, nv):
            hess[..., i, j] = vals[..., k]
            hess[..., j, i] = vals[..., k]
            k += 1
    return value, grad, hess


def poly_jet2(p: Poly, x) -> Jet2:
    """Value, gradient and Hessian of ``p`` at ``x``.

    The Hessian upper triangle is evaluated from formal second derivatives
    and mirrored, so it is symmetric exactly.
    """
    x = _as_vector(x, p.nvars)
    vals = kernels.eval_stack(*p._jet_plan(), x)
    value, grad, hess = _unpack_jet(vals, p.nvars)
    return Jet2(float(value), grad, hess)


def poly_jet2_batch(p: Poly, X):
    """Vectorized :func:`poly_jet2` over rows of ``X``; returns (values, grads, hessians)."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != p.nvars:
        raise DimensionError(f"expected points of shape (m, {p.nvars}), got {X.shape}")
    vals = kernels.eval_stack_batch(*p._jet_plan(), X)
    return _unpack_jet(vals, p.nvars)


def random_poly(rng: np.random.Generator, nvars: int, degree: int, n_terms: int = 8,
                scale: float = 1.0) -> Poly:
    """Random polynomial with ``n_terms`` monomials of total degree <= ``degree``."""
    terms = {}
    for _ in range(n_terms):
        d = int(rng.integers(0, degree + 1))
        e = [0] * nvars
        for _ in range(d):
            e[int(rng.integers(0, nvars))] += 1
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + float(rng.normal(scale=scale))
    return Poly(nvars, terms)
