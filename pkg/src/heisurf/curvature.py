"""Horizontal second fundamental forms, their norms and the mean curvature.

The unit horizontal normal is extended off S by nu = G^H/|G^H| with
G^H_k = Z_k F evaluated in ambient coordinates. Its horizontal derivatives
D[h, k] = Z_h(nu_k) come from the 2-jet of F alone:

    Z_h(G^H_k) = Zrow_h . Hess F . Zrow_k + dF/dt * c_hk

where c_hk = +1 for (k, h) = (j, n+j), -1 for (k, h) = (n+j, j) (the only
non-constant frame entries are the t-components y_j and -x_j).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from heisurf import core
from heisurf import surface as sf
from heisurf.poly import Poly

VERIFY_TOL = 1e-9
# |h~|^2 itself is a cancellation of O(1) terms, so tol^2 must sit well above roundoff
HTG_TOL = 1e-5


@dataclass
class ShapeForm:
    basis: np.ndarray        # (2n-1, 2n), rows orthonormal
    H_matrix: np.ndarray     # h(e_i, e_j)
    TdH: float
    route_residual: float | None = None

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.H_matrix ** 2))


@dataclass
class HorizontalJet:
    """Batched first-order horizontal data plus D = (Z_h nu_k) at surface points."""

    P: np.ndarray
    GH: np.ndarray           # unnormalized horizontal normal Z_k F
    dGH: np.ndarray          # Z_h (Z_k F)
    grad: np.ndarray
    NH_norm: np.ndarray      # |N^H| with |N| = 1
    nu: np.ndarray
    D: np.ndarray
    TdH: np.ndarray
    char: np.ndarray


def _t_coupling(n: int) -> np.ndarray:
    c = np.zeros((2 * n, 2 * n))
    for j in range(n):
        c[n + j, j] = 1.0    # Z_{n+j} applied to y_j
        c[j, n + j] = -1.0   # Z_j applied to -x_j
    return c


def normalize_derivative(M: np.ndarray, dM: np.ndarray) -> np.ndarray:
    """Z_h(M_k/|M|) from M (m, d) and dM[h, k] = Z_h M_k (m, d, d)."""
    norm = np.linalg.norm(M, axis=1)
    proj = np.einsum("mhl,ml->mh", dM, M)
    return dM / norm[:, None, None] - M[:, None, :] * proj[:, :, None] / norm[:, None, None] ** 3


def horizontal_jet(S: sf.Surface, P, tol_char: float = sf.CHAR_TOL,
                   tol_member: float = sf.MEMBER_TOL) -> HorizontalJet:
    """Characteristic rows get NaN in nu, D and TdH instead of raising."""
    P, GH, gh, g, H = sf.horizontal_normals_batch(S, P, tol_member)
    n = S.n
    Fm = core.frame_matrices(P, n)[:, :2 * n]
    dGH = np.einsum("mhi,mij,mkj->mhk", Fm, H, Fm) + g[:, -1][:, None, None] * _t_coupling(n)
    nh = gh / np.linalg.norm(g, axis=1)
    char = nh <= tol_char
    with np.errstate(invalid="ignore", divide="ignore"):
        nu = GH / gh[:, None]
        D = normalize_derivative(GH, dGH)
        Td = g[:, -1] / gh
    nu[char] = np.nan
    D[char] = np.nan
    Td[char] = np.nan
    return HorizontalJet(P, GH, dGH, g, nh, nu, D, Td, char)


def _single(S, p, tol_char, tol_member) -> HorizontalJet:
    J = horizontal_jet(S, p, tol_char, tol_member)
    if J.char[0]:
        raise sf.CharacteristicPointError(
            f"p = {np.asarray(p).tolist()} is characteristic (|N^H| = {J.NH_norm[0]:.3e})")
    return J


def nu_derivative_matrix(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL,
                         tol_member: float = sf.MEMBER_TOL) -> np.ndarray:
    """D[h, k] = Z_h(nu^H_k)(p), h, k = 0..2n-1."""
    return _single(S, p, tol_char, tol_member).D[0]


def td_h(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL, tol_member: float = sf.MEMBER_TOL) -> float:
    return float(_single(S, p, tol_char, tol_member).TdH[0])


def _symbolic_dGH(F: Poly, n: int, p: np.ndarray) -> np.ndarray:
    """Z_h Z_k F at p by exact polynomial frame operators."""
    d = 2 * n
    out = np.empty((d, d))
    for k in range(d):
        Gk = core.frame_apply(k + 1, F, n)
        for h in range(d):
            out[h, k] = core.frame_apply(h + 1, Gk, n)(p)
    return out


def _fd_nu_derivative(S: sf.Surface, p: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """Fourth-order central differences of the ambient nu field along each Z_h."""
    n = S.n

    def nu_at(x):
        _, g, _ = S.defining_jets(x[None, :])
        G = core.frame_matrix(x)[:2 * n] @ g[0]
        return G / np.linalg.norm(G)

    D = np.empty((2 * n, 2 * n))
    for h in range(2 * n):
        e = core.frame_vector(h + 1, p)
        D[h] = (8 * (nu_at(p + step * e) - nu_at(p - step * e))
                - (nu_at(p + 2 * step * e) - nu_at(p - 2 * step * e))) / (12 * step)
    return D


def _covariant_route(S: sf.Surface, p: np.ndarray, J: HorizontalJet, E: np.ndarray) -> np.ndarray:
    """h(e_i, e_j) = -<nabla_{e_i} Y_j, nu> for the tangent extension
    Y_j = e_j - <e_j, G^H> G^H / |G^H(p)|^2 (polynomial when F is).

    With the flat connection the covariant derivative is the componentwise
    frame derivative, and at p only the Z(<e_j, G^H>) term survives, so
    h(e_i, e_j) = sum e_i[h] e_j[l] Z_h(G^H_l) / |G^H(p)|.
    """
    F = S.defining_poly()
    n = S.n
    GH = J.GH[0]
    if F is not None:
        dG = _symbolic_dGH(F, n, p)
        # nabla_{e_i} Y_j at p, components k
        nabla_Y = -np.einsum("ih,jl,hl->ij", E, E, dG)[:, :, None] * GH / (GH @ GH)
        return -nabla_Y @ J.nu[0]
    # non-polynomial surfaces: differentiate the ambient nu field numerically
    return E @ _fd_nu_derivative(S, p) @ E.T


def second_fundamental_form(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL,
                            tol_member: float = sf.MEMBER_TOL, verify: bool = False) -> ShapeForm:
    """h(e_i, e_j) = <nabla_{e_i} nu, e_j> on the deterministic tangent basis.

    With ``verify`` the second expression -<nabla_X Y, nu> is evaluated
    independently and the largest discrepancy stored in ``route_residual``.
    """
    p = np.asarray(p, dtype=float)
    J = _single(S, p, tol_char, tol_member)
    E = sf.tangent_bases(J.nu)[0]
    Hm = E @ J.D[0] @ E.T
    resid = None
    if verify:
        resid = float(np.max(np.abs(_covariant_route(S, p, J, E) - Hm)))
    return ShapeForm(E, Hm, float(J.TdH[0]), resid)


def symmetrize(form: ShapeForm) -> ShapeForm:
    return replace(form, H_matrix=0.5 * (form.H_matrix + form.H_matrix.T))


def rebase(form: ShapeForm, Q: np.ndarray) -> ShapeForm:
    """Same form on the basis Q @ basis (Q orthogonal)."""
    return replace(form, basis=Q @ form.basis, H_matrix=Q @ form.H_matrix @ Q.T)


def _trace_term(D: np.ndarray) -> np.ndarray:
    return np.einsum("...hk,...kh->...", D, D)


def norm_h_sq_formula(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL,
                      tol_member: float = sf.MEMBER_TOL) -> float:
    """sum Z_h(nu_k) Z_k(nu_h) + 4(n-1) (Td^H)^2."""
    J = _single(S, p, tol_char, tol_member)
    return float(_trace_term(J.D[0]) + 4 * (S.n - 1) * J.TdH[0] ** 2)


def norm_tilde_h_sq_formula(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL,
                            tol_member: float = sf.MEMBER_TOL) -> float:
    """sum Z_h(nu_k) Z_k(nu_h) + 2(n-1) (Td^H)^2."""
    J = _single(S, p, tol_char, tol_member)
    return float(_trace_term(J.D[0]) + 2 * (S.n - 1) * J.TdH[0] ** 2)


def mean_curvature(S: sf.Surface, p, tol_char: float = sf.CHAR_TOL,
                   tol_member: float = sf.MEMBER_TOL) -> float:
    """Horizontal divergence of nu^H, i.e. trace of D."""
    return float(np.trace(nu_derivative_matrix(S, p, tol_char, tol_member)))


def is_htg_at(S: sf.Surface, p, tol: float = HTG_TOL, tol_char: float = sf.CHAR_TOL,
              tol_member: float = sf.MEMBER_TOL) -> bool:
    return norm_tilde_h_sq_formula(S, p, tol_char, tol_member) < tol * tol


def trace_term_with_extension(S: sf.Surface, p, V, tol_char: float = sf.CHAR_TOL,
                              tol_member: float = sf.MEMBER_TOL) -> float:
    """sum Z_h(nu'_k) Z_k(nu'_h) for the unit extension nu' = (G^H + F V)/|G^H + F V|.

    nu' = nu on S but the two fields differ at first order off S. On S,
    Z_h(G^H_k + F V_k) = Z_h G^H_k + (Z_h F) V_k = Z_h G^H_k + G^H_h V_k.
    """
    J = _single(S, p, tol_char, tol_member)
    V = np.asarray(V, dtype=float)
    dM = J.dGH + J.GH[:, :, None] * V[None, None, :]
    return float(_trace_term(normalize_derivative(J.GH, dM)[0]))


# ---------------------------------------------------------------------------
# grids


GRID_COLUMNS = ["charFlag", "TdH", "H", "h_sq", "tilde_h_sq", "htg"]


@dataclass
class CurvatureGrid:
    P: np.ndarray
    char: np.ndarray
    TdH: np.ndarray
    H: np.ndarray
    h_sq: np.ndarray
    tilde_h_sq: np.ndarray
    htg: np.ndarray
    h_sq_frobenius: np.ndarray | None = None
    tilde_h_sq_frobenius: np.ndarray | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.P.shape[1]
        w.writerow([f"p{i}" for i in range(d)] + GRID_COLUMNS)
        for r in range(len(self.P)):
            w.writerow([repr(float(v)) for v in self.P[r]]
                       + [int(self.char[r]), _fmt(self.TdH[r]), _fmt(self.H[r]), _fmt(self.h_sq[r]),
                          _fmt(self.tilde_h_sq[r]), "" if self.char[r] else int(self.htg[r])])
        return buf.getvalue()

    def to_json(self) -> dict:
        def col(a):
            return [None if not np.isfinite(v) else float(v) for v in a]
        return {
            "points": self.P.tolist(),
            "charFlag": [bool(c) for c in self.char],
            "TdH": col(self.TdH), "H": col(self.H), "h_sq": col(self.h_sq),
            "tilde_h_sq": col(self.tilde_h_sq),
            "htg": [None if c else bool(h) for c, h in zip(self.char, self.htg)],
        }


def _fmt(v) -> str:
    return "" if not np.isfinite(v) else repr(float(v))


def curvature_grid(S: sf.Surface, P, tol_char: float = sf.CHAR_TOL, tol_member: float = sf.MEMBER_TOL,
                   tol_htg: float = HTG_TOL, frobenius: bool = False) -> CurvatureGrid:
    """Formula-route quantities on many surface points; optionally the Frobenius route too."""
    J = horizontal_jet(S, P, tol_char, tol_member)
    tr = _trace_term(J.D)
    Td2 = J.TdH ** 2
    h_sq = tr + 4 * (S.n - 1) * Td2
    th_sq = tr + 2 * (S.n - 1) * Td2
    H = np.trace(J.D, axis1=1, axis2=2)
    with np.errstate(invalid="ignore"):
        htg = th_sq < tol_htg ** 2
    out = CurvatureGrid(J.P, J.char, J.TdH, H, h_sq, th_sq, htg)
    if frobenius:
        fro = np.full(len(J.P), np.nan)
        fro_s = np.full(len(J.P), np.nan)
        ok = ~J.char
        if np.any(ok):
            E = sf.tangent_bases(J.nu[ok])
            Hm = np.einsum("mih,mhk,mjk->mij", E, J.D[ok], E)
            fro[ok] = np.sum(Hm ** 2, axis=(1, 2))
            sym = 0.5 * (Hm + np.swapaxes(Hm, 1, 2))
            fro_s[ok] = np.sum(sym ** 2, axis=(1, 2))
        out.h_sq_frobenius = fro
        out.tilde_h_sq_frobenius = fro_s
    return out
