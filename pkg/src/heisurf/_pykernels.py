"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_ckernels`` module exactly; ``_backend``
picks one of the two at import time.
"""

import numpy as np

NAME = "python"


def eval_stack(exps, coeffs, offsets, x):
    """Evaluate a stack of polynomials (flattened terms + offsets) at one point."""
    k = offsets.shape[0] - 1
    if coeffs.shape[0] == 0:
        return np.zeros(k)
    mono = coeffs * np.prod(np.power(x[None, :], exps), axis=1)
    seg = np.repeat(np.arange(k), np.diff(offsets))
    return np.bincount(seg, weights=mono, minlength=k)


def eval_stack_batch(exps, coeffs, offsets, X):
    k = offsets.shape[0] - 1
    m = X.shape[0]
    if coeffs.shape[0] == 0:
        return np.zeros((m, k))
    mono = coeffs[None, :] * np.prod(np.power(X[:, None, :], exps[None, :, :]), axis=2)
    out = np.zeros((m, k))
    for s in range(k):
        a, b = offsets[s], offsets[s + 1]
        if b > a:
            out[:, s] = mono[:, a:b].sum(axis=1)
    return out


def _unpack(vals, nv):
    grad = vals[1:1 + nv]
    hess = np.empty((nv, nv))
    k = 1 + nv
    for i in range(nv):
        for j in range(i, nv):
            hess[i, j] = hess[j, i] = vals[k]
            k += 1
    return vals[0], grad, hess


def geodesic_rhs_from_jet(n, y, alpha, grad, hess):
    """Right-hand side of the reduced first-order geodesic system.

    ``y`` is the doubled state (xi[n], eta[n-1], tau, Xi[n], Eta_dot[n-1]);
    ``alpha, grad, hess`` is the 2-jet of the graph function at (xi, eta, tau).
    """
    m = 2 * n
    xi = y[:n]
    eta = y[n:m - 1]
    Xi = y[m:m + n]
    Hd = y[m + n:]
    phi_tau = grad[m - 1]
    tau_dot = 2.0 * alpha * Xi[0] + np.dot(eta, Xi[1:]) - np.dot(xi[1:], Hd)
    vel = np.concatenate([Xi, Hd, [tau_dot]])
    alpha_dot = np.dot(vel, grad)
    M = 2.0 * phi_tau * alpha_dot * Xi[0] + vel @ hess @ vel
    w_phi = grad[0] + 2.0 * alpha * phi_tau
    x_t = grad[1:n] + eta * phi_tau
    y_t = grad[n:m - 1] - xi[1:] * phi_tau
    W = 1.0 + w_phi * w_phi + np.dot(x_t, x_t) + np.dot(y_t, y_t)
    out = np.empty_like(y)
    out[:n] = Xi
    out[n:m - 1] = Hd
    out[m - 1] = tau_dot
    out[m] = -w_phi * M / W
    out[m + 1:m + n] = -x_t * M / W
    out[m + n:] = -y_t * M / W
    return out


def _rhs(exps, coeffs, offsets, n, y):
    vals = eval_stack(exps, coeffs, offsets, y[:2 * n])
    alpha, grad, hess = _unpack(vals, 2 * n)
    return geodesic_rhs_from_jet(n, y, alpha, grad, hess)


def _in_box(q, lo, hi):
    return bool(np.all(q >= lo) and np.all(q <= hi))


def rk4_geodesic(exps, coeffs, offsets, n, y0, h, nsteps, lo, hi):
    """Fixed-step RK4 on the reduced system.

    Returns ``(states, n_done, exited)``; ``states[:n_done + 1]`` are valid.
    Integration stops early when the position leaves ``[lo, hi]``.
    """
    dim = y0.shape[0]
    states = np.empty((nsteps + 1, dim))
    states[0] = y0
    y = y0.copy()
    m = 2 * n
    for k in range(nsteps):
        k1 = _rhs(exps, coeffs, offsets, n, y)
        k2 = _rhs(exps, coeffs, offsets, n, y + 0.5 * h * k1)
        k3 = _rhs(exps, coeffs, offsets, n, y + 0.5 * h * k2)
        k4 = _rhs(exps, coeffs, offsets, n, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            raise FloatingPointError(f"non-finite geodesic state after step {k + 1}")
        if not _in_box(y_new[:m], lo, hi):
            return states, k, True
        states[k + 1] = y_new
        y = y_new
    return states, nsteps, False
