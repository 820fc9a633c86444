"""Hessian quadratic forms, symmetric second differences on affine slices, and the
inequality checks built on them."""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import ConvergenceError
from .density1d import ROUNDOFF, CheckReport, _compare
from .densitynd import (
    _complement,
    _polygon_u1_range,
    expectation,
    marginal_density,
    slice_integral,
)

__all__ = [
    "QuadraticForm",
    "hess_inverse_form",
    "inverse_forms",
    "symmetric_gap",
    "one_point_convexity",
    "d_curvature",
    "gamma_eta",
    "check_quantitative_logconcavity",
    "check_lemma_app_main",
    "KERNEL_RTOL",
]

KERNEL_RTOL = 1e-10


@dataclass
class QuadraticForm:
    """A symmetric positive semidefinite matrix with a unit direction."""

    H: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        n = np.atleast_1d(np.asarray(self.n, dtype=float))
        if H.shape != (n.size, n.size):
            raise ValueError("H must be square with the size of n")
        if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(H)))):
            raise ValueError("H must be symmetric")
        H = 0.5 * (H + H.T)
        if np.min(np.linalg.eigvalsh(H)) < -1e-12 * max(1.0, np.trace(np.abs(H))):
            raise ValueError("H must be positive semidefinite")
        nn = np.linalg.norm(n)
        if nn == 0:
            raise ValueError("direction must be nonzero")
        self.H = H
        self.n = n / nn


def inverse_forms(H, n):
    """``<n, H^{-1} n>`` for a stack of PSD matrices ``H[..., :, :]``.

    An eigenvalue at most ``KERNEL_RTOL * trace`` counts as kernel; any
    component of ``n`` along the kernel makes the value ``+inf``.
    """
    H = np.asarray(H, dtype=float)
    n = np.asarray(n, dtype=float)
    w, V = np.linalg.eigh(H)
    tr = np.sum(np.abs(w), axis=-1, keepdims=True)
    kernel = w <= KERNEL_RTOL * tr
    c = np.einsum("...ij,i->...j", V, n)
    with np.errstate(divide="ignore"):
        terms = np.where(kernel, 0.0, c * c / np.where(kernel, 1.0, w))
    along_kernel = np.any(kernel & (np.abs(c) > np.sqrt(KERNEL_RTOL)), axis=-1)
    return np.where(along_kernel, np.inf, np.sum(terms, axis=-1))


def hess_inverse_form(Q, n=None):
    """``<n, H^{-1} n> = 1 / inf{<y, H y> : <n, y> = 1}``, possibly ``+inf``.

    Parameters
    ----------
    Q : QuadraticForm or ndarray
        A form, or the matrix ``H`` together with ``n``.
    """
    if not isinstance(Q, QuadraticForm):
        Q = QuadraticForm(Q, n)
    return float(inverse_forms(Q.H, Q.n))


# ----------------------------------------------------------------------
# symmetric second differences on an affine slice

def _feasible_start(AZ, lo_rhs, hi_rhs, z0):
    # Chebyshev center of {z : -lo_rhs <= AZ z <= hi_rhs}; None if empty
    k = AZ.shape[1]
    M = np.vstack([AZ, -AZ])
    rhs = np.concatenate([hi_rhs, lo_rhs])
    if np.all(M @ z0 < rhs):
        return z0
    norms = np.linalg.norm(M, axis=1)
    res = optimize.linprog(
        np.concatenate([np.zeros(k), [-1.0]]),
        A_ub=np.column_stack([M, norms]), b_ub=rhs,
        bounds=[(None, None)] * k + [(0, None)], method="highs",
    )
    if res.status != 0 or res.x[-1] <= 0:
        return None
    return res.x[:k]


def symmetric_gap(rho, x, eta, t, gtol=1e-10, maxiter=500):
    """``inf {(f(x+u) + f(x-u)) / 2 - f(x) : <eta, u> = t}`` and the minimizing ``x + u``.

    Newton's method in coordinates of the hyperplane ``<eta, u> = t``, kept
    inside the polytope by step halving. When a constraint binds, the
    problem is handed to SLSQP and stationarity is checked through
    nonnegative multipliers on the active constraints.

    Returns
    -------
    value : float
        ``+inf`` if no admissible ``u`` exists.
    xplus : ndarray or None

    Raises
    ------
    ConvergenceError
        If the gradient criterion ``gtol`` is not met.
    """
    x = np.asarray(x, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not rho.contains(x):
        raise ValueError("x must lie in the domain")
    fx = float(rho.g(x))
    e2 = float(eta @ eta)
    u0 = t * eta / e2
    slack = np.maximum(rho.b - rho.A @ x, 0.0)
    if rho.n == 1:
        if np.all(np.abs(rho.A @ u0) <= slack):
            val = 0.5 * (float(rho.g(x + u0)) + float(rho.g(x - u0))) - fx
            return max(val, 0.0), x + u0
        return np.inf, None
    Z = _complement(eta / np.sqrt(e2))
    AZ = rho.A @ Z
    Au0 = rho.A @ u0
    # A(x + u) <= b and A(x - u) <= b  <=>  -(slack + Au0) <= AZ z <= slack - Au0
    hi_rhs = slack - Au0
    lo_rhs = slack + Au0
    z = _feasible_start(AZ, lo_rhs, hi_rhs, np.zeros(Z.shape[1]))
    if z is None:
        M = np.vstack([AZ, -AZ])
        res = optimize.linprog(np.zeros(Z.shape[1]), A_ub=M,
                               b_ub=np.concatenate([hi_rhs, lo_rhs]),
                               bounds=[(None, None)] * Z.shape[1], method="highs")
        if res.status != 0:
            return np.inf, None
        z = res.x

    def parts(z):
        u = u0 + Z @ z
        return x + u, x - u

    def F(z):
        xp, xm = parts(z)
        return 0.5 * (float(rho.g(xp)) + float(rho.g(xm))) - fx

    def feasible(z):
        w = AZ @ z
        return np.all(w <= hi_rhs) and np.all(-w <= lo_rhs)

    if rho.grad is None:
        return _slsqp(rho, F, None, z, AZ, lo_rhs, hi_rhs, parts, gtol)

    def G(z):
        xp, xm = parts(z)
        return 0.5 * Z.T @ (rho.grad(xp) - rho.grad(xm))

    xp0, _ = parts(z)
    scale = max(1.0, float(np.linalg.norm(rho.grad(xp0))))
    fz = F(z)
    g = G(z)
    for _ in range(maxiter):
        if np.linalg.norm(g) <= gtol * scale:
            xp, _ = parts(z)
            return max(fz, 0.0), xp
        if rho.hess is not None:
            xp, xm = parts(z)
            Hz = 0.5 * Z.T @ (rho.hess(xp) + rho.hess(xm)) @ Z
            mu = 1e-14 * max(1.0, np.trace(Hz))
            step = -np.linalg.solve(Hz + mu * np.eye(Hz.shape[0]), g)
        else:
            step = -g
        a = 1.0
        while a > 1e-20:
            zn = z + a * step
            if feasible(zn):
                fn = F(zn)
                if fn <= fz + 1e-4 * a * (g @ step) or (fn <= fz and a < 1e-8):
                    break
                # near the optimum F is flat to rounding; accept a full step
                # that halves the gradient instead
                if a == 1.0 and np.linalg.norm(G(zn)) <= 0.5 * np.linalg.norm(g):
                    break
            a *= 0.5
        else:
            # stalled against the boundary or at the precision limit
            break
        if np.max(np.abs(zn - z)) <= 1e-16 * max(1.0, np.max(np.abs(z))) and fn >= fz:
            break
        z, fz = zn, fn
        g = G(z)
    if np.linalg.norm(g) <= gtol * scale:
        xp, _ = parts(z)
        return max(fz, 0.0), xp
    if AZ.shape[1] == 1:
        return _bisect_interval(F, G, AZ[:, 0], lo_rhs, hi_rhs, parts)
    return _slsqp(rho, F, G, z, AZ, lo_rhs, hi_rhs, parts, gtol, scale)


def _bisect_interval(F, G, a, lo_rhs, hi_rhs, parts, iters=200):
    # one free coordinate: the feasible set is an interval and G is monotone
    zl, zh = -np.inf, np.inf
    for ai, lo_i, hi_i in zip(a, lo_rhs, hi_rhs):
        if ai > 1e-14:
            zh, zl = min(zh, hi_i / ai), max(zl, -lo_i / ai)
        elif ai < -1e-14:
            zh, zl = min(zh, -lo_i / ai), max(zl, hi_i / ai)
    if not (np.isfinite(zl) and np.isfinite(zh)):
        raise ConvergenceError("feasible interval is unbounded")
    if zh < zl:
        if zl - zh > 1e-12 * max(1.0, abs(zl)):
            return np.inf, None
        zl = zh = 0.5 * (zl + zh)
    if G(np.array([zl]))[0] >= 0:
        z = zl
    elif G(np.array([zh]))[0] <= 0:
        z = zh
    else:
        lo, hi = zl, zh
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if G(np.array([mid]))[0] < 0:
                lo = mid
            else:
                hi = mid
        z = 0.5 * (lo + hi)
    z = np.array([z])
    xp, _ = parts(z)
    return max(float(F(z)), 0.0), xp


def _slsqp(rho, F, G, z0, AZ, lo_rhs, hi_rhs, parts, gtol, scale=1.0):
    cons = [
        {"type": "ineq", "fun": lambda z: hi_rhs - AZ @ z, "jac": lambda z: -AZ},
        {"type": "ineq", "fun": lambda z: lo_rhs + AZ @ z, "jac": lambda z: AZ},
    ]
    res = optimize.minimize(F, z0, jac=G, method="SLSQP", constraints=cons,
                            options={"ftol": 1e-16, "maxiter": 1000})
    z = res.x
    w = AZ @ z
    # pull a slightly infeasible solver output back toward an interior point
    a = 1.0
    center = None
    while not (np.all(w <= hi_rhs) and np.all(-w <= lo_rhs)):
        if center is None:
            center = _feasible_start(AZ, lo_rhs, hi_rhs, z0 + np.inf)
            if center is None:
                center = z0
        a *= 0.5
        if a < 1e-12:
            raise ConvergenceError("constrained minimization left the domain")
        z = center + a * (res.x - center)
        w = AZ @ z
    if G is None:
        g = optimize.approx_fprime(z, F, 1e-8)
    else:
        g = G(z)
    span = np.maximum(1.0, np.abs(hi_rhs) + np.abs(lo_rhs))
    act_hi = hi_rhs - w <= 1e-9 * span
    act_lo = lo_rhs + w <= 1e-9 * span
    normals = np.vstack([AZ[act_hi], -AZ[act_lo]])
    if normals.shape[0]:
        # g + sum_i lam_i a_i = 0 with lam >= 0
        lam, resid = optimize.nnls(normals.T, -g)
    else:
        resid = np.linalg.norm(g)
    tol = gtol * scale if G is not None else 1e-6 * scale
    if resid > tol:
        raise ConvergenceError(f"stationarity residual {resid:.2e} above {tol:.0e}")
    xp, _ = parts(z)
    return max(float(F(z)), 0.0), xp


def d_curvature(rho, eta, x, t, return_witness=False):
    """``D_{eta,x}(t) = inf {(f(x+) + f(2x - x+)) / 2 - f(x) : <eta, x+> = <eta, x> + t}``.

    The search starts from ``x+ = x + t eta / |eta|^2``.
    """
    val, xp = symmetric_gap(rho, x, eta, t)
    return (val, xp) if return_witness else val


def one_point_convexity(rho, x, n, gamma):
    """``inf f(x+) + f(x-) - 2 f(x)`` with ``x- = 2x - x+`` and ``<n, x+-> = <n, x> +- gamma``.

    For small ``gamma`` the ratio to ``gamma^2`` tends to ``1 / <n, H^{-1} n>``.
    """
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    return 2.0 * symmetric_gap(rho, x, n, gamma)[0]


# ----------------------------------------------------------------------
# slice averages of the curvature indicator

def _slice_nodes(rho, eta_unit, r, m):
    # nodes and trapezoid weights for fine (2m) and coarse (m) rules on one slice
    n = rho.n
    frac = np.linspace(0.0, 1.0, 2 * m + 1)
    tw = np.ones(2 * m + 1)
    tw[[0, -1]] = 0.5
    cw = np.zeros(2 * m + 1)
    cw[::2] = 2.0
    cw[[0, -1]] = 1.0
    if n == 1:
        return (r * eta_unit)[None, :], np.ones(1), np.ones(1)
    Z = _complement(eta_unit)
    AZ = rho.A @ Z
    rhs = rho.b - r * (rho.A @ eta_unit)

    def chord(a_u, rhs_row):
        lo, hi = -np.inf, np.inf
        for a, c in zip(a_u, rhs_row):
            if a > 1e-14:
                hi = min(hi, c / a)
            elif a < -1e-14:
                lo = max(lo, c / a)
            elif c < -1e-12:
                return 0.0, 0.0
        return (lo, hi) if hi > lo else (0.0, 0.0)

    if n == 2:
        lo, hi = chord(AZ[:, 0], rhs)
        pts = r * eta_unit + (lo + (hi - lo) * frac)[:, None] * Z[:, 0]
        return pts, tw * (hi - lo), cw * (hi - lo)
    u1lo, u1hi = _polygon_u1_range(AZ, rhs)
    if not u1hi > u1lo:
        return np.zeros((0, n)), np.zeros(0), np.zeros(0)
    pts, wf, wc = [], [], []
    for k, u1 in enumerate(u1lo + (u1hi - u1lo) * frac):
        lo, hi = chord(AZ[:, 1], rhs - u1 * AZ[:, 0])
        u2 = lo + (hi - lo) * frac
        pts.append(r * eta_unit + u1 * Z[:, 0] + u2[:, None] * Z[:, 1])
        wf.append(tw[k] * tw * (hi - lo) * (u1hi - u1lo))
        wc.append(cw[k] * cw * (hi - lo) * (u1hi - u1lo))
    return np.vstack(pts), np.concatenate(wf), np.concatenate(wc)


def gamma_eta(rho, eta, D, s, t, m=None, dtol=1e-9, return_error=False):
    """Conditional probability that ``D_{eta,x}(t) >= D`` given ``<eta, x> = s``.

    Curvature values within ``dtol * max(1, D)`` below ``D`` count as
    reaching it, so that exact ties are resolved consistently.
    """
    eta = np.asarray(eta, dtype=float)
    nrm = float(np.linalg.norm(eta))
    if m is None:
        m = {1: 1, 2: 64, 3: 12}[rho.n]
    pts, wf, wc = _slice_nodes(rho, eta / nrm, s / nrm, m)
    if pts.shape[0] == 0:
        raise ValueError("slice misses the domain")
    with np.errstate(under="ignore"):
        dens = np.exp(-(np.asarray(rho.g(pts), dtype=float) - rho.f_shift))
    dens = np.where(rho.contains(pts), dens, 0.0)
    # nodes carrying a relative weight below 1e-14 are skipped; their mass
    # is added to the error estimate instead
    skip = dens < 1e-14 * np.max(dens)
    if D <= 0:
        ind = np.ones(pts.shape[0])
    else:
        ind = np.zeros(pts.shape[0])
        for i, p in enumerate(pts):
            if not skip[i]:
                ind[i] = float(d_curvature(rho, eta, p, t) >= D - dtol * max(1.0, D))
    den_f = wf @ dens
    den_c = wc @ dens
    if den_f <= 0:
        raise ValueError("slice density vanishes")
    g_f = (wf @ (ind * dens)) / den_f
    g_c = (wc @ (ind * dens)) / den_c if rho.n > 1 else g_f
    err = abs(g_f - g_c) / 3.0 + (wf @ (skip * dens)) / den_f
    g_f = float(min(max(g_f, 0.0), 1.0))
    return (g_f, float(err)) if return_error else g_f


def check_quantitative_logconcavity(rho, eta, s, t, D, **kw):
    """``sqrt(alpha(s-t) alpha(s+t)) <= (1 - gamma (1 - e^{-D})) alpha(s)``.

    ``alpha`` is the density of ``<eta, X>``; normalizing constants cancel.
    """
    eta = np.asarray(eta, dtype=float)
    nrm = float(np.linalg.norm(eta))
    r = np.array([s - t, s, s + t]) / nrm
    a, e = slice_integral(rho, eta / nrm, r)
    am, a0, ap = a
    if a0 <= 0:
        raise ValueError("alpha vanishes at s")
    gam, gerr = gamma_eta(rho, eta, D, s, t, return_error=True, **kw)
    factor = 1.0 - gam * (1.0 - np.exp(-D))
    lhs = float(np.sqrt(am * ap))
    rhs = factor * a0
    dl = 0.5 * (np.sqrt(ap / am) * e[0] + np.sqrt(am / ap) * e[2]) if am > 0 and ap > 0 else 0.0
    dr = factor * e[1] + a0 * (1.0 - np.exp(-D)) * gerr
    tol = 10.0 * (dl + dr) + ROUNDOFF * a0
    return _compare("quantitative log-concavity", lhs / a0, rhs / a0, tol / a0,
                    gamma=gam, gamma_error=gerr, D=D, s=s, t=t)


def check_lemma_app_main(rho, n, t, n_grid=801):
    """``sup alpha_n >= p^{3/2} / ((8 - 4p) sqrt(2t))`` with ``p = Pr(<n, H(X)^{-1} n> <= t)``."""
    if rho.hess is None:
        raise ValueError("density needs an analytic Hessian")
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)

    def indicator(x):
        return (inverse_forms(rho.hess(x), n) <= t).astype(float)

    p, perr = expectation(rho, indicator, eta=n, n_grid=n_grid, max_m=256 if rho.n == 2 else 64)
    p = min(max(p, 0.0), 1.0)
    alpha = marginal_density(rho, n)
    M = alpha.sup()

    def bound(q):
        return q**1.5 / ((8.0 - 4.0 * q) * np.sqrt(2.0 * t))

    rhs = bound(p)
    drhs = abs(bound(min(1.0, p + perr)) - rhs)
    tol = 10.0 * drhs + M * alpha.tolerance()
    return _compare("sup bound from form quantile", M, rhs, tol, relation=">=", p=p)
