"""Log-concave densities ``exp(-f)`` in dimension at most three, and slice quadrature.

A density is ``f = g + indicator(P)`` with ``g`` smooth and convex and ``P``
a bounded polytope ``{x : A x <= b}`` that contains the truncation box.
Integrals over hyperplanes ``<eta, x> = r`` are computed in coordinates
``x = r eta + Z u`` where the columns of ``Z`` span the orthogonal
complement of ``eta``; slice endpoints are exact since ``P`` is polyhedral.
"""

import itertools

import numpy as np
from scipy import optimize

from ..errors import QuadratureError
from .density1d import DensityGrid1D

__all__ = [
    "LogConcaveDensityND",
    "slice_integral",
    "slice_expectation",
    "marginal_density",
    "expectation",
    "TAIL_LEVEL",
]

# log of the density ratio below which tails are truncated (1e-14)
TAIL_LEVEL = 14.0 * np.log(10.0)
MAX_DIM = 3


def _complement(eta):
    n = eta.size
    q, _ = np.linalg.qr(np.column_stack([eta, np.eye(n)]))
    return q[:, 1:n]


class LogConcaveDensityND:
    """Density proportional to ``exp(-g(x))`` on a polytope.

    Parameters
    ----------
    g : callable
        Vectorized over the last axis: ``g(x)`` with ``x.shape == (..., n)``.
    grad, hess : callable or None
        Gradient ``(..., n)`` and Hessian ``(..., n, n)`` of ``g``.
    lo, hi : array_like
        Truncation box; ``exp(-g)`` must be negligible on its boundary.
    A, b : array_like or None
        Extra linear constraints ``A x <= b``.
    name : str
    """

    def __init__(self, g, lo, hi, grad=None, hess=None, A=None, b=None, name="custom",
                 params=None):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        n = lo.size
        if n > MAX_DIM or n < 1:
            raise ValueError(f"dimension must be between 1 and {MAX_DIM}")
        if hi.shape != lo.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi in every coordinate")
        rows = [np.eye(n), -np.eye(n)]
        rhs = [hi, -lo]
        if A is not None:
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.atleast_1d(np.asarray(b, dtype=float))
            if A.shape != (b.size, n):
                raise ValueError("A must have shape (len(b), n)")
            rows.append(A)
            rhs.append(b)
        self.n = n
        self.g = g
        self.grad = grad
        self.hess = hess
        self.lo = lo
        self.hi = hi
        self.A = np.vstack(rows)
        self.b = np.concatenate(rhs)
        self.name = name
        self.params = params or {}
        self.vertices = self._vertices()
        if self.vertices.shape[0] == 0:
            raise ValueError("domain polytope is empty")
        center = self.vertices.mean(axis=0)
        self.f_shift = float(min(np.min(self.g(self.vertices)), self.g(center)))

    # ------------------------------------------------------------------
    # built-in families

    @classmethod
    def polynomial(cls, P=None, quartic=None, linear=None, center=None, lo=None, hi=None,
                   A=None, b=None, n=None, name="polynomial"):
        """``g(x) = 1/2 y^T P y + sum_i a_i y_i^4 + c^T y`` with ``y = x - center``.

        Without an explicit box, one is chosen so that ``g`` exceeds its value
        at ``center`` by ``TAIL_LEVEL`` on its boundary (requires ``P`` or
        ``quartic`` to be coercive).
        """
        for v in (P, quartic, linear, center, lo):
            if v is not None:
                n = np.atleast_1d(v).shape[0] if n is None else n
        if n is None:
            raise ValueError("cannot infer the dimension")
        P = np.zeros((n, n)) if P is None else np.atleast_2d(np.asarray(P, dtype=float))
        a = np.zeros(n) if quartic is None else np.broadcast_to(
            np.asarray(quartic, dtype=float), (n,)).copy()
        c = np.zeros(n) if linear is None else np.asarray(linear, dtype=float)
        x0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        if not np.allclose(P, P.T) or np.min(np.linalg.eigvalsh(P)) < -1e-12 or np.any(a < 0):
            raise ValueError("polynomial potential must be convex")

        def g(x):
            y = x - x0
            return (0.5 * np.einsum("...i,ij,...j->...", y, P, y)
                    + np.sum(a * y**4, axis=-1) + y @ c)

        def grad(x):
            y = x - x0
            return y @ P + 4.0 * a * y**3 + c

        def hess(x):
            y = x - x0
            H = np.broadcast_to(P, y.shape[:-1] + (n, n)).copy()
            H[..., np.arange(n), np.arange(n)] += 12.0 * a * y**2
            return H

        if lo is None or hi is None:
            lam = float(np.min(np.linalg.eigvalsh(P)))
            amin = float(np.min(a))
            cn = float(np.linalg.norm(c))
            if lam <= 0 and amin <= 0:
                raise ValueError("need an explicit box for a non-coercive potential")

            def lower(R):
                return 0.5 * lam * R * R + amin * R**4 / n - cn * R

            R = 1.0
            while lower(R) < TAIL_LEVEL + 5.0:
                R *= 1.25
            lo = x0 - R
            hi = x0 + R
        return cls(g, lo, hi, grad=grad, hess=hess, A=A, b=b, name=name,
                   params={"P": P, "quartic": a, "linear": c, "center": x0})

    @classmethod
    def gaussian(cls, precision=None, mean=None, n=2):
        """Gaussian with the given precision matrix (identity by default)."""
        if precision is None:
            precision = np.eye(n if mean is None else np.size(mean))
        P = np.atleast_2d(np.asarray(precision, dtype=float))
        obj = cls.polynomial(P=P, center=mean, n=P.shape[0], name="gaussian")
        return obj

    @classmethod
    def quartic(cls, n=2, a=1.0, b=0.0, center=None):
        """``sum_i a y_i^4 + b y_i^2 / 2``."""
        return cls.polynomial(P=b * np.eye(n), quartic=np.full(n, a), center=center, n=n,
                              name="quartic")

    @classmethod
    def uniform_box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        return cls.polynomial(n=lo.size, lo=lo, hi=hi, name="uniform")

    @classmethod
    def uniform_polytope(cls, A, b, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        return cls.polynomial(n=lo.size, lo=lo, hi=hi, A=A, b=b, name="uniform")

    @classmethod
    def exponential(cls, rate, lo, hi):
        """``exp(-<rate, x>)`` on a box (a linear potential plus an indicator)."""
        return cls.polynomial(linear=rate, lo=lo, hi=hi, name="exponential")

    # ------------------------------------------------------------------
    # geometry

    def _vertices(self):
        A, b, n = self.A, self.b, self.n
        out = []
        for rows in itertools.combinations(range(A.shape[0]), n):
            M = A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, b[list(rows)])
            if np.all(A @ x <= b + 1e-9 * (1 + np.abs(b))):
                out.append(x)
        if not out:
            return np.zeros((0, n))
        return np.unique(np.round(np.array(out), 12), axis=0)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.A.T <= self.b + 1e-12 * (1 + np.abs(self.b)), axis=-1)

    def f(self, x):
        """``g`` on the polytope, ``+inf`` outside."""
        x = np.asarray(x, dtype=float)
        val = np.asarray(self.g(x), dtype=float)
        return np.where(self.contains(x), val, np.inf)

    def projection_range(self, eta):
        r = self.vertices @ eta
        return float(np.min(r)), float(np.max(r))

    def chebyshev_center(self):
        """Interior point of the polytope farthest from its facets."""
        A, b = self.A, self.b
        norms = np.linalg.norm(A, axis=1)
        res = optimize.linprog(
            np.concatenate([np.zeros(self.n), [-1.0]]),
            A_ub=np.column_stack([A, norms]), b_ub=b,
            bounds=[(None, None)] * self.n + [(0, None)], method="highs",
        )
        return res.x[: self.n]


# ----------------------------------------------------------------------
# slice quadrature

def _intervals(a_u, rhs):
    """Interval ``{u : a_u * u <= rhs}`` for each row of ``rhs`` (shape (R, k))."""
    lo = np.full(rhs.shape[0], -np.inf)
    hi = np.full(rhs.shape[0], np.inf)
    empty = np.zeros(rhs.shape[0], dtype=bool)
    for k, a in enumerate(a_u):
        if a > 1e-14:
            hi = np.minimum(hi, rhs[:, k] / a)
        elif a < -1e-14:
            lo = np.maximum(lo, rhs[:, k] / a)
        else:
            empty |= rhs[:, k] < -1e-12
    empty |= hi <= lo
    return lo, hi, empty


def _integrand(rho, x, weight):
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        val = np.exp(-(np.asarray(rho.g(x), dtype=float) - rho.f_shift))
    if weight is not None:
        val = val * weight(x)
    return val


def _trap_pair(vals, width):
    # trapezoid with m and 2m intervals; vals has 2m+1 nodes on the last axis
    m2 = vals.shape[-1] - 1
    fine = width / m2 * (np.sum(vals, axis=-1) - 0.5 * (vals[..., 0] + vals[..., -1]))
    c = vals[..., ::2]
    coarse = 2 * width / m2 * (np.sum(c, axis=-1) - 0.5 * (c[..., 0] + c[..., -1]))
    return fine, coarse


def _slices_2d(rho, eta, Z, r, m, weight):
    # chord integrals along u for each r
    a_eta = rho.A @ eta
    a_u = rho.A @ Z[:, 0]
    rhs = rho.b[None, :] - r[:, None] * a_eta[None, :]
    lo, hi, empty = _intervals(a_u, rhs)
    lo = np.where(empty, 0.0, lo)
    hi = np.where(empty, 0.0, hi)
    frac = np.linspace(0.0, 1.0, 2 * m + 1)
    u = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    x = r[:, None, None] * eta + u[..., None] * Z[:, 0]
    vals = _integrand(rho, x, weight)
    fine, coarse = _trap_pair(vals, hi - lo)
    _, coarser = _trap_pair(vals[..., ::2], hi - lo)
    # one Romberg step on each pair; the difference of the two Simpson
    # values, undivided, bounds the error for any convergence order >= 1
    s_fine = (4.0 * fine - coarse) / 3.0
    s_coarse = (4.0 * coarse - coarser) / 3.0
    return s_fine, np.abs(s_fine - s_coarse)


def _polygon_u1_range(AZ, rhs_row):
    # extent of {u : AZ u <= rhs} along u1, from pairwise vertices
    best_lo, best_hi = np.inf, -np.inf
    k = AZ.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            M = AZ[[i, j]]
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) < 1e-14:
                continue
            u = np.linalg.solve(M, rhs_row[[i, j]])
            if np.all(AZ @ u <= rhs_row + 1e-10 * (1 + np.abs(rhs_row))):
                best_lo = min(best_lo, u[0])
                best_hi = max(best_hi, u[0])
    return best_lo, best_hi


def _slices_3d(rho, eta, Z, r, m, weight):
    AZ = rho.A @ Z
    a_eta = rho.A @ eta
    frac = np.linspace(0.0, 1.0, 2 * m + 1)
    out = np.zeros(r.size)
    err = np.zeros(r.size)
    for idx, ri in enumerate(r):
        rhs = rho.b - ri * a_eta
        u1lo, u1hi = _polygon_u1_range(AZ, rhs)
        if not u1hi > u1lo:
            continue
        u1 = u1lo + (u1hi - u1lo) * frac
        rows = rhs[None, :] - u1[:, None] * AZ[None, :, 0]
        lo, hi, empty = _intervals(AZ[:, 1], rows)
        lo = np.where(empty, 0.0, lo)
        hi = np.where(empty, 0.0, hi)
        u2 = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        x = ri * eta + u1[:, None, None] * Z[:, 0] + u2[..., None] * Z[:, 1]
        vals = _integrand(rho, x, weight)
        fine_in, coarse_in = _trap_pair(vals, hi - lo)
        # outer rule: fine inner with fine outer against coarse inner with coarse outer
        f_out, _ = _trap_pair(fine_in, u1hi - u1lo)
        _, c_out = _trap_pair(coarse_in, u1hi - u1lo)
        out[idx] = f_out
        err[idx] = abs(f_out - c_out) / 3.0
    return out, err


def slice_integral(rho, eta, r, weight=None, m=None, rtol=1e-10, max_m=None):
    """Integrals of ``weight * exp(-(f - f_shift))`` over hyperplanes ``<eta, x> = r``.

    The number of intervals doubles until the error estimate falls below
    ``rtol`` times the largest slice value or ``max_m`` is reached. Planar
    slices use Simpson values from a Romberg step on ``2m + 1`` nodes, with
    the difference of the Simpson values on ``2m`` and ``m`` intervals as
    error; solid slices use nested trapezoids with a Richardson estimate.

    Parameters
    ----------
    rho : LogConcaveDensityND
    eta : array_like
        Unit vector.
    r : array_like
    weight : callable or None
        Extra factor evaluated at points ``(..., n)``.

    Returns
    -------
    values, errors : ndarray
        Unnormalized slice integrals (shifted by ``exp(f_shift)``) and their
        error estimates.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.size != rho.n:
        raise ValueError("direction has the wrong dimension")
    eta = eta / np.linalg.norm(eta)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if rho.n == 1:
        x = (r * eta[0])[:, None]
        vals = np.where(rho.contains(x), _integrand(rho, x, weight), 0.0)
        return vals, np.zeros_like(vals)
    Z = _complement(eta)
    if rho.n == 2:
        m = 64 if m is None else m
        max_m = 4096 if max_m is None else max_m
        fn = _slices_2d
    else:
        m = 16 if m is None else m
        max_m = 256 if max_m is None else max_m
        fn = _slices_3d
    while True:
        vals = np.zeros(r.size)
        errs = np.zeros(r.size)
        for i0 in range(0, r.size, 128):
            v, e = fn(rho, eta, Z, r[i0:i0 + 128], m, weight)
            vals[i0:i0 + 128] = v
            errs[i0:i0 + 128] = e
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        if np.max(errs) <= rtol * scale or 2 * m > max_m:
            return vals, errs
        m *= 2


def slice_expectation(rho, eta, s, func, **kw):
    """Conditional expectation of ``func(x)`` given ``<eta, x> = s``."""
    num, e_num = slice_integral(rho, eta, [s], weight=func, **kw)
    den, e_den = slice_integral(rho, eta, [s], **kw)
    if den[0] <= 0:
        raise ValueError("slice has zero density")
    return float(num[0] / den[0])


def marginal_density(rho, eta, n_grid=None, max_error=1e-6, trim=True):
    """Density of ``<eta, X>`` for ``X ~ rho`` on a uniform grid.

    ``n_grid`` defaults to 2001 points in dimension at most two and 801 in
    dimension three; with the default the grid is doubled (at most twice)
    until the error estimate meets ``max_error``.

    Raises
    ------
    QuadratureError
        If the estimated error relative to the normalization exceeds ``max_error``.
    """
    eta = np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    if n_grid is not None:
        return _marginal_on_grid(rho, eta, int(n_grid), max_error, trim)
    n = 801 if rho.n == 3 else 2001
    for attempt in range(3):
        try:
            return _marginal_on_grid(rho, eta, n, max_error, trim)
        except QuadratureError:
            if attempt == 2:
                raise
            n = 2 * n - 1


def _marginal_on_grid(rho, eta, n_grid, max_error, trim):
    lo, hi = rho.projection_range(eta)
    r = np.linspace(lo, hi, n_grid)
    vals, errs = slice_integral(rho, eta, r)
    h = (hi - lo) / (n_grid - 1)
    mass = h * (np.sum(vals) - 0.5 * (vals[0] + vals[-1]))
    if mass <= 0:
        raise QuadratureError("marginal has zero mass")
    rel_slice = float(np.max(errs)) * (hi - lo) / mass
    if trim:
        keep = np.flatnonzero(vals >= 1e-14 * np.max(vals))
        i0, i1 = max(keep[0] - 1, 0), min(keep[-1] + 1, n_grid - 1)
        vals = vals[i0:i1 + 1]
        lo = r[i0]
    alpha = DensityGrid1D(lo, h, vals, quad_error=rel_slice)
    total = rel_slice + alpha.richardson_error()
    if total > max_error:
        raise QuadratureError(f"estimated marginal error {total:.2e} exceeds {max_error:.0e}")
    return alpha


def expectation(rho, func, eta=None, n_grid=801, max_m=None):
    """``E func(X)`` by slice quadrature along ``eta`` (the first axis by default).

    ``max_m`` caps the refinement of the slices of ``func``; discontinuous
    integrands never reach the relative tolerance, and their remaining
    Richardson estimate is included in the returned error.

    Returns
    -------
    value, error : float
    """
    eta = np.eye(rho.n)[0] if eta is None else np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    lo, hi = rho.projection_range(eta)
    r = np.linspace(lo, hi, n_grid)
    h = (hi - lo) / (n_grid - 1)
    den, e_den = slice_integral(rho, eta, r)
    num, e_num = slice_integral(rho, eta, r, weight=func, max_m=max_m)

    def trap(y, step):
        return step * (np.sum(y) - 0.5 * (y[0] + y[-1]))

    Z = trap(den, h)
    val = trap(num, h) / Z
    coarse = trap(num[::2], 2 * h) / trap(den[::2], 2 * h)
    err = abs(val - coarse) / 3.0 + (np.max(e_num) + abs(val) * np.max(e_den)) * (hi - lo) / Z
    return float(val), float(err)
