"""Minimization of separable convex objectives over the probability simplex.

Two solvers share one objective interface:

* :func:`solve_pgd`, accelerated projected gradient with the exact
  sort-and-threshold projection, usable for any convex separable objective;
* :func:`solve_multiplier`, which bisects on the common Lagrange multiplier
  ``beta`` and inverts each strictly increasing ``g_j'`` (water-filling).

Each serves as an independent check of the other on strictly convex inputs.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, KKTWarning

__all__ = [
    "project_simplex",
    "ScaledPotentialObjective",
    "PolynomialObjective",
    "SimplexSolution",
    "solve_pgd",
    "solve_multiplier",
    "kkt_spread",
]


def project_simplex(y):
    """Euclidean projection of ``y`` onto ``{x >= 0, sum x = 1}``."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


class ScaledPotentialObjective:
    """``F(x) = sum_j c_j U(k_j x_j)`` for a potential ``U``."""

    def __init__(self, U, c, k):
        self.U = U
        self.c = np.asarray(c, dtype=float)
        self.k = np.asarray(k, dtype=float)

    @property
    def size(self):
        return self.c.size

    @property
    def strictly_convex(self):
        return self.U.kind != "custom"

    def terms(self, x):
        return self.c * np.asarray(self.U.eval(self.k * x), dtype=float)

    def value(self, x):
        return float(np.sum(self.terms(x)))

    def derivative(self, x):
        # right derivative on x >= 0, so a kink at the origin reports its slope
        kx = np.maximum(self.k * x, 1e-300)
        return self.c * self.k * np.asarray(self.U.derivative(kx), dtype=float)


class PolynomialObjective:
    """``F(x) = sum_j A_j x_j^2 + B_j x_j^p`` on ``x >= 0``."""

    strictly_convex = True

    def __init__(self, A, B, p):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.p = float(p)

    @property
    def size(self):
        return self.A.size

    def terms(self, x):
        x = np.maximum(x, 0.0)
        return self.A * x * x + self.B * x**self.p

    def value(self, x):
        return float(np.sum(self.terms(x)))

    def derivative(self, x):
        x = np.maximum(x, 0.0)
        return 2.0 * self.A * x + self.p * self.B * x ** (self.p - 1.0)


@dataclass
class SimplexSolution:
    """Minimizer, minimum and stationarity diagnostics."""

    x: np.ndarray
    value: float
    multiplier: float
    spread: float
    iterations: int
    method: str


def kkt_spread(obj, x, active_tol=1e-9):
    """Common multiplier and relative spread of ``g_j'`` over active coordinates.

    Also folds in violations of ``g_j'(0) >= beta`` on inactive coordinates.
    """
    g = obj.derivative(x)
    active = x > active_tol * max(1.0, np.max(x))
    beta = float(np.mean(g[active]))
    scale = max(abs(beta), 1e-300)
    spread = float((np.max(g[active]) - np.min(g[active])) / scale)
    if np.any(~active):
        lack = np.max(beta - g[~active])
        spread = max(spread, float(lack / scale))
    return beta, spread


def _finish(obj, x, it, method, tol):
    beta, spread = kkt_spread(obj, x)
    if spread > tol:
        warnings.warn(
            f"simplex KKT multipliers spread {spread:.2e} exceeds {tol:.0e}", KKTWarning
        )
    return SimplexSolution(x, obj.value(x), beta, spread, it, method)


def solve_pgd(obj, x0=None, maxiter=200000, xtol=1e-13, kkt_tol=1e-6, warn=True):
    """Accelerated projected gradient with backtracking and adaptive restart."""
    n = obj.size
    x = np.full(n, 1.0 / n) if x0 is None else project_simplex(x0)
    fx = obj.value(x)
    y = x.copy()
    tk = 1.0
    lip = 1.0
    for it in range(1, maxiter + 1):
        fy = obj.value(y)
        gy = obj.derivative(y)
        while True:
            xn = project_simplex(y - gy / lip)
            d = xn - y
            fn = obj.value(xn)
            if fn <= fy + gy @ d + 0.5 * lip * (d @ d) + 1e-15 * abs(fy):
                break
            lip *= 2.0
            if lip > 1e300:
                raise ConvergenceError("projected gradient step size collapsed")
        if fn > fx:
            # restart momentum from the last accepted point
            if tk == 1.0:
                break
            y = x.copy()
            tk = 1.0
            continue
        step = np.max(np.abs(xn - x))
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = xn + ((tk - 1.0) / tn) * (xn - x)
        x, fx, tk = xn, fn, tn
        lip = max(lip * 0.9, 1e-12)
        if step <= xtol:
            break
    else:
        raise ConvergenceError(f"projected gradient did not converge in {maxiter} steps")
    if not warn:
        beta, spread = kkt_spread(obj, x)
        return SimplexSolution(x, obj.value(x), beta, spread, it, "pgd")
    return _finish(obj, x, it, "pgd", kkt_tol)


def _invert(obj, beta, iters=200):
    # x_j(beta) = argmin g_j(x) - beta x over [0, 1], by bisection on g_j'
    lo = np.zeros(obj.size)
    hi = np.ones(obj.size)
    g0 = obj.derivative(lo)
    g1 = obj.derivative(hi)
    out = np.where(beta <= g0, 0.0, np.where(beta >= g1, 1.0, np.nan))
    todo = np.isnan(out)
    for _ in range(iters):
        if not np.any(todo):
            break
        mid = 0.5 * (lo + hi)
        g = obj.derivative(mid)
        up = g < beta
        lo = np.where(todo & up, mid, lo)
        hi = np.where(todo & ~up, mid, hi)
    out[todo] = 0.5 * (lo + hi)[todo]
    return out


def solve_multiplier(obj, iters=200, kkt_tol=1e-6):
    """Water-filling: bisect on ``beta`` until ``sum_j x_j(beta) = 1``."""
    if not obj.strictly_convex:
        raise ValueError("multiplier solver needs strictly convex terms")
    lo = float(np.min(obj.derivative(np.zeros(obj.size))))
    hi = float(np.max(obj.derivative(np.ones(obj.size))))
    for it in range(1, iters + 1):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if np.sum(_invert(obj, mid)) < 1.0:
            lo = mid
        else:
            hi = mid
    x = _invert(obj, 0.5 * (lo + hi))
    x = x / np.sum(x)
    return _finish(obj, x, it, "multiplier", kkt_tol)
