"""Tabulated one-dimensional densities and the constant-free checks on them.

Integrals use the trapezoid rule on a uniform grid. Level-set probabilities
are computed exactly for the piecewise-linear interpolant of the grid values,
so they are consistent with the trapezoid normalization.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import HypothesisFailed, PremiseNotMet

__all__ = [
    "DensityGrid1D",
    "DensityStats",
    "CheckReport",
    "density_stats",
    "check_prop21",
    "check_second_derivative_tail",
    "check_var_via_logconcavity",
    "prekopa_leindler_check",
    "ROUNDOFF",
]

# relative floor added to every quadrature tolerance; covers floating-point
# rounding when the Richardson estimate is itself at machine precision
ROUNDOFF = 1e-12


@dataclass
class CheckReport:
    """Outcome of one inequality check.

    ``passed`` means ``lhs <= rhs + tolerance`` (or the stated reverse
    direction for lower bounds, recorded in ``relation``).
    """

    name: str
    passed: bool
    lhs: float
    rhs: float
    tolerance: float = 0.0
    relation: str = "<="
    details: dict = field(default_factory=dict)

    @property
    def margin(self):
        return self.rhs - self.lhs if self.relation == "<=" else self.lhs - self.rhs


def _compare(name, lhs, rhs, tol, relation="<=", **details):
    ok = lhs <= rhs + tol if relation == "<=" else lhs >= rhs - tol
    return CheckReport(name, bool(ok), float(lhs), float(rhs), float(tol), relation, details)


def _trapezoid(y, h):
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        return 0.0
    return float(h * (np.sum(y) - 0.5 * (y[0] + y[-1])))


class DensityGrid1D:
    """A density tabulated on ``s_min + h * arange(n)``.

    Parameters
    ----------
    s_min : float
    h : float
        Grid step.
    values : array_like
        Nonnegative values.
    normalize : bool
        Rescale so that the trapezoid integral is 1.
    quad_error : float
        Carried estimate of the error in the values relative to their
        integral (from the quadrature that produced them).
    """

    def __init__(self, s_min, h, values, normalize=True, quad_error=0.0):
        values = np.asarray(values, dtype=float).copy()
        if values.ndim != 1 or values.size < 3:
            raise ValueError("need at least three grid values")
        if h <= 0:
            raise ValueError("grid step must be positive")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("values must be finite and nonnegative")
        total = _trapezoid(values, h)
        if total <= 0:
            raise ValueError("density has zero mass")
        if normalize:
            values /= total
        self.s_min = float(s_min)
        self.h = float(h)
        self.values = values
        self.quad_error = float(quad_error)

    @classmethod
    def from_function(cls, density, lo, hi, n=4001, **kw):
        """Tabulate a vectorized (possibly unnormalized) density on ``[lo, hi]``."""
        s = np.linspace(lo, hi, n)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            v = np.nan_to_num(np.asarray(density(s), dtype=float), nan=0.0, posinf=0.0)
        return cls(lo, (hi - lo) / (n - 1), v, **kw)

    @classmethod
    def from_logdensity(cls, logdensity, lo, hi, n=4001, **kw):
        """Tabulate ``exp(logdensity)``, shifted by its maximum to avoid overflow."""
        s = np.linspace(lo, hi, n)
        with np.errstate(over="ignore", invalid="ignore"):
            lv = np.asarray(logdensity(s), dtype=float)
        lv = np.where(np.isnan(lv), -np.inf, lv)
        v = np.exp(lv - np.max(lv))
        return cls(lo, (hi - lo) / (n - 1), v, **kw)

    @property
    def n(self):
        return self.values.size

    @property
    def s(self):
        return self.s_min + self.h * np.arange(self.n)

    @property
    def s_max(self):
        return self.s_min + self.h * (self.n - 1)

    @property
    def support(self):
        return self.s_min, self.s_max

    @property
    def log_values(self):
        with np.errstate(divide="ignore"):
            return np.log(self.values)

    def mass(self):
        return _trapezoid(self.values, self.h)

    def __call__(self, x):
        """Linear interpolation, zero outside the grid."""
        return np.interp(x, self.s, self.values, left=0.0, right=0.0)

    def log_interp(self, x):
        """Geometric interpolation (linear in ``log``), zero outside the grid.

        Points within ``1e-9 * h`` of a node take the node value exactly.
        """
        x = np.asarray(x, dtype=float)
        pos = (x - self.s_min) / self.h
        near = np.rint(pos)
        pos = np.where(np.abs(pos - near) <= 1e-9, near, pos)
        inside = (pos >= 0) & (pos <= self.n - 1)
        k = np.clip(np.floor(pos).astype(np.int64), 0, self.n - 2)
        mu = np.clip(pos - k, 0.0, 1.0)
        a = self.values[k]
        b = self.values[k + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                mu == 0.0, a,
                np.where(mu == 1.0, b, np.exp((1 - mu) * np.log(a) + mu * np.log(b))),
            )
        out = np.where((a == 0) & (mu > 0), 0.0, out)
        out = np.where((b == 0) & (mu > 0), 0.0, out)
        return np.where(inside, np.nan_to_num(out, nan=0.0), 0.0)

    def cdf(self):
        """Trapezoid cumulative distribution at the grid nodes."""
        v = self.values
        c = np.concatenate([[0.0], np.cumsum(0.5 * self.h * (v[1:] + v[:-1]))])
        return c / c[-1]

    def moment(self, k, center=0.0):
        return _trapezoid(self.values * (self.s - center) ** k, self.h) / self.mass()

    def mean(self):
        return self.moment(1)

    def variance(self):
        return self.moment(2, self.mean())

    def sup(self):
        return float(np.max(self.values)) / self.mass()

    def quantile(self, q):
        """Inverse of the piecewise-quadratic trapezoid CDF, by linear interpolation."""
        c = self.cdf()
        return float(np.interp(q, c, self.s))

    def median(self):
        return self.quantile(0.5)

    def level_prob(self, p, strict=False):
        """``Pr(alpha(xi) <= p)`` for the piecewise-linear interpolant of the grid.

        On each cell the set ``{alpha <= p}`` is an interval; the interpolant is
        integrated over it in closed form.
        """
        v = self.values / self.mass()
        a, b = v[:-1], v[1:]
        h = self.h
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        full = hi < p if strict else hi <= p
        part = (~full) & (lo < p if strict else lo <= p)
        total = np.sum(0.5 * h * (a[full] + b[full]))
        if np.any(part):
            # fraction of the cell next to the lower endpoint where alpha <= p
            lo_p, hi_p = lo[part], hi[part]
            frac = (p - lo_p) / (hi_p - lo_p)
            total += np.sum(h * frac * 0.5 * (lo_p + p))
        return float(total)

    def neg_log_second_diff(self):
        """Central second differences of ``-log alpha`` at interior nodes.

        Returns
        -------
        s : ndarray
            Interior nodes where the three neighboring values are positive.
        fpp : ndarray
        """
        v = self.values
        ok = (v[:-2] > 0) & (v[1:-1] > 0) & (v[2:] > 0)
        lv = np.log(np.where(v > 0, v, 1.0))
        fpp = -(lv[2:] - 2.0 * lv[1:-1] + lv[:-2]) / self.h**2
        return self.s[1:-1][ok], fpp[ok]

    def is_log_concave(self, tol=1e-9):
        """Midpoint concavity of ``log alpha`` on consecutive nodes where positive.

        The positive set must also be an interval of nodes.
        """
        v = self.values
        pos = np.flatnonzero(v > 0)
        if pos.size and pos[-1] - pos[0] + 1 != pos.size:
            return False
        lv = np.log(v[pos])
        if lv.size < 3:
            return True
        return bool(np.all(lv[1:-1] - 0.5 * (lv[2:] + lv[:-2]) >= -tol))

    def richardson_error(self, func=None):
        """Estimate ``|T_h - T_2h| / 3`` for ``int func(alpha, s) ds``."""
        y = self.values if func is None else func(self.values, self.s)
        n = y.size if y.size % 2 else y.size - 1
        fine = _trapezoid(y[:n], self.h)
        coarse = _trapezoid(y[:n:2], 2 * self.h)
        return abs(fine - coarse) / 3.0

    def tolerance(self):
        """Ten times the estimated quadrature error, plus a roundoff floor."""
        return 10.0 * (self.richardson_error() + self.quad_error) + ROUNDOFF


@dataclass
class DensityStats:
    sup: float
    mean: float
    variance: float
    median: float
    quantiles: dict
    level_prob: object


def density_stats(alpha, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95)):
    """Summary statistics of a tabulated density; ``level_prob`` is a callable."""
    return DensityStats(
        sup=alpha.sup(),
        mean=alpha.mean(),
        variance=alpha.variance(),
        median=alpha.median(),
        quantiles={q: alpha.quantile(q) for q in quantiles},
        level_prob=alpha.level_prob,
    )


def _level_threshold(alpha, prob, iters=200):
    # inf {a : Pr(alpha(xi) < a) > prob}, by bisection in a
    lo, hi = 0.0, alpha.sup()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if alpha.level_prob(mid, strict=True) > prob:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def check_prop21(alpha, p_grid=None):
    """Three facts about a one-dimensional log-concave density.

    Returns
    -------
    dict
        ``item1``: ``sup alpha * sqrt(Var)``;
        ``item2``: ``sup alpha / a0`` with ``a0 = inf{a : Pr(alpha(xi) < a) > 1/4}``;
        ``item3``: :class:`CheckReport` for the worst ``p`` of
        ``Pr(alpha(xi) <= p) <= p / sup alpha`` over ``p_grid``.
    """
    M = alpha.sup()
    if p_grid is None:
        p_grid = M * np.linspace(0.0, 1.0, 101)[1:]
    tol = alpha.tolerance()
    worst = None
    for p in np.asarray(p_grid, dtype=float):
        rep = _compare("level probability", alpha.level_prob(p), p / M, tol, p=float(p))
        if worst is None or rep.margin < worst.margin:
            worst = rep
    return {
        "item1": M * np.sqrt(alpha.variance()),
        "item2": M / _level_threshold(alpha, 0.25),
        "item3": worst,
    }


def check_second_derivative_tail(alpha, C):
    """``Pr(f''(xi) > (C M)^2) <= 4 / C`` with ``f = -log alpha`` and ``M = sup alpha``."""
    if C < 4:
        raise ValueError("C must be at least 4")
    M = alpha.sup()
    s, fpp = alpha.neg_log_second_diff()
    thresh = (C * M) ** 2
    w = np.zeros(alpha.n)
    idx = np.rint((s - alpha.s_min) / alpha.h).astype(np.int64)
    w[idx[fpp > thresh]] = 1.0
    # trapezoid with the indicator evaluated at nodes
    lhs = _trapezoid(alpha.values * w, alpha.h) / alpha.mass()
    return _compare("second derivative tail", lhs, 4.0 / C, alpha.tolerance(),
                    threshold=thresh, sup=M)


def check_var_via_logconcavity(alpha, t, delta):
    """Ratio ``sqrt(Var) * delta / t`` under the premise on ``alpha(xi +- t)``.

    The premise ``Pr(sqrt(alpha(xi+t) alpha(xi-t)) <= (1-delta) alpha(xi)) >= 1/2``
    is evaluated at cell midpoints weighted by the trapezoid mass of each cell.
    Values between nodes use geometric interpolation, which keeps the exact
    ties of log-quadratic densities intact; ties are then resolved with a
    relative roundoff slack.

    Raises
    ------
    PremiseNotMet
    """
    if t <= 0 or not 0 < delta < 1:
        raise ValueError("need t > 0 and 0 < delta < 1")
    s = alpha.s
    mid = 0.5 * (s[1:] + s[:-1])
    a_mid = alpha.log_interp(mid)
    prod = np.sqrt(alpha.log_interp(mid + t) * alpha.log_interp(mid - t))
    cell = 0.5 * alpha.h * (alpha.values[1:] + alpha.values[:-1]) / alpha.mass()
    prob = float(np.sum(cell[prod <= (1.0 - delta) * a_mid * (1.0 + ROUNDOFF)]))
    if prob < 0.5 - alpha.tolerance():
        raise PremiseNotMet(f"premise probability {prob:.6f} is below 1/2")
    return float(np.sqrt(alpha.variance()) * delta / t)


def _log_interp_error(F, z):
    """Bound on the log error of geometric interpolation of ``F`` at ``z``.

    On a cell the error is ``mu (1 - mu) c / 2`` where ``c`` bounds the
    second difference of ``-log F`` over the cell and its neighbors.
    """
    v = F.values
    lv = np.log(np.where(v > 0, v, 1.0))
    c = np.zeros(F.n)
    c[1:-1] = np.abs(lv[2:] - 2.0 * lv[1:-1] + lv[:-2])
    c[(v == 0)] = 0.0
    # cell j spans nodes j and j + 1; look one node further on each side
    cell = np.maximum.reduce([c[:-1], c[1:], np.r_[0.0, c[:-2]], np.r_[c[2:], 0.0]])
    pos = (np.asarray(z, dtype=float) - F.s_min) / F.h
    k = np.clip(np.floor(pos).astype(np.int64), 0, F.n - 2)
    mu = np.clip(pos - k, 0.0, 1.0)
    return 0.5 * mu * (1.0 - mu) * cell[k]


def prekopa_leindler_check(F1, F2, F, lam, rtol=1e-12):
    """Verify the pointwise hypothesis on the grid product, then the integral bound.

    ``F`` is evaluated at ``(1-lam) x + lam y`` by geometric interpolation.
    Between nodes this can fall below a log-concave ``F`` by the local
    interpolation error, so the hypothesis is accepted within ten times
    that error (zero at the nodes) plus ``rtol``.

    Parameters
    ----------
    F1, F2, F : DensityGrid1D
        Nonnegative grids (need not be normalized).
    lam : float
        In ``(0, 1)``.

    Raises
    ------
    HypothesisFailed
        With the first offending ``(x, y)`` as witness.
    """
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    x = F1.s
    y = F2.s
    f1 = F1.values
    f2 = F2.values
    for i0 in range(0, x.size, 256):
        xs = x[i0:i0 + 256, None]
        z = (1 - lam) * xs + lam * y[None, :]
        with np.errstate(divide="ignore"):
            rhs = np.exp((1 - lam) * np.log(f1[i0:i0 + 256, None]) + lam * np.log(f2[None, :]))
        lhs = F.log_interp(z)
        slack = np.exp(-10.0 * _log_interp_error(F, z)) * (1 - rtol)
        bad = lhs < rhs * slack
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise HypothesisFailed(
                "pointwise hypothesis fails", witness=(float(x[i0 + i]), float(y[j]))
            )
    I = F.mass()
    I1 = F1.mass()
    I2 = F2.mass()
    bound = I1 ** (1 - lam) * I2**lam
    tol = 10.0 * (F.richardson_error() + F1.richardson_error() + F2.richardson_error())
    tol += ROUNDOFF * max(I, bound)
    return _compare("integral bound", I, bound, tol, relation=">=")
