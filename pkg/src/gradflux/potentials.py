"""Even convex interaction potentials and their derived scalar functionals.

A :class:`Potential` represents an even convex function ``U`` on the real
line, possibly equal to ``+inf`` outside a symmetric interval.  Besides point
evaluation it offers

* the almost-everywhere second derivative ``U''``,
* the second-order ratio
  ``delta_U(s) = inf_{t>0} (U(s+t) + U(s-t) - 2 U(s)) / min(t**2, 1)``,
* the convexity gap ``W(r) = inf_s (U(s+r) + U(s-r)) / 2 - U(s)``,
* the small-ratio set ``{s : delta_U(s) < delta}`` and its Gibbs mass.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, FormatError, GridError

__all__ = [
    "Potential",
    "ConvexityProfile",
    "SmallRatioSet",
    "TailFactor",
    "Infimum",
    "parse_potential",
    "load_potential",
    "save_potential",
]

KIND_CODES = {"quadratic": 0, "power": 1, "power_plus_quadratic": 2, "custom": 3}

Infimum = namedtuple("Infimum", ["value", "argmin"])
Infimum.__doc__ = "Value of an infimum together with a point attaining (or approaching) it."

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)
_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 12
# N(s, t) is nondecreasing in t >= 0, so for t >= 1 the ratio N/min(t^2,1) = N(t)
# never goes below its value at t = 1; the search can stop at t = 1.
_T_GRID = np.geomspace(1e-6, 1.0, 121)


@dataclass(frozen=True)
class SmallRatioSet:
    """The set ``{s : U(s) < inf, delta_U(s) < delta}`` on a grid.

    Attributes
    ----------
    delta : float
    intervals : list of (float, float)
        Disjoint intervals, symmetric about 0, in increasing order.
    mass : float
        Integral of ``exp(-U)`` over the nonnegative half of the set.
    """

    delta: float
    intervals: list
    mass: float

    def positive_part(self):
        """Intervals intersected with ``[0, inf)``."""
        out = []
        for a, b in self.intervals:
            if b > 0:
                out.append((max(a, 0.0), b))
        return out


@dataclass(frozen=True)
class TailFactor:
    """Shape report for the single-edge Gibbs tail factor.

    ``constant`` is ``None``: only its existence is known.
    """

    integral: float
    exponent: float
    n_classes: int
    constant: object = None


@dataclass
class ConvexityProfile:
    """Tabulated ``delta_U`` and ``W`` together with one small-ratio set."""

    s: np.ndarray
    delta_values: np.ndarray
    r: np.ndarray
    gap_values: np.ndarray
    small_set: SmallRatioSet = None

    @property
    def small_set_mass(self):
        return None if self.small_set is None else self.small_set.mass


def _asarray(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(out, like):
    if np.ndim(like) == 0:
        return float(out)
    return out


class Potential:
    """Even convex potential ``U``.

    Use the constructors :meth:`quadratic`, :meth:`power`,
    :meth:`power_plus_quadratic`, :meth:`custom` and :meth:`absolute` rather
    than calling ``__init__`` directly.

    Parameters
    ----------
    kind : str
        One of ``quadratic``, ``power``, ``power_plus_quadratic``, ``custom``.
    p : float, optional
        Exponent for the power families.
    table : tuple of arrays, optional
        ``(x, u)`` for custom potentials.  ``x`` must be strictly increasing
        and symmetric about 0; ``U`` is linearly interpolated inside the
        table range and ``+inf`` outside the open interval ``(x[0], x[-1])``.
    eval_tolerance : float
        Relative tolerance for derived minimizations.
    """

    def __init__(self, kind, p=None, table=None, eval_tolerance=1e-10):
        if kind not in KIND_CODES:
            raise ValueError(f"unknown potential kind {kind!r}")
        self.kind = kind
        self.eval_tolerance = float(eval_tolerance)
        self.p = None if p is None else float(p)
        self._tx = self._tu = None
        if kind == "power":
            if self.p is None or not self.p > 1:
                raise ValueError("power potential needs p > 1")
        elif kind == "power_plus_quadratic":
            if self.p is None or not self.p > 2:
                raise ValueError("power_plus_quadratic potential needs p > 2")
        elif kind == "custom":
            if table is None:
                raise ValueError("custom potential needs a table")
            self._set_table(*table)
        elif self.p is not None and kind == "quadratic":
            raise ValueError("quadratic potential takes no exponent")

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def quadratic(cls, **kw):
        return cls("quadratic", **kw)

    @classmethod
    def power(cls, p, **kw):
        return cls("power", p=p, **kw)

    @classmethod
    def power_plus_quadratic(cls, p, **kw):
        return cls("power_plus_quadratic", p=p, **kw)

    @classmethod
    def custom(cls, x, u, **kw):
        return cls("custom", table=(x, u), **kw)

    @classmethod
    def absolute(cls, xmax=40.0, n=8001, **kw):
        """Tabulated ``|x|`` on ``[-xmax, xmax]``."""
        x = np.linspace(-xmax, xmax, n)
        x[n // 2] = 0.0
        return cls.custom(x, np.abs(x), **kw)

    def _set_table(self, x, u):
        x = _asarray(x)
        u = _asarray(u)
        if x.ndim != 1 or x.shape != u.shape or x.size < 3:
            raise FormatError("custom table needs matching 1D arrays with at least 3 points")
        if not np.all(np.diff(x) > 0):
            raise FormatError("custom table x must be strictly increasing")
        scale = max(abs(x[0]), abs(x[-1]))
        if not np.allclose(x, -x[::-1], rtol=0, atol=1e-12 * scale):
            raise FormatError("custom table range must be symmetric about 0")
        if not np.all(np.isfinite(u)):
            raise FormatError("custom table values must be finite")
        uscale = max(1.0, np.max(np.abs(u)))
        if not np.allclose(u, u[::-1], rtol=0, atol=1e-12 * uscale):
            raise FormatError("custom potential must be even")
        slopes = np.diff(u) / np.diff(x)
        if np.any(np.diff(slopes) < -1e-9 * max(1.0, np.max(np.abs(slopes)))):
            raise FormatError("custom potential must be convex")
        self._tx = x
        self._tu = u
        self._h = float(np.min(np.diff(x)))

    # ------------------------------------------------------------------
    @property
    def finite_domain(self):
        """Symmetric open interval on which ``U`` is finite."""
        if self.kind == "custom":
            return (float(self._tx[0]), float(self._tx[-1]))
        return (-np.inf, np.inf)

    @property
    def code(self):
        return KIND_CODES[self.kind]

    @property
    def table(self):
        if self._tx is None:
            return None
        return self._tx.copy(), self._tu.copy()

    def spec(self):
        """Short text form used in manifests."""
        if self.kind == "quadratic":
            return "quadratic"
        if self.kind == "power":
            return f"power:{self.p:g}"
        if self.kind == "power_plus_quadratic":
            return f"power_plus_quadratic:{self.p:g}"
        return f"custom:{self._tx.size}pts:{self._tx[-1]:g}"

    def __repr__(self):
        return f"Potential({self.spec()})"

    def kernel_args(self):
        """Arguments consumed by the compiled sampling kernels."""
        if self.kind == "custom":
            return self.code, 0.0, self._tx, self._tu
        p = 2.0 if self.p is None else self.p
        empty = np.zeros(1)
        return self.code, p, empty, empty

    def in_domain(self, x):
        lo, hi = self.finite_domain
        x = _asarray(x)
        return (x > lo) & (x < hi)

    # ------------------------------------------------------------------
    # pointwise evaluation
    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """``U(x)``; ``+inf`` exactly outside the finite domain."""
        xa = _asarray(x)
        a = np.abs(xa)
        if self.kind == "quadratic":
            out = a * a
        elif self.kind == "power":
            out = a**self.p
        elif self.kind == "power_plus_quadratic":
            out = a**self.p + a * a
        else:
            out = np.interp(xa, self._tx, self._tu)
            out = np.where(self.in_domain(xa), out, np.inf)
        return _scalar_or_array(out, x)

    def derivative(self, x):
        """A monotone selection of ``U'``: right derivative of ``U(|x|)`` times sign."""
        xa = _asarray(x)
        a = np.abs(xa)
        sg = np.sign(xa)
        if self.kind == "quadratic":
            out = 2.0 * xa
        elif self.kind == "power":
            out = sg * self.p * a ** (self.p - 1.0)
        elif self.kind == "power_plus_quadratic":
            out = sg * self.p * a ** (self.p - 1.0) + 2.0 * xa
        else:
            slopes = np.diff(self._tu) / np.diff(self._tx)
            k = np.clip(np.searchsorted(self._tx, a, side="right") - 1, 0, slopes.size - 1)
            out = sg * slopes[k]
            out = np.where(self.in_domain(xa), out, np.nan)
        return _scalar_or_array(out, x)

    def second_derivative(self, x):
        """Almost-everywhere second derivative.

        Closed forms for the built-in families, with ``+inf`` where the
        analytic value diverges (power ``p < 2`` at 0).  Custom potentials
        use a symmetric second difference at the table spacing.
        """
        xa = _asarray(x)
        if np.any(~self.in_domain(xa)):
            raise DomainError("second derivative requested outside the finite domain")
        a = np.abs(xa)
        if self.kind == "quadratic":
            out = np.full_like(a, 2.0)
        elif self.kind in ("power", "power_plus_quadratic"):
            p = self.p
            with np.errstate(divide="ignore"):
                out = p * (p - 1.0) * a ** (p - 2.0)
            if p < 2:
                out = np.where(a == 0, np.inf, out)
            elif p == 2:
                out = np.full_like(a, 2.0)
            if self.kind == "power_plus_quadratic":
                out = out + 2.0
        else:
            hi = self._tx[-1]
            h = np.minimum(self._h, 0.5 * (hi - a))
            up = np.interp(xa + h, self._tx, self._tu)
            dn = np.interp(xa - h, self._tx, self._tu)
            mid = np.interp(xa, self._tx, self._tu)
            out = (up + dn - 2.0 * mid) / (h * h)
        return _scalar_or_array(out, x)

    # ------------------------------------------------------------------
    # symmetric second differences
    def symmetric_difference(self, s, t):
        """``N(s, t) = U(s+t) + U(s-t) - 2 U(s)`` evaluated without cancellation.

        For the power families and small ``t/|s|`` a binomial series replaces
        the direct difference.
        """
        s, t = np.broadcast_arrays(_asarray(s), _asarray(t))
        if self.kind == "quadratic":
            return 2.0 * t * t
        if self.kind == "custom":
            out = (
                np.interp(s + t, self._tx, self._tu)
                + np.interp(s - t, self._tx, self._tu)
                - 2.0 * np.interp(s, self._tx, self._tu)
            )
            ok = self.in_domain(s + t) & self.in_domain(s - t)
            return np.where(ok, np.maximum(out, 0.0), np.inf)
        out = _power_symdiff(s, t, self.p)
        if self.kind == "power_plus_quadratic":
            out = out + 2.0 * t * t
        return out

    def _ratio_limit(self, s):
        """``lim_{t -> 0+} N(s, t) / t**2``."""
        if self.kind != "custom":
            return _asarray(self.second_derivative(s))
        # piecewise linear: zero inside a segment, +inf on a kink
        slopes = np.diff(self._tu) / np.diff(self._tx)
        jumps = np.diff(slopes)
        kinks = self._tx[1:-1][jumps > 1e-12 * max(1.0, np.max(np.abs(slopes)))]
        s = _asarray(s)
        if kinks.size == 0:
            return np.zeros_like(s)
        idx = np.clip(np.searchsorted(kinks, s), 0, kinks.size - 1)
        near = np.minimum(
            np.abs(s - kinks[idx]), np.abs(s - kinks[np.maximum(idx - 1, 0)])
        )
        return np.where(near <= 1e-12 * max(1.0, abs(self._tx[-1])), np.inf, 0.0)

    def second_order_ratio(self, s, return_witness=False):
        """``delta_U(s)``: infimum over ``t > 0`` of ``N(s,t) / min(t**2, 1)``.

        Minimization on a geometric ``t`` grid followed by golden-section
        refinement in ``log t``; the analytic ``t -> 0`` limit competes as a
        candidate with witness ``t = 0``.

        Returns
        -------
        float or ndarray, or Infimum if ``return_witness``
        """
        sa = np.atleast_1d(_asarray(s))
        if np.any(~self.in_domain(sa)):
            raise DomainError("second-order ratio requested where U is infinite")
        value, tstar = self._ratio_search(sa)
        if np.ndim(s) == 0:
            value, tstar = float(value[0]), float(tstar[0])
        if return_witness:
            return Infimum(value, tstar)
        return value

    def _ratio_search(self, s):
        tg = _T_GRID
        vals = self.symmetric_difference(s[:, None], tg[None, :]) / (tg * tg)[None, :]
        k = np.argmin(vals, axis=1)
        lo = np.log(tg[np.maximum(k - 1, 0)])
        hi = np.log(tg[np.minimum(k + 1, tg.size - 1)])

        def f(logt):
            t = np.exp(logt)
            return self.symmetric_difference(s, t) / (t * t)

        a, b = lo, hi
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(60):
            left = fc <= fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            nc = b - _GOLDEN * (b - a)
            nd = a + _GOLDEN * (b - a)
            # reuse the surviving interior point
            new_c = np.where(left, nc, d)
            new_d = np.where(left, c, nd)
            fnew = f(np.where(left, nc, nd))
            fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
            c, d = new_c, new_d
        cand = np.stack([vals[np.arange(s.size), k], fc, fd])
        tcand = np.stack([tg[k], np.exp(c), np.exp(d)])
        j = np.argmin(cand, axis=0)
        best = cand[j, np.arange(s.size)]
        tbest = tcand[j, np.arange(s.size)]
        lim = np.broadcast_to(self._ratio_limit(s), s.shape)
        use_lim = lim <= best
        return np.where(use_lim, lim, best), np.where(use_lim, 0.0, tbest)

    # ------------------------------------------------------------------
    def convexity_gap(self, r, method="auto", return_witness=False):
        """``W(r) = inf_s (U(s+r) + U(s-r)) / 2 - U(s)``.

        Parameters
        ----------
        r : float or array_like
        method : {"auto", "search"}
            ``auto`` uses closed forms for the built-in families and an exact
            breakpoint search for tabulated potentials; ``search`` runs the
            expanding-window numerical search for any potential.
        """
        if np.ndim(r) > 0:
            if return_witness:
                raise ValueError("witnesses are returned for scalar r only")
            ra = np.asarray(r, dtype=float)
            flat = [self.convexity_gap(x, method) for x in ra.ravel()]
            return np.array(flat).reshape(ra.shape)
        r = abs(float(r))
        if r == 0:
            res = Infimum(0.0, 0.0)
        elif method == "search":
            res = self._gap_search(r)
        elif method == "auto":
            res = self._gap_auto(r)
        else:
            raise ValueError(f"unknown method {method!r}")
        return res if return_witness else res.value

    def _gap_auto(self, r):
        if self.kind == "quadratic":
            return Infimum(r * r, 0.0)
        if self.kind == "power":
            if self.p >= 2:
                return Infimum(r**self.p, 0.0)
            return Infimum(0.0, np.inf)
        if self.kind == "power_plus_quadratic":
            return Infimum(r**self.p + r * r, 0.0)
        # piecewise linear in s with breakpoints at knots +- r
        hi = self._tx[-1]
        if r >= hi:
            return Infimum(np.inf, np.nan)
        smax = hi - r
        cand = np.concatenate([self._tx - r, self._tx + r, [0.0, smax]])
        cand = cand[(cand >= 0) & (cand <= smax)]
        vals = 0.5 * self.symmetric_difference(cand, r)
        k = int(np.argmin(vals))
        return Infimum(float(max(vals[k], 0.0)), float(cand[k]))

    def _gap_search(self, r):
        lo, hi = self.finite_domain
        if self.kind == "custom":
            if r >= hi:
                return Infimum(np.inf, np.nan)
            caps = [hi - r]
        else:
            caps = [10.0**k for k in range(0, 17)]
        best = Infimum(np.inf, np.nan)
        prev_tail_min = np.inf
        for smax in caps:
            grid = np.concatenate([[0.0], np.geomspace(1e-8, smax, 2001)])
            if self.kind == "custom":
                grid = grid[grid < smax] if smax > 0 else np.zeros(1)
            vals = 0.5 * self.symmetric_difference(grid, r)
            k = int(np.argmin(vals))
            # golden-section polish between grid neighbours
            a = grid[max(k - 1, 0)]
            b = grid[min(k + 1, grid.size - 1)]
            g = lambda x: 0.5 * float(self.symmetric_difference(np.array([x]), r)[0])
            xs, fs = _golden_scalar(g, a, b, 80)
            cand = Infimum(fs, xs) if fs < vals[k] else Infimum(float(vals[k]), float(grid[k]))
            if cand.value < best.value:
                best = cand
            last_decade = vals[grid >= smax / 10.0]
            tail_min = float(np.min(last_decade))
            # stop once the last decade is non-decreasing and no longer improves
            if np.all(np.diff(last_decade) >= -1e-15 * (1 + np.abs(last_decade[:-1]))):
                break
            if tail_min >= prev_tail_min:
                break
            prev_tail_min = tail_min
        return Infimum(max(best.value, 0.0), best.argmin)

    # ------------------------------------------------------------------
    def tail_mass_bound(self, s):
        """Upper bound on ``int_s^inf exp(-U)`` from convexity (``s >= 0``)."""
        lo, hi = self.finite_domain
        if s >= hi:
            return 0.0
        d = float(self.derivative(s))
        if d <= 0:
            return np.inf
        return float(np.exp(-self.eval(s)) / d)

    def partition_integral(self):
        """``int exp(-U)`` over the real line."""
        lo, hi = self.finite_domain
        f = lambda x: np.exp(-self.eval(x))
        if np.isfinite(hi):
            val, _ = integrate.quad(f, 0.0, hi, limit=200, points=[0.0])
        else:
            val, _ = integrate.quad(f, 0.0, np.inf, limit=200)
        return 2.0 * val

    def _auto_smax(self):
        lo, hi = self.finite_domain
        if np.isfinite(hi):
            return hi
        s = 1.0
        while self.tail_mass_bound(s) >= self.eval_tolerance:
            s *= 1.25
        return s

    def small_ratio_set(self, delta, s_grid=None):
        """``S_U(delta) = {s : U(s) < inf, delta_U(s) < delta}`` and its mass.

        Parameters
        ----------
        delta : float
            Threshold, must be positive.
        s_grid : None, (s_max, n) or array of nonnegative s
            Grid on ``[0, s_max]``; by evenness only ``s >= 0`` is scanned.

        Returns
        -------
        SmallRatioSet
        """
        if not delta > 0:
            raise ValueError("delta must be positive")
        lo, hi = self.finite_domain
        if s_grid is None:
            grid = np.linspace(0.0, self._auto_smax(), 2001)
        elif isinstance(s_grid, tuple):
            grid = np.linspace(0.0, float(s_grid[0]), int(s_grid[1]))
        else:
            grid = np.unique(np.abs(_asarray(s_grid)))
        top = grid[-1]
        if np.isfinite(hi) and top >= hi:
            grid = grid[grid < hi]
            top_covered = True
        else:
            top_covered = self.tail_mass_bound(top) < self.eval_tolerance
        if not top_covered:
            raise GridError(
                f"grid up to {top:g} leaves tail mass above {self.eval_tolerance:g}"
            )
        dvals = self.second_order_ratio(grid)
        inside = dvals < delta

        def crossing(a, b, a_inside):
            # bisection for the membership change between grid points a < b
            for _ in range(60):
                m = 0.5 * (a + b)
                if m == a or m == b:
                    break
                if (self.second_order_ratio(m) < delta) == a_inside:
                    a = m
                else:
                    b = m
            return b if a_inside else a

        pos = []
        k = 0
        n = grid.size
        while k < n:
            if not inside[k]:
                k += 1
                continue
            j = k
            while j + 1 < n and inside[j + 1]:
                j += 1
            a = grid[k] if k == 0 else crossing(grid[k - 1], grid[k], False)
            if j == n - 1:
                b = hi if np.isfinite(hi) else np.inf
            else:
                b = crossing(grid[j], grid[j + 1], True)
            pos.append((float(a), float(b)))
            k = j + 1
        mass = sum(self._gibbs_integral(a, b) for a, b in pos)
        intervals = []
        for a, b in reversed(pos):
            intervals.append((-b, -a))
        if pos and pos[0][0] == 0.0:
            # merge the two halves across the origin
            a0, b0 = intervals.pop()
            intervals.append((a0, pos[0][1]))
            rest = pos[1:]
        else:
            rest = pos
        intervals.extend(rest)
        return SmallRatioSet(float(delta), intervals, float(mass))

    def _gibbs_integral(self, a, b):
        lo, hi = self.finite_domain
        a = max(a, lo)
        b = min(b, hi)
        if not b > a:
            return 0.0
        f = lambda x: np.exp(-self.eval(x))
        val, _ = integrate.quad(f, a, b, limit=200)
        return float(val)

    def gibbs_tail_factor(self, S, d):
        """Integral of ``exp(-U)`` over ``S`` and the exponent ``1/(2 d 2^(d-1))``.

        Parameters
        ----------
        S : list of (float, float)
            Disjoint intervals (``inf`` endpoints allowed).
        d : int
            Lattice dimension.
        """
        n_classes = d * 2 ** (d - 1)
        total = sum(self._gibbs_integral(float(a), float(b)) for a, b in S)
        return TailFactor(float(total), 1.0 / (2.0 * n_classes), n_classes, None)

    def profile(self, s, r, delta=None):
        """Tabulate ``delta_U`` on ``s`` and ``W`` on ``r``."""
        s = _asarray(s)
        r = _asarray(r)
        dv = self.second_order_ratio(s)
        gv = np.array([self.convexity_gap(x) for x in r])
        small = None
        if delta is not None:
            small = self.small_ratio_set(delta)
        return ConvexityProfile(s, np.atleast_1d(dv), r, gv, small)


def _golden_scalar(f, a, b, iters):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _power_symdiff(s, t, p):
    a = np.abs(s)
    t = np.abs(t)
    out = np.empty(np.broadcast(a, t).shape)
    a, t = np.broadcast_arrays(a, t)
    zero = a == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = np.where(zero, np.inf, t / np.where(zero, 1.0, a))
    small = u < _SERIES_CUTOFF
    direct = ~small & ~zero
    out[zero] = 2.0 * t[zero] ** p
    if np.any(small):
        us = u[small]
        acc = np.zeros_like(us)
        u2 = us * us
        powk = u2.copy()
        for k in range(1, _SERIES_TERMS + 1):
            acc += special.binom(p, 2 * k) * powk
            powk = powk * u2
        out[small] = 2.0 * a[small] ** p * acc
    if np.any(direct):
        ad, td = a[direct], t[direct]
        out[direct] = (ad + td) ** p + np.abs(ad - td) ** p - 2.0 * ad**p
    return np.maximum(out, 0.0)


# ----------------------------------------------------------------------
# text format and spec strings

_HEADER = "# potential v1"


def load_potential(path, **kw):
    """Read a custom potential from a ``# potential v1`` two-column file."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != _HEADER:
            raise FormatError(f"{path}: expected header {_HEADER!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}: expected two columns, got {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
    arr = np.array(rows)
    return Potential.custom(arr[:, 0], arr[:, 1], **kw)


def save_potential(U, path):
    """Write a custom potential in the ``# potential v1`` format."""
    if U.kind != "custom":
        raise ValueError("only custom potentials are tabulated")
    x, u = U.table
    with open(path, "w") as fh:
        fh.write(_HEADER + "\n")
        for a, b in zip(x, u):
            fh.write(f"{float(a)!r} {float(b)!r}\n")


def parse_potential(text, p=None):
    """Build a potential from a short spec such as ``power:4`` or ``abs``.

    Accepted forms: ``quadratic``, ``power:P``, ``power_plus_quadratic:P``
    (alias ``ppq:P``), ``abs``, ``file:PATH``.  A bare family name takes its
    exponent from ``p``.
    """
    text = text.strip()
    name, _, arg = text.partition(":")
    name = name.lower()
    if name in ("quadratic", "x2", "gaussian"):
        return Potential.quadratic()
    if name in ("abs", "absolute"):
        return Potential.absolute()
    if name == "file":
        return load_potential(arg)
    if name in ("power", "power_plus_quadratic", "ppq"):
        exp = float(arg) if arg else p
        if exp is None:
            raise ValueError(f"potential {text!r} needs an exponent")
        if name == "power":
            return Potential.power(exp)
        return Potential.power_plus_quadratic(exp)
    raise ValueError(f"unrecognised potential spec {text!r}")
