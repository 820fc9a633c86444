"""Energy programs and the lower bounds built from isoperimetry profiles.

* :func:`direct_energy_infimum` minimizes ``sum_e U(grad_e phi)`` with
  ``phi(a) = 1``, ``phi(b) = 0``;
* :func:`simplex_energy_bound` evaluates the level-wise lower bound for the
  same quantity from the profiles ``M_i``, ``m_i`` of ``a`` and ``b``;
* :func:`d_eta_t` minimizes ``sum_e W(grad_e psi)`` under ``<eta, psi> = t``;
* :func:`dstar_exponent` evaluates the simplex program that controls the
  tail exponent of the ``|x|^p + x^2`` surface.
"""

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import optimize

from .._ufuncs import u_deriv, u_eval
from ..errors import ConvergenceError, ProfileError
from ..potentials import Potential
from .conductance import dirichlet_energy
from .simplex import (
    PolynomialObjective,
    ScaledPotentialObjective,
    solve_multiplier,
    solve_pgd,
)

__all__ = [
    "direct_energy_infimum",
    "SimplexBoundProblem",
    "simplex_energy_bound",
    "corollary_quadratic_bound",
    "gap_potential",
    "d_eta_t",
    "dstar_value",
    "dstar_exponent",
    "tail_bound",
    "tau",
    "TailCurve",
]


# ----------------------------------------------------------------------
# coordinate descent

@numba.njit(cache=True, nogil=True)
def _site_argmin(v, phi, indptr, indices, code, p, tx, tu):
    lo = np.inf
    hi = -np.inf
    for k in range(indptr[v], indptr[v + 1]):
        a = phi[indices[k]]
        if a < lo:
            lo = a
        if a > hi:
            hi = a
    if lo == hi:
        return lo
    # the minimizer of a sum of even convex terms lies in the neighbour hull
    a_ = lo
    b_ = hi
    for _ in range(200):
        m = 0.5 * (a_ + b_)
        if m <= a_ or m >= b_:
            break
        g = 0.0
        for k in range(indptr[v], indptr[v + 1]):
            g += u_deriv(code, p, m - phi[indices[k]], tx, tu)
        if g > 0:
            b_ = m
        elif g < 0:
            a_ = m
        else:
            return m
    return 0.5 * (a_ + b_)


@numba.njit(cache=True, nogil=True)
def _energy(phi, tails, heads, code, p, tx, tu):
    e = 0.0
    for j in range(tails.size):
        e += u_eval(code, p, phi[heads[j]] - phi[tails[j]], tx, tu)
    return e


@numba.njit(cache=True, nogil=True)
def _coordinate_descent(phi, order, indptr, indices, tails, heads, code, p, tx, tu,
                        max_sweeps, xtol, etol):
    e_old = _energy(phi, tails, heads, code, p, tx, tu)
    for sweep in range(max_sweeps):
        change = 0.0
        for v in order:
            s = _site_argmin(v, phi, indptr, indices, code, p, tx, tu)
            d = abs(s - phi[v])
            if d > change:
                change = d
            phi[v] = s
        e_new = _energy(phi, tails, heads, code, p, tx, tu)
        if change <= xtol or abs(e_old - e_new) <= etol * max(e_new, 1e-300):
            return sweep + 1, e_new, True
        e_old = e_new
    return max_sweeps, e_old, False


def _run_cd(G, pot, phi, free, max_sweeps=1_000_000, xtol=1e-15, etol=1e-15):
    code, p, tx, tu = pot.kernel_args()
    tails = np.ascontiguousarray(G.edges[:, 0])
    heads = np.ascontiguousarray(G.edges[:, 1])
    sweeps, energy, ok = _coordinate_descent(
        phi, np.asarray(free, dtype=np.int64), G.indptr, G.indices, tails, heads,
        code, p, tx, tu, max_sweeps, xtol, etol,
    )
    if not ok:
        raise ConvergenceError(f"coordinate descent did not settle in {sweeps} sweeps")
    return energy, phi


def _affine_pieces(U):
    # maximal affine pieces of a convex piecewise-linear table
    x, u = U.table
    slopes = np.diff(u) / np.diff(x)
    keep = np.concatenate([[True], np.abs(np.diff(slopes)) > 1e-12 * max(1.0, np.max(np.abs(slopes)))])
    idx = np.flatnonzero(keep)
    return slopes[idx], u[idx] - slopes[idx] * x[idx]


def _direct_lp(G, U, a, b):
    n, E = G.n_vertices, G.n_edges
    slopes, icpt = _affine_pieces(U)
    lo, hi = U.finite_domain
    # variables: phi (n), y (E); minimize sum y with y_e >= s_k grad_e + c_k
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for e, (t, h) in enumerate(G.edges):
        for s, c in zip(slopes, icpt):
            rows += [r, r, r]
            cols += [h, t, n + e]
            vals += [s, -s, -1.0]
            rhs.append(-c)
            r += 1
    from scipy.sparse import coo_matrix

    A = coo_matrix((vals, (rows, cols)), shape=(r, n + E))
    cost = np.concatenate([np.zeros(n), np.ones(E)])
    bounds = [(0.0, 1.0)] * n + [(None, None)] * E
    bounds[a] = (1.0, 1.0)
    bounds[b] = (0.0, 0.0)
    if np.isfinite(hi) and hi <= 1.0:
        raise ValueError("tabulated domain too narrow for a unit potential drop")
    res = optimize.linprog(cost, A_ub=A, b_ub=rhs, bounds=bounds, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"linear program failed: {res.message}")
    return float(res.fun), res.x[:n]


def direct_energy_infimum(G, U, a, b, method="auto", return_minimizer=False):
    """``min sum_e U(grad_e phi)`` over ``phi`` in ``[0,1]^V`` with ``phi(a)=1``, ``phi(b)=0``.

    Parameters
    ----------
    method : {"auto", "cd", "lp"}
        ``cd`` is coordinate descent with exact one-dimensional minimization
        in the neighbour hull (which stays inside ``[0, 1]``); ``lp`` solves
        the exact linear program for piecewise-linear tabulated potentials.
        ``auto`` picks ``lp`` for tabulated potentials and ``cd`` otherwise.
    """
    if a == b:
        raise ValueError("a and b must differ")
    if method == "auto":
        method = "lp" if U.kind == "custom" else "cd"
    if method == "lp":
        val, phi = _direct_lp(G, U, int(a), int(b))
    elif method == "cd":
        phi = np.zeros(G.n_vertices)
        phi[a] = 1.0
        free = np.array([v for v in range(G.n_vertices) if v not in (a, b)], dtype=np.int64)
        phi[free] = 0.5
        val, phi = _run_cd(G, U, phi, free)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (val, phi) if return_minimizer else val


# ----------------------------------------------------------------------
# simplex bound

@dataclass
class SimplexBoundProblem:
    """Data of the level-wise simplex bound for a pair ``(a, b)``.

    Arrays are indexed by level ``i = 1..l`` (position ``i - 1``); undefined
    levels are masked out and their variables are fixed to 0.
    """

    l: int
    Ma: np.ndarray
    ma: np.ndarray
    Mb: np.ndarray
    mb: np.ndarray
    U: Potential
    t: float = 1.0
    defined_a: np.ndarray = None
    defined_b: np.ndarray = None

    def __post_init__(self):
        for name in ("Ma", "ma", "Mb", "mb"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.defined_a is None:
            self.defined_a = ~np.isnan(self.Ma) & ~np.isnan(self.ma)
        if self.defined_b is None:
            self.defined_b = ~np.isnan(self.Mb) & ~np.isnan(self.mb)

    @classmethod
    def from_profiles(cls, prof_a, prof_b, U, t=1.0):
        return cls(prof_a.level_count, prof_a.M, prof_a.m, prof_b.M, prof_b.m, U, t,
                   prof_a.defined.copy(), prof_b.defined.copy())

    def objective(self):
        M = np.concatenate([self.Ma[self.defined_a], self.Mb[self.defined_b]])
        m = np.concatenate([self.ma[self.defined_a], self.mb[self.defined_b]])
        return ScaledPotentialObjective(self.U, M, m * self.t / M)


@dataclass
class SimplexBound:
    value: float
    p: np.ndarray
    q: np.ndarray
    multiplier: float
    spread: float
    method: str


def simplex_energy_bound(P, method="auto", return_solution=False):
    """Minimize ``sum_i M_i(a) U(p_i m_i(a) t / M_i(a)) + (same for b, q)``.

    The minimum runs over ``p, q >= 0`` with ``sum p + sum q = 1``.
    ``auto`` runs projected gradient and, for strictly convex potentials,
    also the multiplier solver, keeping the smaller value.
    """
    obj = P.objective()
    if obj.size == 0:
        raise ValueError("no defined level")
    if method in ("auto", "pgd"):
        sol = solve_pgd(obj, warn=(method == "pgd" or not obj.strictly_convex))
        if method == "auto" and obj.strictly_convex:
            alt = solve_multiplier(obj)
            if alt.value < sol.value:
                sol = alt
    elif method == "multiplier":
        sol = solve_multiplier(obj)
    else:
        raise ValueError(f"unknown method {method!r}")
    na = int(np.count_nonzero(P.defined_a))
    p = np.zeros(P.l)
    q = np.zeros(P.l)
    p[P.defined_a] = sol.x[:na]
    q[P.defined_b] = sol.x[na:]
    if not return_solution:
        return sol.value
    return SimplexBound(sol.value, p, q, sol.multiplier, sol.spread, sol.method)


@dataclass
class CorollaryBound:
    value: float
    c0: float
    C: float
    c: float


def corollary_quadratic_bound(profile_a, d, profile_b=None, t=1.0):
    """Cauchy-Schwarz lower bound for the quadratic simplex program.

    With ``j = l - i`` the fitted constants are ``C = max M_i / 2^j`` and
    ``c = min m_i / 2^(j (d-1)/d)`` over the defined levels, ``c0 = c^2 / C``,
    and the bound is ``t^2 c0 / sum_j 2 / a_j`` with ``a_j = 2^(j (1 - 2/d))``
    for ``j = 0..l-1``.
    """
    profs = [profile_a] if profile_b is None else [profile_a, profile_b]
    l = profile_a.level_count
    Cs, cs = [], []
    for prof in profs:
        if prof.level_count != l:
            raise ProfileError("profiles disagree on the level count")
        j = l - prof.levels
        ok = prof.defined
        if not np.any(ok):
            raise ProfileError("profile has no defined level")
        Cs.append(np.max(prof.M[ok] / 2.0 ** j[ok]))
        cs.append(np.min(prof.m[ok] / 2.0 ** (j[ok] * (d - 1) / d)))
    C, c = float(max(Cs)), float(min(cs))
    if not (C > 0 and c > 0):
        raise ProfileError("growth constants must be positive")
    jj = np.arange(l)
    inv = np.sum(2.0 * 2.0 ** (-jj * (1.0 - 2.0 / d)))
    c0 = c * c / C
    return CorollaryBound(t * t * c0 / inv, c0, C, c)


# ----------------------------------------------------------------------
# convexity-gap program

def gap_potential(U, n=401):
    """The convexity gap ``W`` of ``U`` as a potential, or None when ``W`` vanishes."""
    if U.kind == "quadratic":
        return Potential.quadratic()
    if U.kind == "power":
        return Potential.power(U.p) if U.p >= 2 else None
    if U.kind == "power_plus_quadratic":
        return Potential.power_plus_quadratic(U.p)
    lo, hi = U.finite_domain
    r = np.linspace(0.0, hi, n)[:-1]
    w = np.array([U.convexity_gap(x) for x in r])
    if np.all(w <= 1e-12 * max(1.0, np.max(np.abs(U.table[1])))):
        return None
    x = np.concatenate([-r[::-1], r[1:]])
    y = np.concatenate([w[::-1], w[1:]])
    return Potential.custom(x, y)


def _null_space_program(G, Wpot, eta, t):
    free = G.free
    ef = eta[free]
    nrm2 = float(ef @ ef)
    x0 = t * ef / nrm2
    # orthonormal basis of the hyperplane <ef, x> = 0
    q, _ = np.linalg.qr(np.column_stack([ef / np.sqrt(nrm2), np.eye(free.size)]))
    Z = q[:, 1:free.size]
    tails, heads = G.edges[:, 0], G.edges[:, 1]

    def energy_and_grad(z):
        psi = np.zeros(G.n_vertices)
        psi[free] = x0 + Z @ z
        g = psi[heads] - psi[tails]
        val = float(np.sum(Wpot.eval(g)))
        dg = np.asarray(Wpot.derivative(g), dtype=float)
        full = np.zeros(G.n_vertices)
        np.add.at(full, heads, dg)
        np.subtract.at(full, tails, dg)
        return val, Z.T @ full[free]

    z0 = np.zeros(Z.shape[1])
    res = optimize.minimize(energy_and_grad, z0, jac=True, method="L-BFGS-B",
                            options={"maxiter": 100000, "gtol": 1e-12, "ftol": 1e-16})
    val, grad = energy_and_grad(res.x)
    if not np.isfinite(val) or np.linalg.norm(grad) > 1e-6 * max(1.0, val):
        raise ConvergenceError(f"affine-constrained minimization failed: {res.message}")
    psi = np.zeros(G.n_vertices)
    psi[free] = x0 + Z @ res.x
    return val, psi


def d_eta_t(G, U, eta, t, return_minimizer=False):
    """``D_eta(t) = min sum_e W(grad_e psi)`` over ``psi = 0`` on ``V0``, ``<eta, psi> = t``.

    Parameters
    ----------
    G : LatticeGraph
    U : Potential
    eta : int or ndarray
        A free vertex (point mass) or a weight vector on the vertices.
    t : float
    """
    if isinstance(eta, (int, np.integer)):
        v = int(eta)
        vec = np.zeros(G.n_vertices)
        vec[v] = 1.0
    else:
        vec = np.asarray(eta, dtype=float)
    if not np.any(vec[G.free] != 0):
        raise ValueError("eta must not vanish off the boundary set")
    Wpot = gap_potential(U)
    if Wpot is None:
        psi = np.zeros(G.n_vertices)
        return (0.0, psi) if return_minimizer else 0.0
    support = np.flatnonzero(vec[G.free] != 0)
    if support.size == 1:
        v = int(G.free[support[0]])
        psi = np.zeros(G.n_vertices)
        psi[v] = t / vec[v]
        others = np.array([u for u in G.free if u != v], dtype=np.int64)
        if others.size:
            val, psi = _run_cd(G, Wpot, psi, others)
        else:
            val = float(np.sum(Wpot.eval(G.gradient(psi))))
    else:
        val, psi = _null_space_program(G, Wpot, vec, float(t))
    return (val, psi) if return_minimizer else val


# ----------------------------------------------------------------------
# tail exponents

@dataclass
class TailCurve:
    """A function of ``t`` with a power-law fit of ``log value`` against ``log t``.

    ``exponent`` is the fitted slope and ``residuals`` the per-point
    deviations of the log-values from the fit.
    """

    t: np.ndarray
    values: np.ndarray
    exponent: float
    residuals: np.ndarray
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def rms_residual(self):
        return float(np.sqrt(np.mean(self.residuals**2)))

    def rows(self):
        for t, v, r in zip(self.t, self.values, self.residuals):
            yield (float(t), float(v), float(self.exponent), float(r))

    def write_csv(self, fh, header_lines=()):
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value", "exponent_fit", "residual"])
        for row in self.rows():
            w.writerow([repr(x) for x in row])


def _fit(t, y):
    lt = np.log(np.asarray(t, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lt.size < 2 or not np.all(np.isfinite(ly)):
        return float("nan"), np.full(lt.size, np.nan)
    slope, icpt = np.polyfit(lt, ly, 1)
    return float(slope), ly - (slope * lt + icpt)


def dstar_value(d, p, t, l=40, method="multiplier"):
    """``D*(t) = min sum_{i<l} 2^(i(1-2/d)) t^2 x_i^2 + 2^(i(1-p/d)) t^p x_i^p`` on the simplex."""
    i = np.arange(l)
    A = 2.0 ** (i * (1.0 - 2.0 / d)) * t * t
    B = 2.0 ** (i * (1.0 - p / d)) * t**p
    obj = PolynomialObjective(A, B, p)
    if method == "multiplier":
        sol = solve_multiplier(obj)
    elif method == "pgd":
        sol = solve_pgd(obj)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sol.value, sol


def dstar_exponent(d, p, t_grid, l=40, method="multiplier"):
    """Evaluate ``D*`` on ``t_grid`` and fit its log-log slope.

    For ``d == p`` the curve also carries ``ratio = D* (ln t)^(d-1) / t^d``
    and its max/min spread in ``extra``.
    """
    if d < 3 or not p > 2:
        raise ValueError("needs d >= 3 and p > 2")
    t = np.asarray(t_grid, dtype=float)
    vals = np.array([dstar_value(d, p, x, l, method)[0] for x in t])
    slope, res = _fit(t, vals)
    extra = {"d": d, "p": p, "l": l, "expected": min(p, d)}
    if p == d:
        ratio = vals * np.log(t) ** (d - 1) / t**d
        extra["ratio"] = ratio
        extra["ratio_spread"] = float(np.max(ratio) / np.min(ratio))
    return TailCurve(t, vals, slope, res, label=f"dstar d={d} p={p:g}", extra=extra)


def tail_bound(G, U, v, t_grid, mode="boundary-pinned"):
    """Deterministic bound on ``Pr(|phi(v)| > t)`` from the convexity-gap program.

    ``boundary-pinned`` returns ``exp(-D(t))``; ``mode-centered`` returns
    ``exp(-2 D(t))``, valid at the radius ``2 (t + C)`` about the mode with
    an unspecified constant ``C``.
    """
    t = np.asarray(t_grid, dtype=float)
    D = np.array([d_eta_t(G, U, int(v), float(x)) for x in t])
    if mode == "boundary-pinned":
        vals = np.exp(-D)
        note = "Pr(|phi(v)| > t) <= exp(-D(t))"
    elif mode == "mode-centered":
        vals = np.exp(-2.0 * D)
        note = "bound applies at radius 2(t + C) about the mode; C unknown"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    pos = D > 0
    slope, res = _fit(t[pos], D[pos]) if np.count_nonzero(pos) >= 2 else (float("nan"), None)
    resid = np.full(t.size, np.nan)
    if res is not None:
        resid[pos] = res
    return TailCurve(t, vals, slope, resid, label=mode,
                     extra={"D": D, "note": note, "C": None if mode == "mode-centered" else 0.0})


def tau(d, R):
    """Fluctuation scale: ``sqrt(ln(R + 1))`` in dimension 2 and 1 above."""
    if R <= 0 or d < 2:
        raise ValueError("needs R > 0 and d >= 2")
    return math.sqrt(math.log(R + 1.0)) if d == 2 else 1.0
