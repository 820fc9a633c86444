"""Compiled heat-bath kernel.

The conditional law of ``phi(v)`` given its neighbors ``a_1..a_k`` has
density proportional to ``exp(-h(s))`` with ``h(s) = sum_i U(s - a_i)``
convex. A draw is exact: rejection from the piecewise-exponential envelope
``exp(-max(l_L, l_0, l_R))`` built from tangent lines of ``h`` at an
approximate mode ``m`` and at points on either side where ``h`` has risen by
roughly one unit. Any subgradient gives a valid tangent, so the mode does
not need to be located exactly.
"""

import math

import numba
import numpy as np

from .._ufuncs import (
    CUSTOM,
    builtin_deriv,
    builtin_eval,
    builtin_second,
    u_deriv,
    u_eval,
)

OK = 0
ENVELOPE_FAILURE = 1
MAX_PROPOSALS = 1000


@numba.njit(cache=True, nogil=True)
def cond_h(s, a, code, p, tx, tu):
    tot = 0.0
    if code != CUSTOM:
        for i in range(a.size):
            tot += builtin_eval(code, p, s - a[i])
        return tot
    for i in range(a.size):
        tot += u_eval(code, p, s - a[i], tx, tu)
    return tot


@numba.njit(cache=True, nogil=True)
def cond_hd(s, a, code, p, tx, tu):
    tot = 0.0
    if code != CUSTOM:
        for i in range(a.size):
            tot += builtin_deriv(code, p, s - a[i])
        return tot
    for i in range(a.size):
        tot += u_deriv(code, p, s - a[i], tx, tu)
    return tot


@numba.njit(cache=True, nogil=True)
def cond_hdd(s, a, code, p, tx, tu):
    # tabulated potentials are piecewise linear: no curvature information
    if code == CUSTOM:
        return 0.0
    tot = 0.0
    for i in range(a.size):
        tot += builtin_second(code, p, s - a[i])
    return tot


@numba.njit(cache=True, nogil=True)
def cond_support(a, code, tx):
    """Open interval where ``h`` is finite."""
    if code != CUSTOM:
        return -np.inf, np.inf
    r = tx[-1]
    return np.max(a) - r, np.min(a) + r


@numba.njit(cache=True, nogil=True)
def cond_mode(a, code, p, tx, tu):
    """Approximate minimizer of ``h``: safeguarded Newton inside ``[min a, max a]``."""
    lo = np.min(a)
    hi = np.max(a)
    if hi - lo <= 0.0:
        return lo
    s = 0.0
    for i in range(a.size):
        s += a[i]
    s /= a.size
    tol = 1e-13 * (1.0 + abs(lo) + abs(hi))
    for _ in range(200):
        g = cond_hd(s, a, code, p, tx, tu)
        if g == 0.0:
            return s
        if g < 0.0:
            lo = s
        else:
            hi = s
        if hi - lo <= tol:
            break
        H = cond_hdd(s, a, code, p, tx, tu)
        sn = s - g / H if (H > 0.0 and H < np.inf) else 0.5 * (lo + hi)
        if not (lo < sn < hi):
            sn = 0.5 * (lo + hi)
        if abs(sn - s) <= tol:
            s = sn
            break
        s = sn
    return s


@numba.njit(cache=True, nogil=True)
def _outer_point(m, hm, direction, d0, a, code, p, tx, tu, lo, hi):
    # a point on one side of m where h - hm lies in [0.5, 4]; the best
    # finite point found otherwise
    d = d0
    dlo = 0.0
    dhi = np.inf
    best = 0.0
    for _ in range(200):
        x = m + direction * d
        if x <= lo or x >= hi:
            dhi = d
            d = 0.5 * (dlo + dhi)
            if dhi - dlo <= 1e-12 * (1.0 + abs(m)):
                break
            continue
        e = cond_h(x, a, code, p, tx, tu) - hm
        if e < 0.5:
            dlo = d
            best = d
            d = 2.0 * d if dhi == np.inf else 0.5 * (dlo + dhi)
        elif e > 4.0:
            dhi = d
            d = 0.5 * (dlo + dhi)
        else:
            return d, True
        if dhi - dlo <= 1e-12 * (1.0 + abs(m)):
            break
    return best, False


@numba.njit(cache=True, nogil=True)
def _piece_mass(e0, kappa, w):
    # int_0^w exp(-(e0 + kappa u)) du, w possibly infinite (then kappa > 0)
    if w <= 0.0:
        return 0.0
    if w == np.inf:
        return math.exp(-e0) / kappa
    x = kappa * w
    if abs(x) < 1e-12:
        return math.exp(-e0) * w
    return math.exp(-e0) * (-math.expm1(-x)) / kappa


@numba.njit(cache=True, nogil=True)
def _piece_draw(kappa, w, u):
    # inverse CDF of the truncated exponential on [0, w]
    if w == np.inf:
        return -math.log1p(-u) / kappa
    x = kappa * w
    if abs(x) < 1e-12:
        return u * w
    return -math.log1p(u * math.expm1(-x)) / kappa


@numba.njit(cache=True, nogil=True)
def _envelope(a, code, p, tx, tu):
    # scalar form of :func:`envelope`, free of allocations
    lo, hi = cond_support(a, code, tx)
    m = cond_mode(a, code, p, tx, tu)
    hm = cond_h(m, a, code, p, tx, tu)
    k0 = cond_hd(m, a, code, p, tx, tu)
    H = cond_hdd(m, a, code, p, tx, tu)
    spread = np.max(a) - np.min(a)
    if H > 0.0 and H < np.inf:
        d0 = math.sqrt(2.0 / H)
    else:
        d0 = max(1e-3, 0.25 * spread)
    dR, okR = _outer_point(m, hm, 1.0, d0, a, code, p, tx, tu, lo, hi)
    dL, okL = _outer_point(m, hm, -1.0, d0, a, code, p, tx, tu, lo, hi)
    # right tangent
    if okR or (dR > 0.0 and hi < np.inf):
        xR = m + dR
        eR = cond_h(xR, a, code, p, tx, tu) - hm
        kR = cond_hd(xR, a, code, p, tx, tu)
    else:
        xR = hi
        eR = 0.0
        kR = np.inf
    if okL or (dL > 0.0 and lo > -np.inf):
        xL = m - dL
        eL = cond_h(xL, a, code, p, tx, tu) - hm
        kL = cond_hd(xL, a, code, p, tx, tu)
    else:
        xL = lo
        eL = 0.0
        kL = -np.inf
    # breakpoints: where the outer tangents meet the middle one
    if kL == -np.inf:
        z1 = lo
    elif k0 - kL > 1e-300:
        z1 = (eL - kL * xL + k0 * m) / (k0 - kL)
        z1 = min(max(z1, xL), m)
    else:
        z1 = m
    if kR == np.inf:
        z2 = hi
    elif kR - k0 > 1e-300:
        z2 = (kR * xR - eR - k0 * m) / (kR - k0)
        z2 = min(max(z2, m), xR)
    else:
        z2 = m
    z1 = max(z1, lo)
    z2 = min(z2, hi)
    e1 = k0 * (z1 - m)
    e2 = k0 * (z2 - m)
    m0 = _piece_mass(e1, -kL, z1 - lo) if z1 > lo else 0.0
    m1 = _piece_mass(e1, k0, z2 - z1)
    m2 = _piece_mass(e2, kR, hi - z2) if z2 < hi else 0.0
    return m, hm, lo, hi, z1, z2, kL, k0, kR, xL, xR, m0, m1, m2


@numba.njit(cache=True, nogil=True)
def envelope(a, code, p, tx, tu):
    """Tangent envelope of ``h``.

    Returns
    -------
    params : ndarray, shape (12,)
        ``m, hm, lo, hi, z1, z2, kL, k0, kR, xL, xR, 0`` where the tangent
        lines are ``l_j(s) = hm + e_j + k_j (s - x_j)`` in relative form.
    masses : ndarray, shape (3,)
        Envelope mass of the left, middle and right piece, relative to
        ``exp(-hm)``.
    """
    r = _envelope(a, code, p, tx, tu)
    out = np.zeros(12)
    for i in range(11):
        out[i] = r[i]
    masses = np.empty(3)
    masses[0] = r[11]
    masses[1] = r[12]
    masses[2] = r[13]
    return out, masses


@numba.njit(cache=True, nogil=True)
def _envelope_log(s, m, z1, z2, kL, k0, kR):
    if s < z1:
        return k0 * (z1 - m) - kL * (z1 - s)
    if s > z2:
        return k0 * (z2 - m) + kR * (s - z2)
    return k0 * (s - m)


@numba.njit(cache=True, nogil=True)
def envelope_log(s, env):
    """``max`` of the tangent lines minus ``hm`` at ``s``."""
    return _envelope_log(s, env[0], env[4], env[5], env[6], env[7], env[8])


@numba.njit(cache=True, nogil=True)
def sample_site(a, code, p, tx, tu, gen):
    """One exact draw from the conditional law; returns ``(value, proposals)``.

    ``proposals`` is negative when ``MAX_PROPOSALS`` draws were all rejected.
    """
    m, hm, lo, hi, z1, z2, kL, k0, kR, xL, xR, m0, m1, m2 = _envelope(a, code, p, tx, tu)
    total = m0 + m1 + m2
    for n in range(1, MAX_PROPOSALS + 1):
        u = gen.random() * total
        v = gen.random()
        if u < m0:
            s = z1 - _piece_draw(-kL, z1 - lo, v)
        elif u < m0 + m1:
            s = z1 + _piece_draw(k0, z2 - z1, v)
        else:
            s = z2 + _piece_draw(kR, hi - z2, v)
        if not (lo < s < hi):
            continue
        gap = cond_h(s, a, code, p, tx, tu) - hm - _envelope_log(s, m, z1, z2, kL, k0, kR)
        if gap <= 0.0 or gen.random() < math.exp(-gap):
            return s, n
    return m, -MAX_PROPOSALS


@numba.njit(cache=True, nogil=True)
def gather(phi, v, indptr, indices, buf):
    k = indptr[v + 1] - indptr[v]
    for j in range(k):
        buf[j] = phi[indices[indptr[v] + j]]
    return buf[:k]


@numba.njit(cache=True, nogil=True)
def sweep(phi, free, indptr, indices, code, p, tx, tu, gen, random_scan, buf):
    """One sweep of ``free.size`` site updates.

    Returns
    -------
    proposals : int
        Total proposals, or ``-1`` after an envelope failure.
    """
    nf = free.size
    total = 0
    for i in range(nf):
        if random_scan:
            j = int(gen.random() * nf)
            if j == nf:
                j = nf - 1
            v = free[j]
        else:
            v = free[i]
        a = gather(phi, v, indptr, indices, buf)
        s, n = sample_site(a, code, p, tx, tu, gen)
        if n < 0:
            return -1
        phi[v] = s
        total += n
    return total


@numba.njit(cache=True, nogil=True)
def run_chain(phi, free, indptr, indices, code, p, tx, tu, gen, random_scan,
              n_sweeps, burn_in, thin, track, out):
    """Run ``burn_in + n_sweeps`` sweeps recording ``phi[track]`` every ``thin`` sweeps.

    Returns
    -------
    status : int
    proposals : int
    sweeps_done : int
    """
    maxdeg = 0
    for v in range(indptr.size - 1):
        maxdeg = max(maxdeg, indptr[v + 1] - indptr[v])
    buf = np.empty(max(maxdeg, 1))
    proposals = 0
    row = 0
    for t in range(burn_in + n_sweeps):
        n = sweep(phi, free, indptr, indices, code, p, tx, tu, gen, random_scan, buf)
        if n < 0:
            return ENVELOPE_FAILURE, proposals, t
        proposals += n
        if t >= burn_in and (t - burn_in + 1) % thin == 0:
            for j in range(track.size):
                out[row, j] = phi[track[j]]
            row += 1
    return OK, proposals, burn_in + n_sweeps
