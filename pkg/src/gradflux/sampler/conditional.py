"""Single-site conditional laws of the surface measure."""

import numpy as np
from scipy import integrate

from ..errors import EnvelopeError
from . import kernel

__all__ = ["ConditionalDensity", "conditional_density", "sample_conditional"]


class ConditionalDensity:
    """Unnormalized density ``s -> exp(-sum_i U(s - a_i))``.

    Parameters
    ----------
    U : Potential
    neighbors : array_like
        Neighbor values ``a_i`` (with multiplicity).
    """

    def __init__(self, U, neighbors):
        a = np.asarray(neighbors, dtype=float).ravel()
        if a.size == 0:
            raise ValueError("a free vertex needs at least one neighbor")
        self.U = U
        self.a = a
        self._args = U.kernel_args()

    def h(self, s):
        """Negative log density (unnormalized)."""
        s = np.asarray(s, dtype=float)
        return np.sum(np.asarray(self.U.eval(s[..., None] - self.a), dtype=float), axis=-1)

    def logpdf(self, s):
        return -self.h(s)

    @property
    def support(self):
        code, p, tx, tu = self._args
        return kernel.cond_support(self.a, code, tx)

    def mode(self):
        code, p, tx, tu = self._args
        return float(kernel.cond_mode(self.a, code, p, tx, tu))

    def envelope(self):
        """Envelope parameters and piece masses (see :func:`kernel.envelope`)."""
        code, p, tx, tu = self._args
        return kernel.envelope(self.a, code, p, tx, tu)

    def acceptance_rate(self):
        """Exact acceptance probability: density mass over envelope mass."""
        env, masses = self.envelope()
        lo, hi = max(env[2], -np.inf), min(env[3], np.inf)
        hm = env[1]
        z = self.normalizer(shift=hm)
        return z / float(np.sum(masses))

    def normalizer(self, shift=None):
        """``int exp(-(h - shift))`` by adaptive quadrature split at the neighbor values."""
        if shift is None:
            shift = float(self.h(self.mode()))
        lo, hi = self.support
        pts = np.unique(np.concatenate([self.a, [self.mode()]]))
        f = lambda s: np.exp(-(self.h(s) - shift))  # noqa: E731
        edges = np.concatenate([[lo], pts, [hi]])
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                total += integrate.quad(f, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        return total

    def cdf(self, x, n=20001):
        """Normalized distribution function (vectorized over ``x``).

        Cumulative quadrature between consecutive points of a fine grid that
        includes the neighbor values, then linear interpolation.
        """
        x = np.asarray(x, dtype=float)
        m = self.mode()
        shift = float(self.h(m))
        lo, hi = self.support
        # the density is below exp(-40) of its peak outside [a, b]
        step = 1.0
        a = m - step
        while a > lo and self.h(a) - shift < 40.0:
            step *= 2.0
            a = m - step
        step = 1.0
        b = m + step
        while b < hi and self.h(b) - shift < 40.0:
            step *= 2.0
            b = m + step
        a, b = max(a, lo), min(b, hi)
        grid = np.unique(np.concatenate([np.linspace(a, b, n), self.a[(self.a > a) & (self.a < b)]]))
        dens = np.exp(-(self.h(grid) - shift))
        cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
        cum = np.maximum.accumulate(cum)
        return np.interp(x, grid, cum / cum[-1], left=0.0, right=1.0)


def conditional_density(G, U, phi, v):
    """Conditional law of ``phi(v)`` given all other values."""
    if G.pinned[v]:
        raise ValueError("vertex is pinned")
    phi = np.asarray(phi, dtype=float)
    return ConditionalDensity(U, phi[G.neighbors(v)])


def sample_conditional(density, rng, size=None, return_proposals=False):
    """Exact draws by envelope rejection.

    Parameters
    ----------
    density : ConditionalDensity
    rng : numpy.random.Generator
    size : int or None

    Raises
    ------
    EnvelopeError
        If ``MAX_PROPOSALS`` consecutive proposals are rejected.
    """
    code, p, tx, tu = density._args
    n = 1 if size is None else int(size)
    out = np.empty(n)
    proposals = 0
    for i in range(n):
        s, k = kernel.sample_site(density.a, code, p, tx, tu, rng)
        if k < 0:
            raise EnvelopeError("envelope acceptance fell below 1e-3")
        out[i] = s
        proposals += k
    res = out[0] if size is None else out
    return (res, proposals) if return_proposals else res
