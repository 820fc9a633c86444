"""Batch-means estimators on sample streams."""

import math
from dataclasses import dataclass

import numpy as np

from ..energy.bounds import tau
from ..energy.conductance import dirichlet_energy
from ..errors import InsufficientSamples
from ..lattice import axis_parity_classes, percolation_component

__all__ = [
    "EstimateWithCI",
    "ChessboardReport",
    "RatioTable",
    "integrated_autocorr_time",
    "batch_means",
    "mean_estimate",
    "variance_estimate",
    "tail_estimate",
    "in_union",
    "gradient_event_probability",
    "chessboard_check",
    "good_edges",
    "good_edge_component",
    "good_edge_conductance",
    "key_lemma_frequency",
]

MIN_BATCHES = 16
MIN_BATCH_LENGTH = 1000


@dataclass
class EstimateWithCI:
    """Point estimate with batch-means standard error.

    Attributes
    ----------
    value : float
    se : float
    n_batches : int
    batch_length : int
    tau_int : float
        Integrated autocorrelation time used to size the batches.
    """

    value: float
    se: float
    n_batches: int
    batch_length: int = 0
    tau_int: float = float("nan")

    def interval(self, k=3.0):
        return self.value - k * self.se, self.value + k * self.se

    def contains(self, x, k=3.0):
        lo, hi = self.interval(k)
        return lo <= x <= hi


def integrated_autocorr_time(x, c=5.0):
    """Integrated autocorrelation time with Sokal's adaptive window.

    ``tau = 1 + 2 sum_{k=1}^{M} rho(k)`` with the smallest ``M >= c tau``;
    autocorrelations come from a zero-padded FFT.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    y = x - x.mean()
    var = float(np.dot(y, y))
    if var == 0.0:
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n] / var
    taus = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n) >= c * taus
    m = int(np.argmax(window)) if np.any(window) else n - 1
    return float(max(taus[m], 1.0))


def batch_means(series, min_batch=MIN_BATCH_LENGTH, min_batches=MIN_BATCHES):
    """Batch-means estimate of the stationary mean of ``series``.

    Parameters
    ----------
    series : array_like, shape (n_chains, n_samples)
    min_batch : int
        Lower bound on the batch length; the length used is
        ``max(min_batch, ceil(10 tau_int))`` with the largest per-chain
        autocorrelation time.

    Raises
    ------
    InsufficientSamples
        If fewer than ``min_batches`` complete batches fit in the chains.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    nc, n = x.shape
    t = max(integrated_autocorr_time(row) for row in x)
    b = max(int(min_batch), int(math.ceil(10.0 * t)), 1)
    per_chain = n // b
    total = nc * per_chain
    if total < min_batches:
        raise InsufficientSamples(
            f"{total} batches of length {b}; need {min_batches} "
            f"(chains of {n} samples, tau_int {t:.1f})"
        )
    means = x[:, : per_chain * b].reshape(nc, per_chain, b).mean(axis=2).ravel()
    value = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(total))
    return EstimateWithCI(value, se, total, b, t)


def _free_or_none(stream, v):
    return None if stream.graph.pinned[int(v)] else stream.values(v)


def mean_estimate(stream, v, **kw):
    """Batch-means estimate of ``E phi(v)``."""
    x = _free_or_none(stream, v)
    if x is None:
        return EstimateWithCI(float(stream.values(v)[0, 0]), 0.0, 0)
    return batch_means(x, **kw)


def variance_estimate(stream, v, **kw):
    """Batch-means estimate of ``Var phi(v)``; exactly 0 on ``V0``."""
    x = _free_or_none(stream, v)
    if x is None:
        return EstimateWithCI(0.0, 0.0, 0)
    return batch_means((x - x.mean()) ** 2, **kw)


def tail_estimate(stream, v, t_list, **kw):
    """Estimates of ``Pr(|phi(v)| > t)`` for each ``t``."""
    x = np.abs(stream.values(v))
    return [batch_means((x > float(t)).astype(float), **kw) for t in t_list]


def in_union(x, S):
    """Membership of ``x`` in the union of closed intervals ``S = [(lo, hi), ...]``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for lo, hi in S:
        out |= (x >= lo) & (x <= hi)
    return out


def _event_series(stream, E0, S):
    E0 = np.asarray(list(E0), dtype=np.int64)
    if E0.size == 0:
        return np.ones((stream.n_chains, stream.n_samples))
    g = np.abs(stream.gradients(E0))
    return np.all(in_union(g, S), axis=-1).astype(float)


def gradient_event_probability(stream, E0, S, **kw):
    """Frequency of ``{|grad_e phi| in S for all e in E0}``."""
    return batch_means(_event_series(stream, E0, S), **kw)


@dataclass
class ChessboardReport:
    """Both sides of the homogenized-class comparison.

    ``lhs`` estimates ``Pr(E0 in E_S)`` and ``rhs`` the class probability
    raised to ``|E0| / |class|``.
    """

    lhs: EstimateWithCI
    rhs: float
    rhs_se: float
    class_probability: EstimateWithCI
    exponent: float
    axis: int
    sigma: tuple
    k: float = 3.0

    @property
    def combined_se(self):
        return math.hypot(self.lhs.se, self.rhs_se)

    @property
    def passed(self):
        return self.lhs.value <= self.rhs + self.k * self.combined_se


def chessboard_check(stream, T, S, E0, k=3.0, **kw):
    """Compare ``Pr(E0 in E_S)`` with the homogenized class probability.

    Parameters
    ----------
    stream : SampleStream
    T : LatticeGraph
        Torus the stream was sampled on.
    S : list of (lo, hi)
    E0 : array_like of int
        Nonempty edge ids inside a single axis-parity class.
    """
    E0 = np.unique(np.asarray(list(E0), dtype=np.int64))
    if E0.size == 0:
        raise ValueError("E0 must be nonempty")
    cls = None
    for c in axis_parity_classes(T):
        if np.all(np.isin(E0, c.edges)):
            cls = c
            break
    if cls is None:
        raise ValueError("E0 is not contained in one axis-parity class")
    lhs = batch_means(_event_series(stream, E0, S), **kw)
    pc = batch_means(_event_series(stream, cls.edges, S), **kw)
    a = E0.size / cls.edges.size
    rhs = pc.value**a
    if a == 1.0:
        rhs_se = pc.se
    elif pc.value > 0:
        rhs_se = a * pc.value ** (a - 1.0) * pc.se
    else:
        # no hits: a zero-count proportion still carries an error of order
        # one count in the effective sample size, and the delta method
        # degenerates at zero, so bound the spread of the power directly
        n_eff = stream.n_chains * stream.n_samples / max(pc.tau_int, 1.0)
        rhs_se = max(pc.se, 1.0 / n_eff) ** a
    return ChessboardReport(lhs, float(rhs), float(rhs_se), pc, a, cls.axis, cls.sigma, k)


class RatioTable:
    """``delta_U`` tabulated on ``[0, s_max]`` and linearly interpolated.

    Values beyond ``s_max`` are evaluated directly. The quadratic case is
    the constant 2.
    """

    def __init__(self, U, s_max=8.0, n=801):
        self.U = U
        self.s_max = float(s_max)
        if U.kind == "quadratic":
            self.s = None
            self.values = None
        else:
            self.s = np.linspace(0.0, self.s_max, int(n))
            self.values = np.asarray(U.second_order_ratio(self.s), dtype=float)

    def __call__(self, x):
        a = np.abs(np.asarray(x, dtype=float))
        if self.s is None:
            return np.full(a.shape, 2.0)
        out = np.interp(a, self.s, self.values)
        far = a > self.s_max
        if np.any(far):
            out[far] = self.U.second_order_ratio(a[far])
        return out


def good_edges(G, phi, U, delta, ratio=None):
    """Edge ids ``e`` with ``delta_U(grad_e phi) >= delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    grad = G.gradient(np.asarray(phi, dtype=float))
    r = ratio(grad) if ratio is not None else np.asarray(U.second_order_ratio(grad), dtype=float)
    return np.flatnonzero(r >= delta)


def good_edge_component(G, phi, U, delta, anchor, ratio=None):
    """Good edges ``E(phi, delta)`` and the component of ``anchor`` they span.

    Returns
    -------
    edges : ndarray of int
    component : Component
    """
    e = good_edges(G, phi, U, delta, ratio)
    return e, percolation_component(G, e, int(anchor))


def good_edge_conductance(G, edges, v):
    """Unit-weight conductance between ``V0`` and ``v`` through ``edges`` only."""
    w = np.zeros(G.n_edges)
    w[np.asarray(edges, dtype=np.int64)] = 1.0
    pins = {int(u): 0.0 for u in G.boundary}
    pins[int(v)] = 1.0
    energy, _ = dirichlet_energy(G, w, pins)
    return energy


def key_lemma_frequency(stream, delta0, c, v, ratio=None, return_values=False, **kw):
    """Frequency of ``{D_{E(phi, delta0), v} >= c / tau_d(|v|_1)^2}``.

    Needs a stream that tracked every free vertex.
    """
    if delta0 <= 0 or c <= 0:
        raise ValueError("delta0 and c must be positive")
    G = stream.graph
    U = stream.U
    if ratio is None:
        ratio = RatioTable(U)
    threshold = c / tau(G.dimension, G.l1(v)) ** 2
    conf = stream.configurations()
    nc, ns = conf.shape[:2]
    vals = np.empty((nc, ns))
    for i in range(nc):
        for j in range(ns):
            e = good_edges(G, conf[i, j], U, delta0, ratio)
            vals[i, j] = good_edge_conductance(G, e, v) if e.size else 0.0
    est = batch_means((vals >= threshold).astype(float), **kw)
    return (est, vals) if return_values else est
