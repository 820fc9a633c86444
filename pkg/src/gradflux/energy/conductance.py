"""Weighted effective conductance by conjugate gradients on the graph Laplacian."""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from ..errors import SolveError

__all__ = [
    "WeightedGraph",
    "dirichlet_energy",
    "effective_conductance",
    "hessian_weighted_conductance",
]


@dataclass
class WeightedGraph:
    """A graph with one nonnegative weight per edge; ``inf`` marks a rigid edge."""

    graph: object
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.graph.n_edges,):
            raise ValueError("need one weight per edge")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        self.weights = w

    @classmethod
    def unit(cls, graph):
        return cls(graph, np.ones(graph.n_edges))


def _union_find(n, pairs):
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return np.array([find(i) for i in range(n)])


def dirichlet_energy(graph, weights, pins, tol=1e-10, maxiter=None):
    """Minimal ``sum_e w_e (grad_e chi)^2`` subject to ``chi = pins`` on pinned vertices.

    Rigid edges are contracted first; components that contain no pinned
    vertex carry zero energy.

    Parameters
    ----------
    graph : Graph
    weights : ndarray, shape (E,)
    pins : dict
        Vertex index to pinned value.

    Returns
    -------
    energy : float
    chi : ndarray
        Minimizer (zero on unconstrained components).
    """
    n = graph.n_vertices
    w = np.asarray(weights, dtype=float)
    edges = graph.edges
    rigid = np.isinf(w)
    rep = _union_find(n, edges[rigid]) if np.any(rigid) else np.arange(n)
    # pinned values per contracted vertex; conflicting pins make the energy infinite
    pinned_val = {}
    for v, val in pins.items():
        r = int(rep[v])
        if r in pinned_val and pinned_val[r] != val:
            return np.inf, None
        pinned_val[r] = float(val)
    reps, inv = np.unique(rep, return_inverse=True)
    k = reps.size
    soft = (~rigid) & (w > 0)
    eu = inv[edges[soft, 0]]
    ev = inv[edges[soft, 1]]
    ww = w[soft]
    keep = eu != ev
    eu, ev, ww = eu[keep], ev[keep], ww[keep]
    lap = sparse.coo_matrix(
        (np.concatenate([ww, ww, -ww, -ww]),
         (np.concatenate([eu, ev, eu, ev]), np.concatenate([eu, ev, ev, eu]))),
        shape=(k, k),
    ).tocsr()
    chi_c = np.zeros(k)
    is_pin = np.zeros(k, dtype=bool)
    for r, val in pinned_val.items():
        j = int(np.searchsorted(reps, r))
        is_pin[j] = True
        chi_c[j] = val
    # only components touching a pin matter
    ncomp, lab = connected_components(lap != 0, directed=False)
    live = np.isin(lab, np.unique(lab[is_pin]))
    free = np.flatnonzero(live & ~is_pin)
    if free.size:
        A = lap[free][:, free]
        b = -lap[free][:, np.flatnonzero(is_pin)] @ chi_c[is_pin]
        if maxiter is None:
            maxiter = max(1000, 20 * free.size)
        x, info = cg(A, b, rtol=1e-14, atol=1e-300, maxiter=maxiter)
        res = np.linalg.norm(A @ x - b)
        if info != 0 and res > tol * max(1.0, np.linalg.norm(b)):
            raise SolveError(f"conjugate gradients stopped with residual {res:.3e}")
        if res > tol * max(1.0, np.linalg.norm(b)):
            raise SolveError(f"conjugate gradient residual {res:.3e} above tolerance")
        chi_c[free] = x
    chi = chi_c[inv]
    grad = chi[edges[:, 1]] - chi[edges[:, 0]]
    fin = ~rigid
    energy = float(np.sum(w[fin] * grad[fin] ** 2))
    return energy, chi


def effective_conductance(W, a, b):
    """Effective conductance between ``a`` and ``b`` of a weighted graph.

    Returns ``inf`` if a chain of rigid edges joins ``a`` and ``b`` and 0 if
    they lie in different positive-weight components.
    """
    if a == b:
        raise ValueError("terminals must differ")
    energy, _ = dirichlet_energy(W.graph, W.weights, {int(a): 0.0, int(b): 1.0})
    return energy


def hessian_weighted_conductance(G, U, psi, v):
    """Conductance from ``V0`` (grounded) to ``v`` with edge weights ``U''(grad psi)``.

    Parameters
    ----------
    G : LatticeGraph
    U : Potential
    psi : ndarray
        Configuration on the vertices.
    v : int
        Free vertex held at potential 1.
    """
    if G.pinned[v]:
        raise ValueError("target vertex must be free")
    grad = G.gradient(np.asarray(psi, dtype=float))
    w = np.asarray(U.second_derivative(grad), dtype=float)
    if np.any(np.isnan(w)):
        # step off an exact kink and retry
        grad = grad + 1e-12 * np.where(np.isnan(w), 1.0, 0.0)
        w = np.asarray(U.second_derivative(grad), dtype=float)
    pins = {int(u): 0.0 for u in G.boundary}
    pins[int(v)] = 1.0
    energy, _ = dirichlet_energy(G, w, pins)
    return energy
