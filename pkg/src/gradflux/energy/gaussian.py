"""Exact moments of the quadratic surface measure.

With ``U(x) = x^2`` the density is ``exp(-phi^T L phi)`` in the free
coordinates, ``L`` the graph Laplacian, so the free block is Gaussian with
covariance ``(2 L_ff)^{-1}`` around the harmonic extension of ``phi0``.
"""

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

__all__ = ["gaussian_covariance", "gaussian_mean", "gaussian_variance", "gaussian_gradient_variance"]


def _laplacian(G):
    e = G.edges
    n = G.n_vertices
    w = np.ones(e.shape[0])
    A = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]),
                                                    np.concatenate([e[:, 1], e[:, 0]]))),
                          shape=(n, n)).tocsr()
    return sparse.diags(np.asarray(A.sum(axis=1)).ravel()) - A


def gaussian_covariance(G):
    """Covariance over all vertices (zero rows and columns on ``V0``)."""
    L = _laplacian(G).toarray()
    f = G.free
    out = np.zeros((G.n_vertices, G.n_vertices))
    out[np.ix_(f, f)] = np.linalg.inv(2.0 * L[np.ix_(f, f)])
    return out


def gaussian_mean(G):
    """Harmonic extension of ``phi0``."""
    L = _laplacian(G).tocsr()
    f = G.free
    b = G.boundary
    mean = np.zeros(G.n_vertices)
    mean[b] = G.boundary_values
    rhs = -L[f][:, b] @ G.boundary_values
    mean[f] = np.atleast_1d(spsolve(L[f][:, f].tocsc(), rhs))
    return mean


def gaussian_variance(G, v):
    """``Var phi(v)`` by a single sparse solve."""
    if G.pinned[v]:
        return 0.0
    L = _laplacian(G)
    f = G.free
    k = int(np.searchsorted(f, v))
    rhs = np.zeros(f.size)
    rhs[k] = 1.0
    x = np.atleast_1d(spsolve((2.0 * L[f][:, f]).tocsc(), rhs))
    return float(x[k])


def gaussian_gradient_variance(G, e):
    """``Var(grad_e phi)`` for edge id ``e``."""
    C = gaussian_covariance(G)
    u, w = G.edges[int(e)]
    return float(C[u, u] + C[w, w] - 2.0 * C[u, w])
