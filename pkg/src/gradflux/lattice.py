"""Graphs for random-surface models and their combinatorial invariants.

The two standard geometries are the even torus ``T_{2L}^d`` with vertex set
``{-L+1, ..., L}^d`` pinned at the origin, and the box ``Lambda_L^d`` with
vertex set ``{1, ..., L}^d`` pinned on its outer shell.  Small custom graphs
support the exhaustive oracles (connected cuts, isoperimetry profiles).

Vertex sets passed to the enumeration routines are represented internally as
integer bitmasks, so exhaustive scans are limited to
:func:`enumeration_budget` vertices.
"""

import hashlib
import itertools
import os
from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import FormatError, ModeError, SizeError

__all__ = [
    "Graph",
    "LatticeGraph",
    "IsoperimetryProfile",
    "AxisParityClass",
    "build_torus",
    "build_box",
    "custom_graph",
    "edge_boundary",
    "connected_cuts",
    "connected_cut_masks",
    "isoperimetry_profile",
    "count_connected_cuts",
    "verify_box_isoperimetry",
    "boundary_connectivity_check",
    "percolation_component",
    "anchored_isoperimetry_events",
    "axis_parity_classes",
    "enumeration_budget",
    "save_graph",
    "load_graph",
]

DEFAULT_BUDGET = 22
MAX_VERTICES = 1 << 22


def enumeration_budget():
    """Largest vertex count for exhaustive subset scans (env ``GRADFLUX_BUDGET``)."""
    env = os.environ.get("GRADFLUX_BUDGET")
    if env:
        return int(env)
    return DEFAULT_BUDGET


class Graph:
    """Finite undirected graph with a fixed edge orientation.

    Parameters
    ----------
    n_vertices : int
    edges : array_like, shape (E, 2)
        Oriented pairs ``(tail, head)``; no self-loops or repeated pairs.
    coords : ndarray, optional
        Lattice coordinates, one row per vertex.
    """

    def __init__(self, n_vertices, edges, coords=None):
        self.n_vertices = int(n_vertices)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        key = np.sort(edges, axis=1)
        if len({tuple(e) for e in key}) != len(key):
            raise ValueError("repeated edges are not allowed")
        self.edges = edges
        self.edges.setflags(write=False)
        self.coords = None if coords is None else np.asarray(coords)
        self._build_adjacency()

    def _build_adjacency(self):
        n = self.n_vertices
        ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        other = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(self.n_edges), np.arange(self.n_edges)])
        order = np.lexsort((other, ends))
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.indptr, ends + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.indices = other[order].astype(np.int64)
        self.incident = eid[order].astype(np.int64)

    @property
    def n_edges(self):
        return int(self.edges.shape[0])

    def neighbors(self, v):
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v=None):
        deg = np.diff(self.indptr)
        return deg if v is None else int(deg[v])

    def gradient(self, phi):
        """``phi(head) - phi(tail)`` for every oriented edge."""
        phi = np.asarray(phi)
        return phi[..., self.edges[:, 1]] - phi[..., self.edges[:, 0]]

    def is_connected(self, vertices=None):
        """Whether the induced subgraph on ``vertices`` (default all) is connected."""
        if vertices is None:
            keep = np.ones(self.n_vertices, dtype=bool)
        else:
            keep = np.zeros(self.n_vertices, dtype=bool)
            keep[np.asarray(list(vertices), dtype=np.int64)] = True
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            return False
        m = keep[self.edges[:, 0]] & keep[self.edges[:, 1]]
        relabel = -np.ones(self.n_vertices, dtype=np.int64)
        relabel[idx] = np.arange(idx.size)
        e = relabel[self.edges[m]]
        k, _ = _components(idx.size, e)
        return k == 1

    def neighbor_masks(self):
        """Bitmask of neighbours for each vertex (needs ``n_vertices <= 62``)."""
        if self.n_vertices > 62:
            raise SizeError("bitmask representation limited to 62 vertices")
        out = np.zeros(self.n_vertices, dtype=np.int64)
        for u, v in self.edges:
            out[u] |= np.int64(1) << np.int64(v)
            out[v] |= np.int64(1) << np.int64(u)
        return out

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(np.int64(self.n_vertices).tobytes())
        h.update(np.ascontiguousarray(self.edges, dtype="<i8").tobytes())
        return h


def _components(n, edges):
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    a = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    return connected_components(a, directed=False)


class LatticeGraph(Graph):
    """Graph with a pinned boundary set ``V0`` and boundary values ``phi0``.

    Attributes
    ----------
    kind : {"torus", "box", "custom"}
    dimension : int
    side : int or None
        ``2L`` for tori, ``L`` for boxes.
    boundary : ndarray of int
        Sorted indices of ``V0``.
    boundary_values : ndarray
        ``phi0`` aligned with ``boundary``.
    """

    def __init__(self, n_vertices, edges, boundary, boundary_values=None, coords=None,
                 kind="custom", dimension=None, side=None, check=True):
        super().__init__(n_vertices, edges, coords)
        self.kind = kind
        self.dimension = dimension
        self.side = side
        b = np.asarray(boundary, dtype=np.int64).ravel()
        order = np.argsort(b)
        self.boundary = b[order]
        if boundary_values is None:
            bv = np.zeros(b.size)
        else:
            bv = np.asarray(boundary_values, dtype=float).ravel()[order]
        self.boundary_values = bv
        self.pinned = np.zeros(self.n_vertices, dtype=bool)
        self.pinned[self.boundary] = True
        self.free = np.flatnonzero(~self.pinned)
        if check:
            # boxes of side 2 have no interior; they still serve the
            # combinatorial oracles, so only other kinds must be proper
            if self.boundary.size == 0 or (
                self.boundary.size >= self.n_vertices and kind != "box"
            ):
                raise ValueError("boundary set must be nonempty and proper")
            if np.unique(self.boundary).size != self.boundary.size:
                raise ValueError("repeated boundary vertex")
            if not self.is_connected():
                raise ValueError("graph must be connected")
        self._index = None

    @property
    def L(self):
        if self.kind == "torus":
            return self.side // 2
        return self.side

    def index_of(self, coord):
        """Vertex index of a lattice coordinate (tori reduce it modulo ``2L``)."""
        if self.coords is None:
            raise ModeError("custom graph has no coordinates")
        c = np.asarray(coord, dtype=np.int64)
        if self.kind == "torus":
            n = self.side
            L = n // 2
            c = (c + L - 1) % n - L + 1
            digits = c + L - 1
        else:
            digits = c - 1
            if np.any(digits < 0) or np.any(digits >= self.side):
                raise IndexError(f"coordinate {coord} outside the box")
        idx = 0
        for x in digits:
            idx = idx * self.side + int(x)
        return idx

    @property
    def origin(self):
        if self.kind != "torus":
            raise ModeError("origin is defined for tori only")
        return self.index_of([0] * self.dimension)

    def initial_state(self):
        """``phi0`` on ``V0`` and zero elsewhere."""
        phi = np.zeros(self.n_vertices)
        phi[self.boundary] = self.boundary_values
        return phi

    def l1(self, v):
        """l1 norm of the coordinate of vertex ``v``."""
        return int(np.abs(self.coords[v]).sum())

    def fingerprint(self):
        h = super().fingerprint()
        h.update(np.ascontiguousarray(self.boundary, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.boundary_values, dtype="<f8").tobytes())
        return h

    def graph_hash(self):
        return self.fingerprint().hexdigest()

    def describe(self):
        if self.kind == "torus":
            return f"torus d={self.dimension} L={self.L}"
        if self.kind == "box":
            return f"box d={self.dimension} L={self.L}"
        return f"custom n={self.n_vertices} e={self.n_edges}"


def _check_size(n):
    if n > MAX_VERTICES:
        raise SizeError(f"{n} vertices exceed the memory budget of {MAX_VERTICES}")


def _lattice_edges(coords_range, d, wrap):
    side = len(coords_range)
    n = side**d
    digits = np.array(list(itertools.product(range(side), repeat=d)), dtype=np.int64)
    coords = np.asarray(coords_range, dtype=np.int64)[digits]
    weights = side ** np.arange(d - 1, -1, -1)
    edges = []
    for v in range(n):
        for j in range(d):
            dj = digits[v, j] + 1
            if dj == side:
                if not wrap:
                    continue
                dj = 0
            w = v + (dj - digits[v, j]) * weights[j]
            edges.append((v, w))
    return coords, np.array(edges, dtype=np.int64)


def build_torus(d, L):
    """Even torus ``T_{2L}^d`` pinned to zero at the origin.

    Edges are oriented from each vertex to its successor along every axis,
    listed in order of (tail index, axis).
    """
    d, L = int(d), int(L)
    if d < 2 or L < 2:
        raise ValueError("torus needs d >= 2 and L >= 2")
    _check_size((2 * L) ** d)
    coords, edges = _lattice_edges(list(range(-L + 1, L + 1)), d, wrap=True)
    origin = int(np.flatnonzero(np.all(coords == 0, axis=1))[0])
    return LatticeGraph((2 * L) ** d, edges, [origin], [0.0], coords,
                        kind="torus", dimension=d, side=2 * L)


def build_box(d, L):
    """Box ``Lambda_L^d`` pinned to zero on the vertices adjacent to the outside."""
    d, L = int(d), int(L)
    if d < 2 or L < 2:
        raise ValueError("box needs d >= 2 and L >= 2")
    _check_size(L**d)
    coords, edges = _lattice_edges(list(range(1, L + 1)), d, wrap=False)
    shell = np.flatnonzero(np.any((coords == 1) | (coords == L), axis=1))
    return LatticeGraph(L**d, edges, shell, np.zeros(shell.size), coords,
                        kind="box", dimension=d, side=L)


def custom_graph(n_vertices, edges, boundary=(0,), boundary_values=None, coords=None):
    """Connected custom graph, pinned at ``boundary`` (default vertex 0)."""
    return LatticeGraph(n_vertices, edges, boundary, boundary_values, coords, kind="custom")


def _as_mask(G, X):
    if isinstance(X, (int, np.integer)) and not isinstance(X, bool):
        raise TypeError("pass a collection of vertices, not an int")
    mask = np.zeros(G.n_vertices, dtype=bool)
    idx = np.asarray(list(X), dtype=np.int64)
    if idx.size:
        mask[idx] = True
    return mask


def edge_boundary(G, X):
    """Indices of edges with exactly one endpoint in ``X``."""
    inside = _as_mask(G, X)
    return np.flatnonzero(inside[G.edges[:, 0]] != inside[G.edges[:, 1]])


# ----------------------------------------------------------------------
# bitmask enumeration kernels

@numba.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@numba.njit(cache=True)
def _mask_connected(mask, nbr, n):
    if mask == 0:
        return False
    reach = mask & (-mask)
    while True:
        new = reach
        for i in range(n):
            if (reach >> i) & 1:
                new |= nbr[i]
        new &= mask
        if new == reach:
            break
        reach = new
    return reach == mask


@numba.njit(cache=True)
def _scan_cuts(nbr, n):
    full = (np.int64(1) << n) - 1
    out = np.empty(full, dtype=np.int64)
    k = 0
    for mask in range(1, full):
        if _mask_connected(mask, nbr, n) and _mask_connected(full ^ mask, nbr, n):
            out[k] = mask
            k += 1
    return out[:k]


@numba.njit(cache=True)
def _mask_stats(masks, tails, heads):
    k = masks.size
    size = np.empty(k, dtype=np.int64)
    bnd = np.empty(k, dtype=np.int64)
    inner = np.empty(k, dtype=np.int64)
    for j in range(k):
        m = masks[j]
        size[j] = _popcount(m)
        b = 0
        c = 0
        for e in range(tails.size):
            x = (m >> tails[e]) & 1
            y = (m >> heads[e]) & 1
            if x != y:
                b += 1
            elif x == 1:
                c += 1
        bnd[j] = b
        inner[j] = c
    return size, bnd, inner


@numba.njit(cache=True)
def _scan_isoperimetry(n, tails, heads, max_size, exponent):
    full = np.int64(1) << n
    best = np.inf
    witness = np.int64(0)
    checked = 0
    violations = 0
    for m in range(1, full):
        s = _popcount(m)
        if s > max_size:
            continue
        checked += 1
        b = 0
        for e in range(tails.size):
            if ((m >> tails[e]) & 1) != ((m >> heads[e]) & 1):
                b += 1
        slack = b - s**exponent
        if slack < best:
            best = slack
            witness = m
        if slack < -1e-12:
            violations += 1
    return best, witness, checked, violations


def _require_budget(G):
    budget = min(enumeration_budget(), 62)
    if G.n_vertices > budget:
        raise SizeError(
            f"{G.n_vertices} vertices exceed the enumeration budget {budget}"
        )


def _mask_to_set(mask, n):
    return frozenset(i for i in range(n) if (mask >> i) & 1)


def connected_cut_masks(G):
    """Bitmasks of all connected cuts (``X`` and its complement both connected)."""
    _require_budget(G)
    return _scan_cuts(G.neighbor_masks(), G.n_vertices)


def connected_cuts(G):
    """The class ``C(G)`` as a list of frozensets of vertex indices."""
    return [_mask_to_set(int(m), G.n_vertices) for m in connected_cut_masks(G)]


def _tails_heads(G):
    return (np.ascontiguousarray(G.edges[:, 0]), np.ascontiguousarray(G.edges[:, 1]))


@dataclass
class IsoperimetryProfile:
    """Level-wise extremes of cut statistics for sets containing a vertex.

    ``M[i-1]`` and ``m[i-1]`` belong to level ``i`` (``1 <= i <= l``), which
    admits sets with ``floor(N/2^(i+1)) < |X| <= floor(N/2^i)``.  Undefined
    levels hold ``nan`` and ``defined`` is False there.
    """

    vertex: int
    n_vertices: int
    level_count: int
    M: np.ndarray
    m: np.ndarray
    defined: np.ndarray
    mode: str

    @property
    def levels(self):
        return np.arange(1, self.level_count + 1)


def _level_count(n):
    return int(np.floor(np.log2(n))) if n >= 1 else 0


def isoperimetry_profile(G, v, mode="exact", kappa_M=2.0, kappa_m=None, percolated=False):
    """``M_i(v)`` and ``m_i(v)`` for ``1 <= i <= l``.

    Parameters
    ----------
    G : Graph
    v : int
    mode : {"exact", "analytic"}
        ``exact`` scans the connected cuts; ``analytic`` instantiates
        ``M_i = d * ceil(N/2^i) * kappa_M`` and
        ``m_i = ceil((N/2^(i+1))^((d-1)/d)) * kappa_m`` (tori and boxes only).
    kappa_M, kappa_m : float
        Constants of the analytic mode.  ``kappa_m`` defaults to 1, or 1/2
        when ``percolated`` is set.
    """
    n = G.n_vertices
    l = _level_count(n)
    if mode == "exact":
        masks = connected_cut_masks(G)
        masks = masks[(masks >> v) & 1 == 1]
        size, bnd, inner = _mask_stats(masks, *_tails_heads(G))
        M = np.full(l, np.nan)
        m = np.full(l, np.nan)
        for i in range(1, l + 1):
            sel = (size > n // 2 ** (i + 1)) & (size <= n // 2**i)
            if np.any(sel):
                M[i - 1] = float(np.max(inner[sel] + bnd[sel]))
                m[i - 1] = float(np.min(bnd[sel]))
        return IsoperimetryProfile(int(v), n, l, M, m, ~np.isnan(M), "exact")
    if mode == "analytic":
        if getattr(G, "kind", None) not in ("torus", "box"):
            raise ModeError("analytic profiles need a torus or a box")
        d = G.dimension
        if kappa_m is None:
            kappa_m = 0.5 if percolated else 1.0
        i = np.arange(1, l + 1)
        M = d * np.ceil(n / 2.0**i) * kappa_M
        m = np.ceil((n / 2.0 ** (i + 1)) ** ((d - 1) / d)) * kappa_m
        return IsoperimetryProfile(int(v), n, l, M, m, np.ones(l, dtype=bool), "analytic")
    raise ModeError(f"unknown profile mode {mode!r}")


def analytic_profile(N, d, kappa_M=2.0, kappa_m=1.0, l=None):
    """Analytic profile for an ``N``-vertex box or torus of dimension ``d``.

    ``l`` overrides the level count; levels beyond ``log2 N`` use the same
    formulas.
    """
    if l is None:
        l = _level_count(N)
    i = np.arange(1, l + 1)
    M = d * np.ceil(N / 2.0**i) * kappa_M
    m = np.ceil((N / 2.0 ** (i + 1)) ** ((d - 1) / d)) * kappa_m
    return IsoperimetryProfile(-1, int(N), int(l), M, m, np.ones(l, dtype=bool), "analytic")


def count_connected_cuts(G, a, m):
    """``|{X in C(G) : a in X, |X| <= 3|V|/4, |dX| = m}|``."""
    masks = connected_cut_masks(G)
    masks = masks[(masks >> a) & 1 == 1]
    size, bnd, _ = _mask_stats(masks, *_tails_heads(G))
    sel = (4 * size <= 3 * G.n_vertices) & (bnd == m)
    return int(np.count_nonzero(sel))


@dataclass
class IsoperimetryReport:
    """Outcome of an exhaustive isoperimetric scan."""

    passed: bool
    n_scanned: int
    n_checked: int
    violations: int
    min_slack: float
    witness: frozenset


def verify_box_isoperimetry(d, L):
    """Check ``|dX| >= |X|^((d-1)/d)`` for all ``X`` with ``|X| <= 3 L^d / 4``.

    Every subset of the box is scanned, not only connected ones.
    """
    G = build_box(d, L)
    _require_budget(G)
    n = G.n_vertices
    best, wit, checked, viol = _scan_isoperimetry(
        n, *_tails_heads(G), (3 * n) // 4, (d - 1) / d
    )
    return IsoperimetryReport(viol == 0, 2**n, int(checked), int(viol), float(best),
                              _mask_to_set(int(wit), n))


def boundary_connectivity_check(G, X):
    """Whether the boundary edges of ``X`` form a connected set in the midpoint graph.

    Two edges are adjacent in the midpoint graph when their midpoints are at
    l-infinity distance in ``(0, 1]``.
    """
    if G.kind != "box":
        raise ModeError("boundary connectivity is defined on boxes")
    bnd = edge_boundary(G, X)
    if bnd.size <= 1:
        return True
    mid = 0.5 * (G.coords[G.edges[bnd, 0]] + G.coords[G.edges[bnd, 1]])
    dist = np.max(np.abs(mid[:, None, :] - mid[None, :, :]), axis=2)
    adj = (dist > 0) & (dist <= 1 + 1e-12)
    i, j = np.nonzero(np.triu(adj, 1))
    k, _ = _components(bnd.size, np.stack([i, j], axis=1))
    return k == 1


@dataclass
class Component:
    """Connected component of a spanning subgraph.

    ``vertices`` and ``edges`` index the parent graph; ``graph`` is the
    component relabelled to ``0..k-1`` in increasing parent order.
    """

    vertices: np.ndarray
    edges: np.ndarray
    graph: Graph


def percolation_component(G, retained_edges, a):
    """Component of ``a`` in the spanning subgraph ``(V, retained_edges)``."""
    keep = np.zeros(G.n_edges, dtype=bool)
    r = np.asarray(list(retained_edges), dtype=np.int64)
    if r.size:
        keep[r] = True
    e = G.edges[keep]
    _, labels = _components(G.n_vertices, e)
    verts = np.flatnonzero(labels == labels[a])
    eids = np.flatnonzero(keep & (labels[G.edges[:, 0]] == labels[a]))
    relabel = -np.ones(G.n_vertices, dtype=np.int64)
    relabel[verts] = np.arange(verts.size)
    sub = Graph(verts.size, relabel[G.edges[eids]],
                None if G.coords is None else G.coords[verts])
    return Component(verts, eids, sub)


def anchored_isoperimetry_events(G, retained_edges, a, b):
    """Return ``(b in G_a, anchored isoperimetry holds on G_a)``.

    The second event asks that every connected cut ``X`` of the component
    ``G_a`` with ``a in X`` and ``|X| <= |V(G_a)|/2`` has
    ``|dX| >= |X|^((d-1)/d) / 2``.
    """
    comp = percolation_component(G, retained_edges, a)
    event1 = bool(np.any(comp.vertices == b))
    sub = comp.graph
    k = sub.n_vertices
    if k == 1:
        return event1, True
    budget = min(enumeration_budget(), 62)
    if k > budget:
        raise SizeError(f"component of {k} vertices exceeds the enumeration budget")
    d = G.dimension
    a_loc = int(np.flatnonzero(comp.vertices == a)[0])
    masks = _scan_cuts(sub.neighbor_masks(), k)
    masks = masks[(masks >> a_loc) & 1 == 1]
    size, bnd, _ = _mask_stats(masks, *_tails_heads(sub))
    sel = 2 * size <= k
    ok = np.all(bnd[sel] >= 0.5 * size[sel] ** ((d - 1) / d) - 1e-12)
    return event1, bool(ok)


@dataclass
class AxisParityClass:
    """Edges along ``axis`` whose other coordinates have parities ``sigma``.

    ``axis`` is 0-based; ``sigma[axis]`` is fixed to 0.
    """

    axis: int
    sigma: tuple
    edges: np.ndarray


def axis_parity_classes(T):
    """Partition of the torus edges into ``d * 2^(d-1)`` axis-parity classes."""
    if T.kind != "torus":
        raise ModeError("axis-parity classes are defined on tori")
    d = T.dimension
    tails = T.coords[T.edges[:, 0]]
    heads = T.coords[T.edges[:, 1]]
    axis = np.argmax(tails != heads, axis=1)
    par = np.mod(tails, 2)
    par[np.arange(T.n_edges), axis] = 0
    out = []
    for j in range(d):
        for rest in itertools.product((0, 1), repeat=d - 1):
            sigma = list(rest)
            sigma.insert(j, 0)
            sel = (axis == j) & np.all(par == np.array(sigma), axis=1)
            out.append(AxisParityClass(j, tuple(sigma), np.flatnonzero(sel)))
    return out


# ----------------------------------------------------------------------
# text format

_HEADER = "# lattice v1"


def save_graph(G, path):
    """Write ``G`` in the ``# lattice v1`` adjacency text format."""
    lines = [_HEADER]
    lines.append(f"kind {G.kind}")
    if G.dimension is not None:
        lines.append(f"dimension {G.dimension}")
    if G.side is not None:
        lines.append(f"side {G.side}")
    lines.append(f"vertices {G.n_vertices}")
    if G.coords is not None:
        lines.append("[coordinates]")
        for v, c in enumerate(G.coords):
            lines.append(" ".join([str(v)] + [str(int(x)) for x in c]))
    lines.append("[edges]")
    for u, v in G.edges:
        lines.append(f"{u} {v}")
    lines.append("[boundary]")
    for v, val in zip(G.boundary, G.boundary_values):
        lines.append(f"{v} {float(val)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path):
    """Read a graph written by :func:`save_graph`."""
    with open(path) as fh:
        text = fh.read().splitlines()
    if not text or text[0].strip() != _HEADER:
        raise FormatError(f"{path}: expected header {_HEADER!r}")
    meta = {}
    section = None
    coords, edges, bnd, bval = [], [], [], []
    for raw in text[1:]:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        parts = line.split()
        if section is None:
            meta[parts[0]] = parts[1]
        elif section == "coordinates":
            coords.append([int(x) for x in parts[1:]])
        elif section == "edges":
            edges.append((int(parts[0]), int(parts[1])))
        elif section == "boundary":
            bnd.append(int(parts[0]))
            bval.append(float(parts[1]))
        else:
            raise FormatError(f"{path}: unknown section {section!r}")
    n = int(meta["vertices"])
    dim = int(meta["dimension"]) if "dimension" in meta else None
    side = int(meta["side"]) if "side" in meta else None
    return LatticeGraph(n, edges, bnd, bval, np.array(coords) if coords else None,
                        kind=meta.get("kind", "custom"), dimension=dim, side=side)
