"""Gibbs chains for the surface measure, checkpoints and sample streams."""

import io
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import EnvelopeError, FormatError
from . import kernel

__all__ = [
    "SurfaceState",
    "ChainConfig",
    "SampleStream",
    "default_burn_in",
    "chain_generators",
    "run_chains",
    "save_checkpoint",
    "load_checkpoint",
    "read_stream_csv",
    "read_stream_binary",
]

CHECKPOINT_HEADER = "# chain v1"
STREAM_HEADER = "# stream v1"


def default_burn_in(G):
    """``20 (2L)^2`` sweeps on planar tori, ``20 (2L)`` above; ``20 n`` on other graphs."""
    if G.kind == "torus":
        side = G.side
        return 20 * side * side if G.dimension == 2 else 20 * side
    if G.kind == "box":
        return 20 * G.side * G.side if G.dimension == 2 else 20 * G.side
    return 20 * G.n_vertices


def chain_generators(seed, n_chains):
    """Independent PCG64 generators, one per chain, spawned from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(int(n_chains))
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


@dataclass
class SurfaceState:
    """A configuration pinned on ``V0`` with its sweep counter and generator.

    Parameters
    ----------
    graph : LatticeGraph
    phi : ndarray
    sweep : int
    rng : numpy.random.Generator
    """

    graph: object
    phi: np.ndarray
    sweep: int = 0
    rng: object = None

    def __post_init__(self):
        self.phi = np.array(self.phi, dtype=float)
        if self.phi.shape != (self.graph.n_vertices,):
            raise ValueError("phi needs one value per vertex")
        if self.rng is None:
            self.rng = np.random.Generator(np.random.PCG64(0))
        if not np.array_equal(self.phi[self.graph.boundary], self.graph.boundary_values):
            raise ValueError("phi must equal phi0 on the boundary")

    @classmethod
    def initial(cls, G, rng=None):
        return cls(G, G.initial_state(), 0, rng)

    def energy(self, U):
        """``sum_e U(grad_e phi)``."""
        return float(np.sum(U.eval(self.graph.gradient(self.phi))))

    def is_valid(self, U):
        return (
            np.array_equal(self.phi[self.graph.boundary], self.graph.boundary_values)
            and np.isfinite(self.energy(U))
        )

    def advance(self, U, n_sweeps, scan="systematic"):
        """Run ``n_sweeps`` Gibbs sweeps in place."""
        code, p, tx, tu = U.kernel_args()
        G = self.graph
        out = np.empty((0, 0))
        status, _, done = kernel.run_chain(
            self.phi, G.free, G.indptr, G.indices, code, p, tx, tu, self.rng,
            scan == "random", int(n_sweeps), 0, 1, np.empty(0, dtype=np.int64), out,
        )
        self.sweep += int(done)
        if status != kernel.OK:
            raise EnvelopeError("envelope acceptance fell below 1e-3")
        return self


@dataclass
class ChainConfig:
    """Run parameters.

    Parameters
    ----------
    n_chains : int
    burn_in : int or None
        ``None`` selects :func:`default_burn_in`.
    thin : int
        Sweeps between retained samples.
    n_samples : int
        Retained samples per chain.
    seed : int
        Master seed; chain ``i`` uses the ``i``-th spawned child.
    scan : {"systematic", "random"}
    track : array_like of int or None
        Vertices to record; ``None`` records every vertex.
    workers : int or None
        Thread count; has no effect on the samples.
    """

    n_chains: int = 4
    burn_in: object = None
    thin: int = 1
    n_samples: int = 1000
    seed: int = 0
    scan: str = "systematic"
    track: object = None
    workers: object = None

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.scan not in ("systematic", "random"):
            raise ValueError("scan must be 'systematic' or 'random'")

    def resolved_burn_in(self, G):
        return default_burn_in(G) if self.burn_in is None else int(self.burn_in)


@dataclass
class SampleStream:
    """Retained samples of several chains.

    Attributes
    ----------
    samples : ndarray, shape (n_chains, n_samples, n_track)
    track : ndarray of int
        Recorded vertices, in column order.
    sweeps : ndarray of int
        Sweep index (counted from 1, burn-in included) of each retained row.
    states : list of SurfaceState
        Final state of every chain.
    proposals : ndarray of int
        Envelope proposals per chain.
    """

    graph: object
    U: object
    config: ChainConfig
    samples: np.ndarray
    track: np.ndarray
    sweeps: np.ndarray
    states: list = field(default_factory=list)
    proposals: np.ndarray = None
    burn_in: int = 0

    @property
    def n_chains(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]

    def column(self, v):
        hit = np.flatnonzero(self.track == int(v))
        return int(hit[0]) if hit.size else None

    def values(self, v):
        """Samples of ``phi(v)``, shape ``(n_chains, n_samples)``.

        Untracked pinned vertices return their boundary value.
        """
        j = self.column(v)
        if j is not None:
            return self.samples[:, :, j]
        G = self.graph
        if G.pinned[v]:
            k = int(np.searchsorted(G.boundary, v))
            return np.full(self.samples.shape[:2], G.boundary_values[k])
        raise KeyError(f"vertex {v} was not tracked")

    def configurations(self):
        """Full configurations, shape ``(n_chains, n_samples, n_vertices)``."""
        G = self.graph
        out = np.empty(self.samples.shape[:2] + (G.n_vertices,))
        out[:, :, G.boundary] = G.boundary_values
        out[:, :, self.track] = self.samples
        missing = np.setdiff1d(G.free, self.track)
        if missing.size:
            raise KeyError("not every free vertex was tracked")
        return out

    def gradients(self, edges):
        """``phi(head) - phi(tail)`` for the given edge ids, shape ``(chains, samples, k)``."""
        e = self.graph.edges[np.asarray(edges, dtype=np.int64)]
        tails = np.stack([self.values(int(v)) for v in e[:, 0]], axis=-1) if len(e) else None
        heads = np.stack([self.values(int(v)) for v in e[:, 1]], axis=-1) if len(e) else None
        if tails is None:
            return np.empty(self.samples.shape[:2] + (0,))
        return heads - tails

    def acceptance_rate(self):
        """Accepted over proposed envelope draws, pooled over chains."""
        n_updates = self.graph.free.size * np.array([s.sweep for s in self.states])
        return float(np.sum(n_updates) / np.sum(self.proposals))

    # ------------------------------------------------------------------
    # output

    def header_lines(self):
        c = self.config
        return [
            STREAM_HEADER,
            f"# graph {self.graph.graph_hash()}",
            f"# potential {self.U.spec()}",
            f"# chains {c.n_chains} samples {self.n_samples} burn_in {self.burn_in} "
            f"thin {c.thin} seed {c.seed} scan {c.scan}",
        ]

    def write_csv(self, fh, header_lines=()):
        """Write ``chain,sweep,vertex,value`` rows after ``#`` header lines."""
        for line in list(header_lines) + self.header_lines():
            fh.write(line if line.startswith("#") else "# " + line)
            fh.write("\n")
        fh.write("chain,sweep,vertex,value\n")
        buf = io.StringIO()
        for ci in range(self.n_chains):
            for r in range(self.n_samples):
                sw = int(self.sweeps[r])
                row = self.samples[ci, r]
                for j, v in enumerate(self.track):
                    buf.write(f"{ci},{sw},{int(v)},{float(row[j])!r}\n")
            fh.write(buf.getvalue())
            buf.seek(0)
            buf.truncate()

    def write_binary(self, fh, header_lines=()):
        """Text header, ``data`` line, then little-endian payload.

        Payload: ``n_chains, n_samples, n_track`` as int64, the tracked
        vertex ids and sweep indices as int64, then the samples as float64
        in ``(chain, sample, vertex)`` order.
        """
        lines = list(header_lines) + self.header_lines() + ["data"]
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(struct.pack("<3q", *self.samples.shape))
        fh.write(np.ascontiguousarray(self.track, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(self.sweeps, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(self.samples, dtype="<f8").tobytes())


def read_stream_csv(fh):
    """Parse a CSV stream; returns ``(headers, chain, sweep, vertex, value)`` arrays."""
    headers = []
    lines = []
    for line in fh:
        if line.startswith("#"):
            headers.append(line.rstrip("\n"))
        else:
            lines.append(line)
    if not lines or lines[0].strip() != "chain,sweep,vertex,value":
        raise FormatError("missing stream column header")
    rows = np.loadtxt(io.StringIO("".join(lines[1:])), delimiter=",", ndmin=2)
    if rows.size == 0:
        rows = np.empty((0, 4))
    return (headers, rows[:, 0].astype(np.int64), rows[:, 1].astype(np.int64),
            rows[:, 2].astype(np.int64), rows[:, 3])


def read_stream_binary(fh):
    """Parse a binary stream; returns ``(headers, track, sweeps, samples)``."""
    headers = []
    while True:
        line = fh.readline()
        if not line:
            raise FormatError("missing data marker")
        text = line.decode("ascii").rstrip("\n")
        if text == "data":
            break
        headers.append(text)
    raw = fh.read(24)
    if len(raw) != 24:
        raise FormatError("truncated shape record")
    nc, ns, nt = struct.unpack("<3q", raw)
    track = np.frombuffer(fh.read(8 * nt), dtype="<i8").astype(np.int64)
    sweeps = np.frombuffer(fh.read(8 * ns), dtype="<i8").astype(np.int64)
    body = fh.read(8 * nc * ns * nt)
    if len(body) != 8 * nc * ns * nt:
        raise FormatError("truncated sample payload")
    samples = np.frombuffer(body, dtype="<f8").reshape(nc, ns, nt).astype(float)
    return headers, track, sweeps, samples


def _run_one(args):
    state, U, burn_in, thin, n_samples, scan, track = args
    code, p, tx, tu = U.kernel_args()
    G = state.graph
    out = np.empty((n_samples, track.size))
    status, proposals, done = kernel.run_chain(
        state.phi, G.free, G.indptr, G.indices, code, p, tx, tu, state.rng,
        scan == "random", n_samples * thin, burn_in, thin, track, out,
    )
    state.sweep += int(done)
    return status, int(proposals), out


def run_chains(G, U, config, initial=None):
    """Run ``config.n_chains`` independent Gibbs chains.

    Parameters
    ----------
    G : LatticeGraph
    U : Potential
    config : ChainConfig
    initial : list of SurfaceState, optional
        Starting states (e.g. from checkpoints); their generators are used
        as they are. By default every chain starts from ``phi0`` extended by
        zero with a generator spawned from ``config.seed``.

    Returns
    -------
    SampleStream

    Raises
    ------
    EnvelopeError
        If a conditional draw exhausts its proposal budget.
    """
    if initial is None:
        gens = chain_generators(config.seed, config.n_chains)
        states = [SurfaceState.initial(G, g) for g in gens]
    else:
        if len(initial) != config.n_chains:
            raise ValueError("need one initial state per chain")
        states = list(initial)
        for s in states:
            if s.graph.graph_hash() != G.graph_hash():
                raise ValueError("initial state belongs to another graph")
    track = np.arange(G.n_vertices) if config.track is None else np.asarray(config.track)
    track = track.astype(np.int64).ravel()
    if track.size and (track.min() < 0 or track.max() >= G.n_vertices):
        raise ValueError("tracked vertex out of range")
    burn_in = config.resolved_burn_in(G)
    jobs = [(s, U, burn_in, config.thin, config.n_samples, config.scan, track) for s in states]
    workers = config.workers or 1
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    if any(r[0] != kernel.OK for r in results):
        raise EnvelopeError("envelope acceptance fell below 1e-3")
    samples = np.stack([r[2] for r in results])
    start = states[0].sweep - burn_in - config.n_samples * config.thin
    sweeps = start + burn_in + config.thin * np.arange(1, config.n_samples + 1)
    return SampleStream(G, U, config, samples, track, sweeps.astype(np.int64), states,
                        np.array([r[1] for r in results], dtype=np.int64), burn_in)


# ----------------------------------------------------------------------
# checkpoints

def save_checkpoint(state, fh):
    """Write a binary checkpoint of ``state`` (PCG64 generators only)."""
    st = state.rng.bit_generator.state
    if st.get("bit_generator") != "PCG64":
        raise ValueError("checkpoints support PCG64 generators")
    lines = [
        CHECKPOINT_HEADER,
        f"graph {state.graph.graph_hash()}",
        f"sweep {int(state.sweep)}",
        "rng PCG64",
        f"rng_state {int(st['state']['state'])}",
        f"rng_inc {int(st['state']['inc'])}",
        f"rng_has_uint32 {int(st['has_uint32'])}",
        f"rng_uinteger {int(st['uinteger'])}",
        f"n_vertices {state.graph.n_vertices}",
        "data",
    ]
    fh.write(("\n".join(lines) + "\n").encode("ascii"))
    fh.write(np.ascontiguousarray(state.phi, dtype="<f8").tobytes())


def load_checkpoint(fh, G):
    """Restore a :class:`SurfaceState` on graph ``G`` from a checkpoint."""
    first = fh.readline().decode("ascii").rstrip("\n")
    if first != CHECKPOINT_HEADER:
        raise FormatError(f"expected {CHECKPOINT_HEADER!r}, got {first!r}")
    meta = {}
    while True:
        line = fh.readline()
        if not line:
            raise FormatError("missing data marker")
        text = line.decode("ascii").rstrip("\n")
        if text == "data":
            break
        key, _, val = text.partition(" ")
        meta[key] = val
    try:
        if meta["graph"] != G.graph_hash():
            raise FormatError("checkpoint belongs to another graph")
        n = int(meta["n_vertices"])
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(meta["rng_state"]), "inc": int(meta["rng_inc"])},
            "has_uint32": int(meta["rng_has_uint32"]),
            "uinteger": int(meta["rng_uinteger"]),
        }
        sweep = int(meta["sweep"])
    except KeyError as exc:
        raise FormatError(f"missing checkpoint field {exc}") from None
    body = fh.read(8 * n)
    if len(body) != 8 * n or n != G.n_vertices:
        raise FormatError("checkpoint payload does not match the graph")
    phi = np.frombuffer(body, dtype="<f8").astype(float)
    return SurfaceState(G, phi, sweep, rng)

