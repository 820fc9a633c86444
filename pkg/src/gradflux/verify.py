"""Property suites behind ``gradflux verify``.

Every suite returns a :class:`SuiteReport`; a suite passes when each of its
constant-free checks passes within its own quadrature or Monte Carlo
tolerance.
"""

import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import lattice
from .energy import (
    SimplexBoundProblem,
    direct_energy_infimum,
    simplex_energy_bound,
)
from .errors import HypothesisFailed, QuadratureError
from .logconcave import (
    DensityGrid1D,
    LogConcaveDensityND,
    check_lemma_app_main,
    check_prop21,
    check_quantitative_logconcavity,
    check_second_derivative_tail,
    d_curvature,
    prekopa_leindler_check,
)
from .potentials import Potential

__all__ = [
    "CheckResult",
    "SuiteReport",
    "random_density_1d",
    "random_density_nd",
    "random_pl_triple",
    "verify_logconcave",
    "verify_isoperimetry",
    "verify_energy",
    "verify_chessboard",
    "run_suite",
    "SUITES",
]


@dataclass
class CheckResult:
    """One evaluated inequality."""

    check: str
    instance: str
    passed: bool
    lhs: float = float("nan")
    rhs: float = float("nan")
    tolerance: float = 0.0
    relation: str = "<="
    witness: object = None

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = (f"{status} {self.check} [{self.instance}] lhs={self.lhs:.10g} "
                f"{self.relation} rhs={self.rhs:.10g} tol={self.tolerance:.3g}")
        if self.witness is not None and not self.passed:
            text += f" witness={self.witness}"
        return text


@dataclass
class SuiteReport:
    suite: str
    results: list = field(default_factory=list)
    elapsed: float = 0.0
    log: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def counts(self):
        """Number of results per check name."""
        out = {}
        for r in self.results:
            out[r.check] = out.get(r.check, 0) + 1
        return out

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} suite={self.suite} checks={len(self.results)} "
                f"failures={len(self.failures)} elapsed={self.elapsed:.1f}s")


def _from_report(check, instance, rep):
    return CheckResult(check, instance, rep.passed, rep.lhs, rep.rhs, rep.tolerance, rep.relation)


# ----------------------------------------------------------------------
# random log-concave families

def random_density_1d(rng, family, n=4001):
    """A random one-dimensional log-concave grid from ``family``.

    Families: ``gaussian``, ``quartic``, ``uniform`` and ``mixed`` (a
    Gaussian or exponential factor on a half-line or interval).
    """
    if family == "gaussian":
        m, sd = rng.uniform(-1, 1), rng.uniform(0.3, 3.0)
        return DensityGrid1D.from_logdensity(lambda s: -0.5 * ((s - m) / sd) ** 2,
                                             m - 12 * sd, m + 12 * sd, n), f"N({m:.3f},{sd:.3f}^2)"
    if family == "quartic":
        c, a, b = rng.uniform(-1, 1), rng.uniform(0.2, 3.0), rng.uniform(0.0, 1.0)
        R = (40.0 / a) ** 0.25
        return DensityGrid1D.from_logdensity(lambda s: -a * (s - c) ** 4 - b * (s - c) ** 2,
                                             c - R, c + R, n), f"quartic a={a:.3f} b={b:.3f}"
    if family == "uniform":
        lo, w = rng.uniform(-2, 2), rng.uniform(0.2, 4.0)
        return DensityGrid1D.from_function(lambda s: np.ones_like(s), lo, lo + w, n), \
            f"U[{lo:.3f},{lo + w:.3f}]"
    if family == "mixed":
        kind = rng.integers(3)
        if kind == 0:
            k = rng.uniform(0.3, 3.0)
            return DensityGrid1D.from_logdensity(lambda s: -k * s, 0.0, 35.0 / k, n), \
                f"exp rate {k:.3f}"
        if kind == 1:
            k1, k2 = rng.uniform(0.3, 3.0, size=2)
            return DensityGrid1D.from_logdensity(
                lambda s: np.where(s < 0, k1 * s, -k2 * s), -35.0 / k1, 35.0 / k2, n), \
                f"two-sided exp {k1:.3f},{k2:.3f}"
        sd, lo = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)
        return DensityGrid1D.from_logdensity(lambda s: -0.5 * (s / sd) ** 2,
                                             lo, 12 * sd, n), f"N(0,{sd:.3f}^2) on [{lo:.3f},inf)"
    raise ValueError(f"unknown family {family!r}")


def _random_spd(rng, n, lo=0.3, hi=3.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, size=n)) @ Q.T


def random_density_nd(rng, family, n=2):
    """A random log-concave density on the plane (or in space) from ``family``.

    Returns ``(rho, center, label)`` with ``center`` a point of high density.
    """
    if family == "gaussian":
        P = _random_spd(rng, n)
        mu = rng.uniform(-0.5, 0.5, size=n)
        return LogConcaveDensityND.gaussian(P, mu), mu, "gaussian"
    if family == "quartic":
        a = rng.uniform(0.3, 2.0, size=n)
        b = rng.uniform(0.0, 1.0)
        c = rng.uniform(-0.5, 0.5, size=n)
        rho = LogConcaveDensityND.polynomial(P=b * np.eye(n), quartic=a, center=c, name="quartic")
        return rho, c, "quartic"
    if family == "uniform":
        lo = rng.uniform(-1.5, -0.5, size=n)
        hi = rng.uniform(0.5, 1.5, size=n)
        w = rng.normal(size=n)
        w /= np.linalg.norm(w)
        # a cut through the box that keeps the origin well inside
        cut = rng.uniform(0.3, 0.8) * float(np.sum(np.abs(w) * np.maximum(-lo, hi)))
        rho = LogConcaveDensityND.uniform_polytope(w[None, :], np.array([cut]), lo, hi)
        return rho, np.zeros(n), "uniform polytope"
    if family == "mixed":
        P = _random_spd(rng, n, 0.0, 1.5)
        a = rng.uniform(0.0, 1.0, size=n)
        lin = rng.uniform(-1.0, 1.0, size=n)
        lo = rng.uniform(-2.5, -1.5, size=n)
        hi = rng.uniform(1.5, 2.5, size=n)
        w = rng.normal(size=n)
        w /= np.linalg.norm(w)
        rho = LogConcaveDensityND.polynomial(P=P, quartic=a, linear=lin, lo=lo, hi=hi,
                                             A=w[None, :], b=np.array([1.2]), name="mixed")
        return rho, rho.chebyshev_center(), "mixed"
    raise ValueError(f"unknown family {family!r}")


def random_pl_triple(rng, n=1201):
    """Grids ``F1, F2, F`` satisfying the Prekopa-Leindler hypothesis, and ``lam``.

    ``F_i = c_i exp(-psi(x - m_i))`` with a convex ``psi`` and ``F`` the same
    profile centered at ``(1-lam) m_1 + lam m_2`` with amplitude
    ``c_1^(1-lam) c_2^lam``; ``F`` may be widened by a flat top.
    """
    lam = rng.uniform(0.1, 0.9)
    kind = rng.integers(3)
    if kind == 0:
        sd = rng.uniform(0.3, 2.0)
        psi = lambda x: 0.5 * (x / sd) ** 2  # noqa: E731
        R = 10 * sd
        label = f"gaussian sd={sd:.3f}"
    elif kind == 1:
        a = rng.uniform(0.3, 2.0)
        psi = lambda x: a * x**4  # noqa: E731
        R = (35.0 / a) ** 0.25
        label = f"quartic a={a:.3f}"
    else:
        k = rng.uniform(0.5, 2.0)
        psi = lambda x: k * np.abs(x)  # noqa: E731
        R = 35.0 / k
        label = f"laplace k={k:.3f}"
    m1, m2 = rng.uniform(-2, 2, size=2)
    c1, c2 = rng.uniform(0.5, 2.0, size=2)
    m = (1 - lam) * m1 + lam * m2
    F1 = DensityGrid1D.from_function(lambda x: c1 * np.exp(-psi(x - m1)), m1 - R, m1 + R, n,
                                     normalize=False)
    F2 = DensityGrid1D.from_function(lambda x: c2 * np.exp(-psi(x - m2)), m2 - R, m2 + R, n,
                                     normalize=False)
    c = c1 ** (1 - lam) * c2**lam
    F = DensityGrid1D.from_function(lambda x: c * np.exp(-psi(x - m)), m - R, m + R, n,
                                    normalize=False)
    return F1, F2, F, lam, f"{label} lam={lam:.3f}"


# ----------------------------------------------------------------------
# suites

FAMILIES = ("gaussian", "quartic", "uniform", "mixed")


MAX_REDRAWS = 5


def _nd_instance(rng, rho, center, name):
    out = []
    eta = rng.normal(size=rho.n)
    eta /= np.linalg.norm(eta)
    lo, hi = rho.projection_range(eta)
    s0 = float(eta @ center)
    # boxes of the smooth families reach far into the tails, so these
    # fractions give t and s - s0 of the order of the spread
    t = rng.uniform(0.03, 0.15) * (hi - lo)
    s = s0 + rng.uniform(-0.1, 0.1) * (hi - lo)
    s = float(np.clip(s, lo + 1.05 * t, hi - 1.05 * t)) if hi - lo > 2.2 * t else s0
    # D between 0 and the curvature at the slice center
    x = center + (s - s0) * eta
    if rho.contains(x):
        dmax = d_curvature(rho, eta, x, t)
        D = float(rng.uniform(0.0, 1.2) * dmax) if np.isfinite(dmax) else 0.5
    else:
        D = 0.0
    tag = f"{name} s={s:.3f} t={t:.3f} D={D:.4f}"
    r = check_quantitative_logconcavity(rho, eta, s, t, D)
    out.append(_from_report("quantitative log-concavity", tag, r))
    tq = float(rng.uniform(0.2, 3.0))
    r = check_lemma_app_main(rho, eta, tq)
    out.append(_from_report("sup bound from form quantile", f"{name} t={tq:.3f}", r))
    return out


def verify_logconcave(n_instances=50, seed=0, log=None):
    """Randomized constant-free checks on log-concave densities.

    For each of ``n_instances`` instances: item 3 of the level-set facts,
    the second-derivative tail for ``C`` in ``{4, 8, 16}``, the quantitative
    log-concavity inequality, the sup bound from the form quantile, and the
    Prekopa-Leindler inequality.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    rep = SuiteReport("logconcave")
    for i in range(n_instances):
        fam = FAMILIES[i % len(FAMILIES)]
        alpha, label = random_density_1d(rng, fam)
        tag = f"{i}:{label}"
        rep.results.append(_from_report("level probability", tag, check_prop21(alpha)["item3"]))
        for C in (4, 8, 16):
            r = check_second_derivative_tail(alpha, C)
            rep.results.append(_from_report(f"second derivative tail C={C}", tag, r))
        F1, F2, F, lam, plabel = random_pl_triple(rng)
        try:
            r = prekopa_leindler_check(F1, F2, F, lam)
            rep.results.append(_from_report("prekopa-leindler", f"{i}:{plabel}", r))
        except HypothesisFailed as exc:
            rep.results.append(CheckResult("prekopa-leindler", f"{i}:{plabel}", False,
                                           witness=exc.witness))
    for i in range(n_instances):
        fam = FAMILIES[i % len(FAMILIES)]
        # a marginal that cannot reach the pinned quadrature error (a steep
        # ramp from a cut almost orthogonal to the direction) is redrawn
        for attempt in range(MAX_REDRAWS + 1):
            rho, center, label = random_density_nd(rng, fam)
            try:
                results = _nd_instance(rng, rho, center, f"{i}:{label}")
                break
            except QuadratureError as exc:
                rep.log.append(f"instance {i} ({label}) redrawn: {exc}")
                if attempt == MAX_REDRAWS:
                    rep.results.append(CheckResult("quadrature", f"{i}:{label}", False,
                                                   witness=str(exc)))
                    results = []
        rep.results.extend(results)
        if log is not None:
            log(f"instance {i} done")
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_isoperimetry(boxes=((2, 3), (3, 2), (2, 2)), max_L=3):
    """Exhaustive box isoperimetry and boundary connectivity of connected cuts."""
    t0 = time.perf_counter()
    rep = SuiteReport("isoperimetry")
    for d, L in boxes:
        r = lattice.verify_box_isoperimetry(d, L)
        rep.results.append(CheckResult(
            "box isoperimetry", f"d={d} L={L}", r.passed and r.violations == 0,
            float(r.violations), 0.0, 0.0, "<=", sorted(r.witness)))
        rep.log.append(f"box d={d} L={L}: scanned {r.n_scanned} subsets, "
                       f"checked {r.n_checked}, violations {r.violations}, "
                       f"min slack {r.min_slack:.6g}")
    for L in range(2, max_L + 1):
        G = lattice.build_box(2, L)
        cuts = lattice.connected_cuts(G)
        bad = [X for X in cuts if not lattice.boundary_connectivity_check(G, X)]
        rep.results.append(CheckResult(
            "boundary connectivity", f"d=2 L={L} cuts={len(cuts)}", not bad,
            float(len(bad)), 0.0, 0.0, "<=", sorted(bad[0]) if bad else None))
        rep.log.append(f"boundary connectivity d=2 L={L}: {len(cuts)} cuts, {len(bad)} failures")
    rep.elapsed = time.perf_counter() - t0
    return rep


def small_connected_graphs(max_vertices=6):
    """Connected graphs on 2..``max_vertices`` vertices, one per isomorphism class."""
    if max_vertices > 7:
        raise ValueError("the graph atlas covers at most 7 vertices")
    out = []
    for g in nx.graph_atlas_g():
        k = g.number_of_nodes()
        if 2 <= k <= max_vertices and nx.is_connected(g):
            out.append(g)
    return out


def _pairs(k, n_pairs, rng):
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    if len(pairs) <= n_pairs:
        return pairs
    idx = rng.choice(len(pairs), size=n_pairs, replace=False)
    return [pairs[i] for i in sorted(idx)]


def verify_energy(max_vertices=6, potentials=None, n_pairs=3, seed=0, slack=1e-8):
    """Direct energy infimum against the simplex bound on every small connected graph."""
    t0 = time.perf_counter()
    if potentials is None:
        potentials = {"x^2": Potential.quadratic(), "x^4": Potential.power(4),
                      "|x|": Potential.absolute()}
    rng = np.random.default_rng(seed)
    rep = SuiteReport("energy")
    graphs = small_connected_graphs(max_vertices)
    for gi, g in enumerate(graphs):
        k = g.number_of_nodes()
        G = lattice.Graph(k, np.array(list(g.edges()), dtype=np.int64).reshape(-1, 2))
        profiles = {}
        for a, b in _pairs(k, n_pairs, rng):
            for v in (a, b):
                if v not in profiles:
                    profiles[v] = lattice.isoperimetry_profile(G, v)
            for name, U in potentials.items():
                lhs = direct_energy_infimum(G, U, a, b)
                P = SimplexBoundProblem.from_profiles(profiles[a], profiles[b], U)
                rhs = simplex_energy_bound(P)
                rep.results.append(CheckResult(
                    "energy sandwich", f"graph {gi} n={k} e={G.n_edges} ({a},{b}) U={name}",
                    lhs >= rhs - slack, lhs, rhs, slack, ">="))
    rep.log.append(f"{len(graphs)} connected graphs on at most {max_vertices} vertices")
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_chessboard(n_pairs=5, seed=0, n_samples=25000, n_chains=4, L=2):
    """Chessboard comparison on ``T_{2L}^2`` with ``U = x^2`` for random ``(E0, S)``.

    ``S`` is ``[0, s]`` or ``[s, inf)`` with ``s`` chosen so that single-edge
    probabilities are moderate, and ``E0`` a random nonempty subset of a
    random axis-parity class.
    """
    from .sampler import ChainConfig, chessboard_check, run_chains

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    T = lattice.build_torus(2, L)
    U = Potential.quadratic()
    stream = run_chains(T, U, ChainConfig(n_chains=n_chains, n_samples=n_samples,
                                          seed=int(rng.integers(2**31))))
    classes = lattice.axis_parity_classes(T)
    rep = SuiteReport("chessboard")
    for i in range(n_pairs):
        cls = classes[int(rng.integers(len(classes)))]
        k = int(rng.integers(1, cls.edges.size + 1))
        E0 = np.sort(rng.choice(cls.edges, size=k, replace=False))
        if rng.random() < 0.5:
            S = [(0.0, float(rng.uniform(0.6, 1.5)))]
        else:
            S = [(float(rng.uniform(0.05, 0.3)), np.inf)]
        r = chessboard_check(stream, T, S, E0)
        rep.results.append(CheckResult(
            "chessboard", f"{i}: class axis={cls.axis} sigma={cls.sigma} |E0|={k} S={S}",
            r.passed, r.lhs.value, r.rhs, 3.0 * r.combined_se, "<="))
    rep.elapsed = time.perf_counter() - t0
    return rep


SUITES = {
    "logconcave": verify_logconcave,
    "isoperimetry": verify_isoperimetry,
    "energy": verify_energy,
    "chessboard": verify_chessboard,
}


def run_suite(name, **kw):
    """Run one suite (or ``all``) and return a list of reports."""
    if name == "all":
        return [fn(**kw.get(n, {})) for n, fn in SUITES.items()]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    return [SUITES[name](**kw)]
