import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradflux.energy import (
    PolynomialObjective,
    SimplexBoundProblem,
    WeightedGraph,
    corollary_quadratic_bound,
    d_eta_t,
    direct_energy_infimum,
    dstar_exponent,
    effective_conductance,
    gaussian_covariance,
    gaussian_gradient_variance,
    gaussian_variance,
    hessian_weighted_conductance,
    project_simplex,
    simplex_energy_bound,
    solve_multiplier,
    solve_pgd,
    tail_bound,
    tau,
)
from gradflux.errors import ProfileError
from gradflux.lattice import analytic_profile, build_box, build_torus, custom_graph, isoperimetry_profile
from gradflux.potentials import Potential

QUAD = Potential.quadratic()
P4 = Potential.power(4)
ABS = Potential.absolute()


def path(n):
    return custom_graph(n, [(i, i + 1) for i in range(n - 1)])


K4 = custom_graph(4, list(itertools.combinations(range(4), 2)))


def dense_conductance(G, w, a, b):
    """Schur complement of the weighted Laplacian onto ``{a, b}``."""
    n = G.n_vertices
    Lap = np.zeros((n, n))
    for (u, v), x in zip(G.edges, w):
        Lap[u, u] += x
        Lap[v, v] += x
        Lap[u, v] -= x
        Lap[v, u] -= x
    keep = [a, b]
    rest = [i for i in range(n) if i not in keep]
    S = Lap[np.ix_(keep, keep)] - Lap[np.ix_(keep, rest)] @ np.linalg.solve(
        Lap[np.ix_(rest, rest)], Lap[np.ix_(rest, keep)])
    return S[0, 0]


# ----------------------------------------------------------------------
# conductance


def test_conductance_examples():
    for n in (2, 3, 6):
        assert effective_conductance(WeightedGraph.unit(path(n)), 0, n - 1) == pytest.approx(
            1 / (n - 1), rel=1e-12)
    C4 = build_box(2, 2)
    a, b = C4.index_of([1, 1]), C4.index_of([2, 2])
    assert effective_conductance(WeightedGraph.unit(C4), a, b) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=6, max_size=6))
def test_conductance_matches_dense_solve(w):
    w = np.array(w)
    assert effective_conductance(WeightedGraph(K4, w), 0, 3) == pytest.approx(
        dense_conductance(K4, w, 0, 3), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=12, max_size=12), st.integers(0, 11),
       st.floats(0.0, 3.0))
def test_conductance_rayleigh_monotone(w, e, inc):
    G = build_box(2, 3)
    w = np.array(w)
    before = effective_conductance(WeightedGraph(G, w), 0, 8)
    w2 = w.copy()
    w2[e] += inc
    after = effective_conductance(WeightedGraph(G, w2), 0, 8)
    assert after >= before - 1e-10 * max(1.0, before)


def test_conductance_rigid_and_disconnected():
    G = path(3)
    assert effective_conductance(WeightedGraph(G, [np.inf, 1.0]), 0, 2) == pytest.approx(1.0)
    assert effective_conductance(WeightedGraph(G, [1.0, 0.0]), 0, 2) == 0.0


def test_hessian_weighted_conductance():
    B = build_box(2, 3)
    v = B.index_of([2, 2])
    # grounding all of V0 puts four edges of weight U'' = 2 in parallel
    psi = np.random.default_rng(0).normal(size=B.n_vertices)
    assert hessian_weighted_conductance(B, QUAD, psi, v) == pytest.approx(8.0)
    assert hessian_weighted_conductance(B, P4, np.zeros(B.n_vertices), v) == 0.0
    ppq = Potential.power_plus_quadratic(4)
    assert hessian_weighted_conductance(B, ppq, psi, v) >= 8.0 - 1e-12


# ----------------------------------------------------------------------
# direct energy


def test_direct_energy_examples():
    e = custom_graph(2, [(0, 1)])
    for U in (QUAD, P4, ABS):
        assert direct_energy_infimum(e, U, 0, 1) == pytest.approx(float(U.eval(1.0)), rel=1e-9)
    for n in (3, 5):
        assert direct_energy_infimum(path(n), QUAD, 0, n - 1) == pytest.approx(1 / (n - 1), rel=1e-9)


def test_direct_energy_k4_quartic_grid_oracle():
    x = np.linspace(0, 1, 2001)
    X, Y = np.meshgrid(x, x)
    # phi = (1, X, Y, 0) on K4
    E = (1 - X) ** 4 + (1 - Y) ** 4 + 1.0 + (X - Y) ** 4 + X**4 + Y**4
    assert direct_energy_infimum(K4, P4, 0, 3) == pytest.approx(E.min(), abs=1e-4)


@pytest.mark.parametrize("G", [build_box(2, 3), K4, build_torus(2, 2)])
def test_direct_energy_quadratic_is_conductance(G):
    a, b = 0, G.n_vertices - 1
    assert direct_energy_infimum(G, QUAD, a, b) == pytest.approx(
        effective_conductance(WeightedGraph.unit(G), a, b), abs=1e-9)


# ----------------------------------------------------------------------
# simplex bound


def test_project_simplex():
    x = project_simplex([0.3, 2.0, -1.0])
    np.testing.assert_allclose(x, [0.0, 1.0, 0.0])
    x = project_simplex([0.5, 0.5, 0.5])
    np.testing.assert_allclose(x, [1 / 3] * 3)


def test_simplex_single_level():
    P = SimplexBoundProblem(1, [1.0], [1.0], [np.nan], [np.nan], QUAD, 1.0)
    sol = simplex_energy_bound(P, return_solution=True)
    assert sol.value == pytest.approx(1.0)
    assert sol.p[0] == pytest.approx(1.0)


def test_simplex_quadratic_water_filling():
    # sum_j (m_j^2 t^2 / M_j) x_j^2 on the simplex has value t^2 / sum(M_j / m_j^2)
    M = np.array([4.0, 6.0])
    m = np.array([2.0, 1.5])
    t = 1.7
    P = SimplexBoundProblem(2, M, m, M, m, QUAD, t)
    oracle = t * t / (2 * np.sum(M / m**2))
    sol = simplex_energy_bound(P, return_solution=True)
    assert sol.value == pytest.approx(oracle, rel=1e-8)
    assert np.min(np.r_[sol.p, sol.q]) > 0
    assert sol.spread < 1e-6


def test_simplex_pgd_and_multiplier_agree():
    obj = PolynomialObjective([1.0, 2.0, 0.5], [0.3, 0.1, 2.0], 4)
    a = solve_pgd(obj)
    b = solve_multiplier(obj)
    assert a.value == pytest.approx(b.value, rel=1e-9)
    np.testing.assert_allclose(a.x, b.x, atol=1e-6)


def test_simplex_box_profile_scales_like_inverse_levels():
    vals = []
    for l in range(4, 11):
        prof = analytic_profile(4**l, 2, l=l)
        P = SimplexBoundProblem.from_profiles(prof, prof, QUAD, 1.0)
        vals.append(simplex_energy_bound(P) * l)
    assert max(vals) / min(vals) <= 2.0


def test_corollary_bound():
    a8 = corollary_quadratic_bound(analytic_profile(2**8, 2, l=8), 2)
    a16 = corollary_quadratic_bound(analytic_profile(2**16, 2, l=16), 2)
    assert a8.value / a16.value == pytest.approx(2.0, rel=1e-12)
    b = [corollary_quadratic_bound(analytic_profile(2**l, 3, l=l), 3).value for l in (6, 12, 24)]
    assert max(b) / min(b) < 1.5
    prof = analytic_profile(2**8, 2, l=8)
    P = SimplexBoundProblem.from_profiles(prof, prof, QUAD, 1.0)
    assert simplex_energy_bound(P) >= a8.value - 1e-12
    bad = analytic_profile(16, 2)
    bad.m[:] = 0
    with pytest.raises(ProfileError):
        corollary_quadratic_bound(bad, 2)


def test_sandwich_on_small_graph():
    G = build_box(2, 3)
    a, b = 0, 8
    pa, pb = isoperimetry_profile(G, a), isoperimetry_profile(G, b)
    for U in (QUAD, P4, ABS):
        lo = simplex_energy_bound(SimplexBoundProblem.from_profiles(pa, pb, U))
        assert direct_energy_infimum(G, U, a, b) >= lo - 1e-8


# ----------------------------------------------------------------------
# convexity-gap program and tails


def test_d_eta_t_quadratic_is_conductance():
    G = build_box(2, 4)
    v = G.index_of([2, 3])
    w = np.ones(G.n_edges)
    from gradflux.energy import dirichlet_energy

    C, _ = dirichlet_energy(G, w, {**{int(u): 0.0 for u in G.boundary}, v: 1.0})
    for t in (0.5, 1.0, 2.0):
        assert d_eta_t(G, QUAD, v, t) == pytest.approx(t * t * C, rel=1e-9)


def test_d_eta_t_examples():
    T = build_torus(2, 2)
    assert d_eta_t(T, ABS, T.index_of([2, 2]), 1.0) == 0.0
    # a free centre with k pinned leaves: value k W(t) = k t^4
    k = 3
    star = custom_graph(k + 1, [(0, i) for i in range(1, k + 1)], boundary=range(1, k + 1))
    for t in (0.5, 1.3):
        assert d_eta_t(star, P4, 0, t) == pytest.approx(k * t**4, rel=1e-10)


def test_d_eta_t_vector_eta_matches_point_mass():
    G = build_box(2, 4)
    v = G.index_of([2, 2])
    eta = np.zeros(G.n_vertices)
    eta[v] = 1.0
    eta2 = eta.copy()
    eta2[G.index_of([3, 3])] = 1e-9
    assert d_eta_t(G, QUAD, eta2, 1.0) == pytest.approx(d_eta_t(G, QUAD, v, 1.0), rel=1e-6)


def test_tail_bound_gaussian_oracle():
    B = build_box(2, 3)
    v = B.index_of([2, 2])
    t = np.array([0.25, 0.5, 1.0, 1.5])
    curve = tail_bound(B, QUAD, v, t)
    var = gaussian_variance(B, v)
    assert var == pytest.approx(1 / 8)
    exact = np.array([math.erfc(x / math.sqrt(2 * var)) for x in t])
    assert np.all(exact <= curve.values)
    np.testing.assert_allclose(curve.values, np.exp(-4 * t**2), rtol=1e-9)
    assert np.all(tail_bound(B, ABS, v, t).values == 1.0)
    mc = tail_bound(B, QUAD, v, t, mode="mode-centered")
    np.testing.assert_allclose(mc.values, curve.values**2)
    assert mc.extra["C"] is None


def test_dstar_curves_monotone():
    for p in (2.5, 3.0, 4.0):
        c = dstar_exponent(3, p, [4, 8, 16, 32], l=40)
        assert np.all(np.diff(c.values) > 0)
        slopes = np.diff(np.log(c.values)) / np.diff(np.log(c.t))
        assert np.all(slopes > 0)
    with pytest.raises(ValueError):
        dstar_exponent(2, 4, [4, 8])


def test_dstar_exponent_converges_to_min_p_d():
    # the local slope approaches min(p, d) as t grows
    t = np.geomspace(2.0**6, 2.0**20, 8)
    c = dstar_exponent(3, 4, t, l=80)
    local = np.diff(np.log(c.values)) / np.diff(np.log(t))
    assert abs(local[-1] - 3.0) < abs(local[0] - 3.0)
    assert abs(local[-1] - 3.0) < 0.2


def test_dstar_csv(tmp_path):
    import io

    c = dstar_exponent(3, 4, [4, 8], l=40)
    buf = io.StringIO()
    c.write_csv(buf, ["seed 0"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# seed 0"
    assert lines[1] == "t,value,exponent_fit,residual"
    assert len(lines) == 4


def test_tau_examples():
    assert tau(3, 17.0) == 1.0
    assert tau(2, math.e - 1) == pytest.approx(1.0)
    assert tau(2, math.exp(4) - 1) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        tau(2, 0)


# ----------------------------------------------------------------------
# Gaussian oracle


def test_gaussian_oracle_two_vertices():
    G = custom_graph(2, [(0, 1)])
    assert gaussian_variance(G, 1) == pytest.approx(0.5)
    assert gaussian_variance(G, 0) == 0.0
    assert gaussian_gradient_variance(G, 0) == pytest.approx(0.5)


def test_gaussian_covariance_symmetric_positive():
    T = build_torus(2, 2)
    S = gaussian_covariance(T)
    np.testing.assert_allclose(S, S.T)
    assert np.all(np.linalg.eigvalsh(S[np.ix_(T.free, T.free)]) > 0)
