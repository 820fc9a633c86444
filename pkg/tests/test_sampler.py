import io
import math

import numpy as np
import pytest
from scipy import integrate, stats

from gradflux.energy import gaussian_gradient_variance, gaussian_variance
from gradflux.errors import FormatError, InsufficientSamples
from gradflux.lattice import axis_parity_classes, build_box, build_torus, custom_graph
from gradflux.potentials import Potential
from gradflux.sampler import (
    ChainConfig,
    SurfaceState,
    batch_means,
    chessboard_check,
    conditional_density,
    good_edge_component,
    good_edges,
    gradient_event_probability,
    key_lemma_frequency,
    load_checkpoint,
    mean_estimate,
    read_stream_binary,
    read_stream_csv,
    run_chains,
    sample_conditional,
    save_checkpoint,
    tail_estimate,
    variance_estimate,
)

QUAD = Potential.quadratic()
P4 = Potential.power(4)
ABS = Potential.absolute()


def rng(seed=0):
    return np.random.default_rng(seed)


def star(k):
    """Centre 0 joined to ``k`` pinned leaves at value 0."""
    return custom_graph(k + 1, [(0, i) for i in range(1, k + 1)], boundary=range(1, k + 1))


@pytest.fixture(scope="module")
def pair_stream():
    G = custom_graph(2, [(0, 1)])
    return run_chains(G, QUAD, ChainConfig(n_chains=4, n_samples=25000, burn_in=10, seed=1))


@pytest.fixture(scope="module")
def torus_stream():
    T = build_torus(2, 2)
    return T, run_chains(T, QUAD, ChainConfig(n_chains=4, n_samples=25000, seed=3))


# ----------------------------------------------------------------------
# conditional laws

@pytest.mark.parametrize("k", [1, 2, 4])
def test_gaussian_conditional_moments(k):
    G = star(k)
    dens = conditional_density(G, QUAD, np.zeros(k + 1), 0)
    x = sample_conditional(dens, rng(k), size=200000)
    # exp(-k s^2) has mean 0 and variance 1 / (2k)
    assert abs(x.mean()) < 5 * math.sqrt(1 / (2 * k) / x.size)
    assert x.var() == pytest.approx(1 / (2 * k), rel=0.02)


def test_conditional_mode_and_normalizer():
    G = star(3)
    phi = np.array([0.0, -1.0, 0.5, 2.0])
    dens = conditional_density(G, QUAD, phi, 0)
    assert dens.mode() == pytest.approx(np.mean(phi[1:]), abs=1e-9)
    oracle, _ = integrate.quad(lambda s: math.exp(-dens.h(s)), -20, 20, points=[0.5])
    assert dens.normalizer(shift=0.0) == pytest.approx(oracle, rel=1e-8)


def test_abs_conditional_flat_between_neighbors():
    # |s| + |s - 1| is constant on [0, 1]: the law there is uniform
    G = custom_graph(3, [(0, 1), (1, 2)], boundary=(0, 2))
    phi = np.array([0.0, 0.0, 1.0])
    dens = conditional_density(G, ABS, phi, 1)
    assert dens.acceptance_rate() >= 0.5
    x = sample_conditional(dens, rng(2), size=100000)
    inside = x[(x >= 0) & (x <= 1)]
    z = dens.normalizer(shift=0.0)
    assert inside.size / x.size == pytest.approx(math.exp(-1.0) / z, abs=0.01)
    assert stats.kstest(inside, "uniform").pvalue > 1e-3


def test_quartic_conditional_ks_against_cdf():
    dens = conditional_density(star(1), P4, np.zeros(2), 0)
    x = sample_conditional(dens, rng(4), size=100000)
    grid = np.sort(x)
    F = dens.cdf(grid)
    emp = np.arange(1, grid.size + 1) / grid.size
    assert np.max(np.abs(emp - F)) < 0.01


def test_acceptance_rate_matches_counts():
    dens = conditional_density(star(2), P4, np.array([0.0, -0.3, 1.7]), 0)
    x, n = sample_conditional(dens, rng(5), size=50000, return_proposals=True)
    assert x.size / n == pytest.approx(dens.acceptance_rate(), abs=0.01)


def test_conditional_rejects_pinned():
    G = star(2)
    with pytest.raises(ValueError):
        conditional_density(G, QUAD, np.zeros(3), 1)


# ----------------------------------------------------------------------
# chains

def test_pair_is_gaussian(pair_stream):
    # one free vertex tied to a pinned one: N(0, 1/2)
    x = pair_stream.values(1).ravel()
    assert stats.kstest(x, "norm", args=(0, math.sqrt(0.5))).statistic < 0.01
    assert np.all(pair_stream.values(0) == 0)


def test_torus_quartic_mean_centered():
    T = build_torus(2, 2)
    v = T.index_of([2, 2])
    s = run_chains(T, P4, ChainConfig(n_chains=4, n_samples=8000, seed=7, track=[v]))
    est = mean_estimate(s, v, min_batch=200)
    assert abs(est.value) <= 3 * est.se


def test_box_variance_matches_gaussian():
    B = build_box(2, 3)
    c = B.index_of([2, 2])
    s = run_chains(B, QUAD, ChainConfig(n_chains=4, n_samples=25000, seed=1, track=[c]))
    est = variance_estimate(s, c)
    assert gaussian_variance(B, c) == pytest.approx(1 / 8)
    assert est.contains(1 / 8)


def test_same_seed_same_samples():
    T = build_torus(2, 2)
    cfg = ChainConfig(n_chains=2, n_samples=300, seed=11)
    a = run_chains(T, P4, cfg)
    b = run_chains(T, P4, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = run_chains(T, P4, ChainConfig(n_chains=2, n_samples=300, seed=12))
    assert not np.array_equal(a.samples, c.samples)


def test_workers_do_not_change_samples():
    T = build_torus(2, 2)
    a = run_chains(T, P4, ChainConfig(n_chains=3, n_samples=200, seed=2, workers=1))
    b = run_chains(T, P4, ChainConfig(n_chains=3, n_samples=200, seed=2, workers=3))
    np.testing.assert_array_equal(a.samples, b.samples)


def test_thinning_keeps_every_kth_sweep():
    T = build_torus(2, 2)
    full = run_chains(T, QUAD, ChainConfig(n_chains=1, n_samples=30, burn_in=5, seed=4))
    thin = run_chains(T, QUAD, ChainConfig(n_chains=1, n_samples=10, burn_in=5, thin=3, seed=4))
    np.testing.assert_array_equal(thin.samples[0], full.samples[0, 2::3])
    np.testing.assert_array_equal(thin.sweeps, full.sweeps[2::3])


def test_pinned_values_never_move():
    B = build_box(2, 4)
    s = run_chains(B, P4, ChainConfig(n_chains=2, n_samples=200, seed=1))
    conf = s.configurations()
    assert np.all(conf[:, :, B.boundary] == B.boundary_values)
    assert all(st.is_valid(P4) for st in s.states)


def test_random_scan_runs():
    T = build_torus(2, 2)
    s = run_chains(T, QUAD, ChainConfig(n_chains=1, n_samples=100, scan="random", seed=1))
    assert np.all(np.isfinite(s.samples))


def test_state_advance_counts_sweeps():
    T = build_torus(2, 2)
    st = SurfaceState.initial(T, rng(1))
    st.advance(P4, 25)
    assert st.sweep == 25 and st.is_valid(P4)
    with pytest.raises(ValueError):
        SurfaceState(T, np.ones(T.n_vertices))


def test_csv_roundtrip():
    T = build_torus(2, 2)
    s = run_chains(T, P4, ChainConfig(n_chains=2, n_samples=50, seed=1, track=[1, 2, 3]))
    buf = io.StringIO()
    s.write_csv(buf)
    buf.seek(0)
    headers, chain, sweep, vertex, value = read_stream_csv(buf)
    assert headers[0].startswith("#")
    assert value.size == 2 * 50 * 3
    np.testing.assert_array_equal(value.reshape(2, 50, 3), s.samples)
    np.testing.assert_array_equal(vertex[:3], [1, 2, 3])
    np.testing.assert_array_equal(sweep.reshape(2, 50, 3)[0, :, 0], s.sweeps)
    with pytest.raises(FormatError):
        read_stream_csv(io.StringIO("a,b\n1,2\n"))


def test_binary_roundtrip():
    T = build_torus(2, 2)
    s = run_chains(T, P4, ChainConfig(n_chains=2, n_samples=40, seed=1))
    buf = io.BytesIO()
    s.write_binary(buf)
    buf.seek(0)
    headers, track, sweeps, samples = read_stream_binary(buf)
    np.testing.assert_array_equal(samples, s.samples)
    np.testing.assert_array_equal(track, s.track)
    np.testing.assert_array_equal(sweeps, s.sweeps)
    with pytest.raises(FormatError):
        read_stream_binary(io.BytesIO(buf.getvalue()[:-8]))


def test_checkpoint_resume_matches_uninterrupted():
    T = build_torus(2, 2)
    whole = SurfaceState.initial(T, rng(9)).advance(P4, 40)
    part = SurfaceState.initial(T, rng(9)).advance(P4, 15)
    buf = io.BytesIO()
    save_checkpoint(part, buf)
    buf.seek(0)
    back = load_checkpoint(buf, T)
    assert back.sweep == 15
    back.advance(P4, 25)
    np.testing.assert_array_equal(back.phi, whole.phi)
    buf.seek(0)
    with pytest.raises(FormatError):
        load_checkpoint(buf, build_torus(2, 3))


# ----------------------------------------------------------------------
# estimators

def test_batch_means_iid_se():
    x = rng(3).normal(size=(4, 25000))
    est = batch_means(x)
    assert abs(est.value) < 4 * est.se
    assert est.se == pytest.approx(1 / math.sqrt(x.size), rel=0.35)
    assert est.n_batches >= 16


def test_batch_means_insufficient():
    with pytest.raises(InsufficientSamples):
        batch_means(np.zeros((1, 500)))


def test_pinned_variance_is_zero(pair_stream):
    est = variance_estimate(pair_stream, 0)
    assert est.value == 0.0 and est.se == 0.0


def test_tail_estimates(pair_stream):
    # at two standard deviations the normal tail is 0.0455
    t0, t2 = tail_estimate(pair_stream, 1, [0.0, 2 * math.sqrt(0.5)])
    assert t0.value == 1.0
    assert t2.contains(2 * stats.norm.sf(2.0))


def test_gradient_event_trivial_cases(torus_stream):
    T, s = torus_stream
    assert gradient_event_probability(s, [], [(0, 0.1)]).value == 1.0
    assert gradient_event_probability(s, range(T.n_edges), [(0, np.inf)]).value == 1.0


def test_gradient_event_matches_gaussian(torus_stream):
    T, s = torus_stream
    e = 0
    sd = math.sqrt(gaussian_gradient_variance(T, e))
    oracle = 2 * stats.norm.cdf(0.5 / sd) - 1
    est = gradient_event_probability(s, [e], [(0, 0.5)])
    assert est.contains(oracle)


def test_chessboard_class_is_equality(torus_stream):
    T, s = torus_stream
    c = axis_parity_classes(T)[0]
    rep = chessboard_check(s, T, [(1, np.inf)], c.edges)
    assert rep.exponent == 1.0
    assert rep.lhs.value == rep.rhs
    assert rep.passed


@pytest.mark.parametrize("n_edges", [1, 4])
def test_chessboard_subsets_pass(torus_stream, n_edges):
    T, s = torus_stream
    c = axis_parity_classes(T)[1]
    rep = chessboard_check(s, T, [(0.5, np.inf)], c.edges[:n_edges])
    assert rep.exponent == pytest.approx(n_edges / c.edges.size)
    assert rep.passed


def test_chessboard_rejects_mixed_classes(torus_stream):
    T, s = torus_stream
    a, b = axis_parity_classes(T)[:2]
    with pytest.raises(ValueError):
        chessboard_check(s, T, [(0, 1)], [a.edges[0], b.edges[0]])
    with pytest.raises(ValueError):
        chessboard_check(s, T, [(0, 1)], [])


def test_good_edges_quadratic():
    T = build_torus(2, 2)
    phi = rng(1).normal(size=T.n_vertices)
    phi[T.origin] = 0.0
    assert good_edges(T, phi, QUAD, 1.0).size == T.n_edges
    assert good_edges(T, phi, QUAD, 3.0).size == 0


def test_good_edges_quartic_drop_flat_edges():
    G = custom_graph(3, [(0, 1), (1, 2)])
    phi = np.array([0.0, 0.0, 2.0])
    e, comp = good_edge_component(G, phi, P4, 1.0, 2)
    assert list(e) == [1]
    assert sorted(comp.vertices) == [1, 2]


def test_key_lemma_frequency_extremes():
    T = build_torus(2, 2)
    v = T.index_of([2, 2])
    s = run_chains(T, QUAD, ChainConfig(n_chains=2, n_samples=1600, seed=3))
    # every edge is good for delta0 <= 2 and none above
    hit = key_lemma_frequency(s, 1.0, 1e-9, v, min_batch=100)
    miss = key_lemma_frequency(s, 3.0, 1e-9, v, min_batch=100)
    assert hit.value == 1.0 and miss.value == 0.0
