import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gradflux.errors import HypothesisFailed, PremiseNotMet
from gradflux.logconcave import (
    DensityGrid1D,
    LogConcaveDensityND,
    QuadraticForm,
    check_lemma_app_main,
    check_prop21,
    check_quantitative_logconcavity,
    check_second_derivative_tail,
    check_var_via_logconcavity,
    d_curvature,
    density_stats,
    expectation,
    gamma_eta,
    hess_inverse_form,
    load_density,
    marginal_density,
    one_point_convexity,
    prekopa_leindler_check,
    save_density,
    tabulate,
)

GAUSS = LogConcaveDensityND.gaussian(n=2)
QUARTIC = LogConcaveDensityND.quartic(2)
SQUARE = LogConcaveDensityND.uniform_box([0, 0], [1, 1])


def grid(f, lo, hi, n):
    return DensityGrid1D.from_function(f, lo, hi, n)


@pytest.fixture(scope="module")
def g1():
    return grid(lambda s: np.exp(-s * s / 2), -10, 10, 2001)


@pytest.fixture(scope="module")
def unif():
    return grid(np.ones_like, 0, 1, 1001)


@pytest.fixture(scope="module")
def twoexp():
    return grid(lambda s: 0.5 * np.exp(-np.abs(s)), -40, 40, 40001)


# ----------------------------------------------------------------------
# one-dimensional grids


def test_grid_normalized_and_logconcave(g1):
    assert g1.mass() == pytest.approx(1.0, abs=1e-8)
    assert g1.is_log_concave()
    bumpy = grid(lambda s: np.exp(-s * s / 2) * (1.2 + np.cos(3 * s)), -6, 6, 1201)
    assert not bumpy.is_log_concave()


def test_density_stats_examples(g1, unif, twoexp):
    s = density_stats(g1)
    assert s.sup == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-6)
    assert s.variance == pytest.approx(1.0, rel=1e-6)
    assert s.median == pytest.approx(0.0, abs=1e-6)
    s = density_stats(unif)
    assert s.sup == pytest.approx(1.0) and s.variance == pytest.approx(1 / 12, rel=1e-5)
    s = density_stats(twoexp)
    assert s.sup == pytest.approx(0.5, rel=1e-6) and s.variance == pytest.approx(2.0, rel=1e-4)


def test_level_prob_gaussian(g1):
    # Pr(alpha(xi) <= p) = Pr(|xi| >= sqrt(-2 log(p sqrt(2 pi))))
    p = 0.2
    r = math.sqrt(-2 * math.log(p * math.sqrt(2 * math.pi)))
    assert g1.level_prob(p) == pytest.approx(math.erfc(r / math.sqrt(2)), abs=1e-5)


def test_prop21_examples(g1, unif):
    r = check_prop21(unif, p_grid=[0.5])
    assert r["item3"].passed and r["item3"].lhs == 0.0 and r["item3"].rhs == 0.5
    assert check_prop21(g1)["item1"] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-6)
    ex = grid(lambda s: np.exp(-s), 0, 40, 40001)
    r = check_prop21(ex)
    assert r["item1"] == pytest.approx(1.0, rel=1e-4)
    assert r["item3"].passed


def test_second_derivative_tail_examples(g1, unif):
    r = check_second_derivative_tail(g1, 4)
    assert r.passed and r.lhs == 0.0
    quart = grid(lambda s: np.exp(-(s**4)), -4, 4, 8001)
    M = quart.sup()
    r = check_second_derivative_tail(quart, 4)
    # mass of {12 s^2 > (4M)^2}
    edge = 4 * M / math.sqrt(12)
    Z, _ = integrate.quad(lambda s: math.exp(-(s**4)), -np.inf, np.inf)
    tail, _ = integrate.quad(lambda s: math.exp(-(s**4)), edge, np.inf)
    assert r.passed and r.lhs == pytest.approx(2 * tail / Z, abs=5e-3)
    assert check_second_derivative_tail(unif, 8).lhs == 0.0
    with pytest.raises(ValueError):
        check_second_derivative_tail(g1, 3)


def test_var_via_logconcavity_examples(g1, unif, twoexp):
    assert check_var_via_logconcavity(g1, 1, 1 - math.exp(-0.5)) == pytest.approx(
        1 - math.exp(-0.5), rel=1e-4)
    assert check_var_via_logconcavity(unif, 0.25, 0.9) == pytest.approx(
        0.9 / 0.25 / math.sqrt(12), rel=1e-4)
    # at t = 1 the two-sided exponential ties everywhere outside (-1, 1),
    # probability e^{-1} < 1/2; t = 2 gives the premise
    with pytest.raises(PremiseNotMet):
        check_var_via_logconcavity(twoexp, 1, 1 - math.exp(-1))
    val = check_var_via_logconcavity(twoexp, 2, 1 - math.exp(-1))
    assert val == pytest.approx(math.sqrt(2) * (1 - math.exp(-1)) / 2, rel=1e-3)


def test_prekopa_leindler_examples(g1, unif):
    assert prekopa_leindler_check(g1, g1, g1, 0.5).passed
    r = prekopa_leindler_check(unif, unif, unif, 0.5)
    assert r.passed and r.lhs == pytest.approx(r.rhs)
    s = np.linspace(-12, 12, 2401)
    F1 = DensityGrid1D(s[0], s[1] - s[0], np.exp(-((s + 1) ** 2) / 2), normalize=False)
    F2 = DensityGrid1D(s[0], s[1] - s[0], np.exp(-((s - 1) ** 2) / 2), normalize=False)
    F = DensityGrid1D(s[0], s[1] - s[0], np.exp(-(s**2) / 2), normalize=False)
    r = prekopa_leindler_check(F1, F2, F, 0.5)
    assert r.passed and r.lhs == pytest.approx(r.rhs, rel=1e-8)


def test_prekopa_leindler_hypothesis_failure():
    s = np.linspace(-8, 8, 801)
    F1 = DensityGrid1D(s[0], s[1] - s[0], np.exp(-(s**2) / 2), normalize=False)
    narrow = DensityGrid1D(s[0], s[1] - s[0], np.exp(-(s**2) / (2 * 0.81)), normalize=False)
    with pytest.raises(HypothesisFailed) as info:
        prekopa_leindler_check(F1, F1, narrow, 0.5)
    assert info.value.witness is not None


# ----------------------------------------------------------------------
# marginals


def test_marginals():
    a = marginal_density(GAUSS, [1, 0])
    assert a.sup() == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-6)
    assert a.variance() == pytest.approx(1.0, rel=1e-6)
    tri = marginal_density(SQUARE, [1, 1])
    lo, hi = tri.support
    assert hi - lo == pytest.approx(math.sqrt(2), rel=1e-6)
    assert tri.sup() == pytest.approx(math.sqrt(2), rel=1e-4)
    assert tri.variance() == pytest.approx(1 / 12, rel=1e-4)


def test_marginal_of_product_is_factor():
    # compared at the grid nodes, where no interpolation enters
    a = marginal_density(QUARTIC, [1, 0])
    Z, _ = integrate.quad(lambda s: math.exp(-(s**4)), -np.inf, np.inf)
    np.testing.assert_allclose(a.values, np.exp(-(a.s**4)) / Z, atol=1e-6)
    g3 = LogConcaveDensityND.gaussian(n=3)
    a = marginal_density(g3, [0, 0, 1])
    np.testing.assert_allclose(a.values, np.exp(-a.s**2 / 2) / math.sqrt(2 * math.pi), atol=1e-6)


def test_gaussian_marginal_log_second_derivative():
    # -(log alpha)'' equals the conditional mean of 1/<n, H^-1 n>, both 1
    a = marginal_density(GAUSS, [0.6, 0.8])
    s, fpp = a.neg_log_second_diff()
    core = np.abs(s) < 3
    np.testing.assert_allclose(fpp[core], 1.0, atol=1e-4)


# ----------------------------------------------------------------------
# quadratic forms and curvature


def test_hess_inverse_form_examples():
    assert hess_inverse_form(np.eye(2), [0.6, 0.8]) == pytest.approx(1.0)
    assert hess_inverse_form(np.diag([2.0, 0.0]), [1, 0]) == pytest.approx(0.5)
    assert math.isinf(hess_inverse_form(np.diag([2.0, 0.0]), [0, 1]))
    with pytest.raises(ValueError):
        QuadraticForm(np.array([[1.0, 2.0], [0.0, 1.0]]), [1, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hess_inverse_form_random_spd(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3))
    H = A @ A.T + 0.1 * np.eye(3)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    oracle = n @ np.linalg.solve(H, n)
    assert hess_inverse_form(H, n) == pytest.approx(oracle, rel=1e-8)


def test_one_point_examples():
    assert one_point_convexity(GAUSS, [0.3, -0.2], [0.6, 0.8], 0.7) == pytest.approx(0.49, rel=1e-8)
    D4 = LogConcaveDensityND.gaussian(np.diag([1.0, 4.0]))
    g = 1e-3
    assert one_point_convexity(D4, [0, 0], [0, 1], g) / g**2 == pytest.approx(4.0, rel=1e-4)
    assert one_point_convexity(QUARTIC, [1, 1], [1, 0], g) / g**2 == pytest.approx(12.0, rel=1e-3)


def test_d_curvature_examples():
    assert d_curvature(GAUSS, [0.6, 0.8], [0.1, 0.2], 1.3) == pytest.approx(1.3**2 / 2, rel=1e-9)
    lin = LogConcaveDensityND.polynomial(linear=[0.7, -0.3], lo=[0, 0], hi=[1, 1])
    assert d_curvature(lin, [1, 0], [0.5, 0.5], 0.1) == pytest.approx(0.0, abs=1e-12)
    val, xp = d_curvature(QUARTIC, [1, 0], [0, 0], 1.0, return_witness=True)
    assert val == pytest.approx(1.0, rel=1e-8)
    np.testing.assert_allclose(xp, [1.0, 0.0], atol=1e-6)
    # brute force over the slice x+ = (1, y)
    y = np.linspace(-2, 2, 40001)
    assert val == pytest.approx(np.min(1 + y**4), rel=1e-8)


def test_d_curvature_monotone_in_t():
    x = np.array([0.3, -0.4])
    vals = [d_curvature(QUARTIC, [0.6, 0.8], x, t) for t in (0.1, 0.3, 0.6, 1.0, 1.5)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_gamma_eta_examples():
    assert gamma_eta(GAUSS, [1, 0], 0.0, 0.0, 1.0) == 1.0
    assert gamma_eta(GAUSS, [1, 0], 0.5, 0.0, 1.0) == pytest.approx(1.0)
    assert gamma_eta(GAUSS, [1, 0], 0.5 + 1e-6, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_quantitative_logconcavity_examples():
    r = check_quantitative_logconcavity(GAUSS, [1, 0], 0.0, 1.0, 0.5)
    # alpha(+-1)/alpha(0) = e^{-1/2}; right side is e^{-1/2} exactly
    assert r.passed
    assert r.lhs == pytest.approx(math.exp(-0.5), rel=1e-8)
    assert r.rhs == pytest.approx(math.exp(-0.5), rel=1e-8)
    dq = d_curvature(QUARTIC, [1, 0], [0, 0], 1.0)
    assert check_quantitative_logconcavity(QUARTIC, [1, 0], 0.0, 1.0, dq).passed
    assert check_quantitative_logconcavity(SQUARE, [1, 1], 0.9, 0.3, 0.0).passed


def test_lemma_app_main_examples():
    r = check_lemma_app_main(GAUSS, [1, 0], 1.0)
    assert r.passed and r.details["p"] == pytest.approx(1.0)
    assert r.rhs == pytest.approx(1 / (4 * math.sqrt(2)), rel=1e-9)
    r = check_lemma_app_main(GAUSS, [1, 0], 0.5)
    assert r.passed and r.rhs == 0.0
    one = LogConcaveDensityND.polynomial(P=[[1.0]], quartic=[0.25])
    r = check_lemma_app_main(one, [1], 1.0)
    assert r.passed and r.details["p"] == pytest.approx(1.0)


def test_expectation_gaussian_second_moment():
    val, err = expectation(GAUSS, lambda x: x[..., 0] ** 2, eta=[1, 0])
    assert val == pytest.approx(1.0, abs=max(10 * err, 1e-6))


def test_density_file_roundtrip(tmp_path):
    g = tabulate(GAUSS, (41, 41))
    p = tmp_path / "d.txt"
    save_density(p, g)
    assert p.read_text().startswith("# density v1")
    h = load_density(p)
    np.testing.assert_array_equal(h.values, g.values)
    np.testing.assert_allclose(h.lo, g.lo)
