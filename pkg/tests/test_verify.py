import pytest

from gradflux.verify import (
    CheckResult,
    SuiteReport,
    run_suite,
    small_connected_graphs,
    verify_chessboard,
    verify_energy,
    verify_isoperimetry,
    verify_logconcave,
)


def test_report_summary_and_failures():
    rep = SuiteReport("demo", [CheckResult("a", "x", True, 1.0, 2.0),
                               CheckResult("a", "y", False, 3.0, 2.0, witness=[1])])
    assert not rep.passed and len(rep.failures) == 1
    assert rep.summary().startswith("FAIL suite=demo checks=2 failures=1")
    assert "witness=[1]" in rep.failures[0].line()
    assert rep.counts() == {"a": 2}


def test_graph_atlas_counts():
    # connected graphs up to isomorphism on 2, 3, 4 vertices: 1, 2, 6
    assert len(small_connected_graphs(4)) == 9
    with pytest.raises(ValueError):
        small_connected_graphs(8)


def test_small_suites_pass():
    assert verify_logconcave(n_instances=8, seed=1).passed
    assert verify_isoperimetry(boxes=((2, 2),), max_L=2).passed
    assert verify_energy(max_vertices=3, n_pairs=2).passed
    assert verify_chessboard(n_pairs=2, n_samples=16000, n_chains=2).passed


def test_run_suite_unknown():
    with pytest.raises(ValueError):
        run_suite("nope")
