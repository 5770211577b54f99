"""The validation harness itself: recorder semantics, seed determinism,
and a clean pass of every suite."""

import numpy as np
import pytest

from pivoted_tracking import validate


def test_failure_formatting():
    f = validate.Failure("geometry", "underestimate", "3 violation(s); minimal: sigma=1.0")
    assert str(f) == "geometry/underestimate: 3 violation(s); minimal: sigma=1.0"


def test_recorder_keeps_minimal_counterexample():
    rec = validate.Recorder("demo")
    rec.record("check_a", [(3.0, "big case"), (0.5, "small case"), (1.0, "mid case")])
    assert len(rec.failures) == 1
    assert "minimal: small case" in rec.failures[0].detail
    assert "3 violation(s)" in rec.failures[0].detail
    rec.record("check_b", [])
    assert rec.checks == 2 and len(rec.failures) == 1


def test_recorder_ok():
    rec = validate.Recorder("demo")
    rec.ok("fine", True)
    rec.ok("broken", False, "reason")
    assert [f.check for f in rec.failures] == ["broken"]
    assert rec.checks == 2


def test_log_uniform_range():
    rng = np.random.default_rng(0)
    v = validate._log_uniform(rng, 0.1, 10.0, 1000)
    assert v.min() >= 0.1 and v.max() <= 10.0
    # actually log-spaced: mass below 1 is comparable to mass above
    assert 0.3 < np.mean(v < 1.0) < 0.7


@pytest.mark.parametrize("seed", [0, 7])
def test_all_suites_pass(seed, capsys, warm_engine):
    failures = validate.run_suites("all", seed=seed)
    out = capsys.readouterr().out
    assert failures == [], out
    for name in ("shaping", "geometry", "inner_loop", "outer_loop", "certificates"):
        assert f"suite {name}: ok" in out


def test_suites_deterministic_per_seed():
    a = validate.suite_shaping(np.random.default_rng(42))
    b = validate.suite_shaping(np.random.default_rng(42))
    assert a.checks == b.checks
    assert [str(f) for f in a.failures] == [str(f) for f in b.failures]
