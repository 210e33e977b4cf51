import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import norm

from pshe import statlab as S


def _gen(seed=0):
    return np.random.Generator(np.random.Philox(key=seed))


def test_ks_normal_null_passes():
    x = _gen(1).standard_normal(10000)
    rep = S.ks_normal(x, 0.0, 1.0)
    assert rep.passed
    assert rep.critical == pytest.approx(1.628 / 100.0)


def test_ks_normal_degenerate_fails():
    rep = S.ks_normal(np.zeros(500), 0.0, 1.0)
    assert not rep.passed
    assert rep.statistic == pytest.approx(0.5)


def test_ks_normal_wrong_variance_fails_at_analytic_distance():
    # oracle: sup_x |Phi(x) - Phi(x/2)| at x* where the densities cross
    xstar = math.sqrt(8.0 * math.log(2.0) / 3.0)
    d_true = norm.cdf(xstar) - norm.cdf(xstar / 2.0)
    assert d_true == pytest.approx(0.1614, abs=2e-4)
    x = _gen(2).standard_normal(10000)
    rep = S.ks_normal(x, 0.0, 4.0)
    assert not rep.passed
    assert rep.statistic == pytest.approx(d_true, abs=0.02)


def test_ks_normal_input_validation():
    with pytest.raises(ValueError):
        S.ks_normal(np.zeros(10), 0.0, 1.0)
    with pytest.raises(ValueError):
        S.ks_normal(np.zeros(200), 0.0, 0.0)


def test_ks_two_sample_same_law():
    g = _gen(3)
    rep = S.ks_two_sample(g.standard_normal(3000), g.standard_normal(3000))
    assert rep.passed


def test_ks_uniform():
    rep = S.ks_uniform(_gen(4).uniform(size=5000))
    assert rep.passed
    assert not S.ks_uniform(_gen(4).uniform(size=5000) ** 3).passed


def test_variance_ci_lognormal_oracle():
    # closed-form lognormal variance e^s (e^s - 1) with s = 0.25
    s = 0.25
    target = math.exp(s) * (math.exp(s) - 1.0)
    x = np.exp(_gen(5).standard_normal(10000) * math.sqrt(s))
    v, ci = S.variance_ci(x, seed=5)
    assert ci[0] <= target <= ci[1]


def test_variance_ci_normal_coverage():
    # meta-test: 99% CI covers unit variance in nearly all meta-replicas
    g = _gen(6)
    hits = sum(1 for _ in range(60)
               if S.interval_contains(S.variance_ci(g.standard_normal(400),
                                                    seed=7)[1], 1.0))
    assert hits >= 57


def test_variance_ci_edge_cases():
    v, ci = S.variance_ci(np.ones(100))
    assert v == 0.0 and ci == (0.0, 0.0)
    with pytest.raises(ValueError):
        S.variance_ci(np.ones(10))


def test_loglog_slope_exact_and_errors():
    r = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    slope, ci = S.loglog_slope(np.column_stack([r, 7.0 / r]))
    assert slope == pytest.approx(-1.0, abs=1e-12)
    slope0, _ = S.loglog_slope(np.column_stack([r, np.full(5, 3.0)]))
    assert slope0 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        S.loglog_slope(np.column_stack([r[:3], 7.0 / r[:3]]))
    with pytest.raises(ValueError):
        S.loglog_slope(np.array([[1.0, 1.0], [2.0, -1.0], [3.0, 1.0], [4.0, 1.0]]))


def test_trend_to_zero_examples():
    assert S.trend_to_zero([1.0, 0.5, 0.1], [0.0, 0.05, 0.2]).passed
    assert not S.trend_to_zero([1.0, 2.0, 3.0], [0.1, 0.1, 0.1]).passed
    exact = S.trend_to_zero([1.0, 0.5, 0.0], [0.0, 0.0, 0.0])
    assert exact.passed
    with pytest.raises(ValueError):
        S.trend_to_zero([1.0, 0.5], [0.1, 0.1])


def test_ks_calibration_meta():
    # the 1% test rejects roughly 1% of true-null runs
    g = _gen(8)
    fails = sum(1 - S.ks_normal(g.standard_normal(500), 0.0, 1.0).passed
                for _ in range(300))
    assert fails <= 12     # binomial(300, 0.01): P(X > 12) tiny


def test_reports_json_roundtrip(tmp_path):
    rep = S.ks_normal(_gen(9).standard_normal(200), 0.0, 1.0)
    payload = S.reports_to_json([rep], tmp_path / "r.json")
    import json
    back = json.loads(payload)
    assert back[0]["name"] == "ks_normal"
    assert back[0]["passed"] == rep.passed
    assert S.all_passed([rep]) == rep.passed
