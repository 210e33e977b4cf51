import math

import numpy as np
import pytest
from scipy.integrate import quad

from pshe import kernels as K
from pshe import paths as P


@pytest.fixture(scope="module")
def vker():
    return K.autocorrelate(K.make_mollifier(3))


def test_time_grid_hits_anchors():
    ts = P.graded_time_grid([1.0, 2.5, 16.0], dt0=1e-2, grade=32.0, dt_cap=0.5)
    for a in (1.0, 2.5, 16.0):
        assert np.min(np.abs(ts - a)) == 0.0
    assert np.all(np.diff(ts) > 0)
    assert np.max(np.diff(ts)) <= 0.5 + 1e-12


def test_sample_paths_start_and_determinism():
    e = P.sample_paths(3, 4, 0.01, [1.0], np.array([1.0, -2.0, 0.5]), seed=3)
    assert np.all(e.positions[:, 0, :] == np.array([1.0, -2.0, 0.5]))
    e2 = P.sample_paths(3, 4, 0.01, [1.0], np.array([1.0, -2.0, 0.5]), seed=3)
    assert np.array_equal(e.positions, e2.positions)
    e3 = P.sample_paths(3, 4, 0.01, [1.0], np.array([1.0, -2.0, 0.5]), seed=4)
    assert not np.array_equal(e.positions, e3.positions)


def test_sample_paths_displacement_law():
    n = 10000
    e = P.sample_paths(3, n, 0.02, [4.0], np.zeros(3), seed=8)
    disp = ((e.positions[:, -1, :] - e.starts) ** 2).sum(axis=1)
    se = disp.std() / math.sqrt(n)
    assert abs(disp.mean() - 12.0) < 5.0 * se


def test_sample_paths_rejects_off_grid_horizon():
    with pytest.raises(ValueError):
        P.sample_paths(3, 2, 0.01, [1.005], np.zeros(3), seed=0)
    with pytest.raises(ValueError):
        P.sample_paths(3, 2, 0.01, [], np.zeros(3), seed=0)


def test_overlap_gram_identities(vker):
    e = P.sample_paths(3, 24, 5e-3, [0.5, 1.0], np.zeros(3), seed=12)
    g = P.overlap_gram(e, vker)
    m0, m1 = g.matrices
    assert np.allclose(m0, m0.T) and np.allclose(m1, m1.T)
    assert np.all(m0 >= 0.0)
    assert np.all(m1 >= m0 - 1e-12)          # nondecreasing in horizon
    assert np.allclose(np.diag(m0), 0.5 * vker.v0)
    assert np.allclose(np.diag(m1), 1.0 * vker.v0)
    assert np.all(m1 <= 1.0 * vker.v0 + 1e-9)


def test_overlap_gram_far_starts_vanish(vker):
    # starts 6 sqrt(T) + 1 apart: paths almost surely never meet
    starts = np.zeros((16, 3))
    starts[8:, 0] = 6.0 + 1.0
    e = P.sample_paths(3, 16, 5e-3, [1.0], starts, seed=5)
    g = P.overlap_gram(e, vker)
    assert np.all(g.matrices[0][:8, 8:] == 0.0)


def test_overlap_mean_against_quadrature_oracle(vker):
    # oracle: E int_0^1 V(relative motion) ds by two-level quadrature
    def ev_at(s):
        f = lambda r: vker(r) * r**2 * np.exp(-r**2 / (4 * s)) \
            / (4 * math.pi * s) ** 1.5 * 4 * math.pi
        return quad(f, 0.0, 1.0, epsabs=1e-10, limit=200)[0]
    oracle = quad(lambda s: ev_at(s) if s > 1e-12 else vker.v0, 0.0, 1.0,
                  epsabs=1e-9, limit=200)[0]
    n = 1200
    e = P.sample_paths(3, n, 1e-3, [1.0], np.zeros(3), seed=77)
    g = P.overlap_gram(e, vker)
    m = g.matrices[0].copy()
    np.fill_diagonal(m, 0.0)
    est = m.sum() / (n * (n - 1))
    # U-statistic error is driven by the per-path conditional means
    h = m.sum(axis=1) / (n - 1)
    se = 2.0 * h.std(ddof=1) / math.sqrt(n)
    assert est == pytest.approx(oracle, rel=0.02)
    assert abs(est - oracle) < 4.0 * se + 0.015 * oracle


def test_khasminskii_margin_routes_and_scaling(vker):
    m1 = P.khasminskii_margin(0.2, vker)
    m2 = P.khasminskii_margin_quadrature(0.2, vker)
    assert m1 == pytest.approx(m2, rel=1e-5)
    assert m1 == pytest.approx(0.0205763, rel=1e-4)   # frozen golden, d=3 bump
    assert P.khasminskii_margin(0.4, vker) == pytest.approx(4.0 * m1, rel=1e-12)
    assert P.khasminskii_margin(0.0, vker) == 0.0


def test_admissibility_gate(vker):
    assert P.is_admissible(0.2, vker)
    assert not P.is_admissible(1.5, vker)
    with pytest.raises(ValueError):
        P.exp_functional(np.zeros(3), 1.5, 64.0, 4e-3, 100, 0, vker)


def test_exp_functional_degenerate_and_far(vker):
    r0 = P.exp_functional(np.zeros(3), 0.0, 64.0, 4e-3, 500, 1, vker)
    assert r0.estimate == 1.0 and r0.std_error == 0.0
    far = P.exp_functional(np.array([10.0, 0.0, 0.0]), 0.2, 64.0, 4e-3, 2000, 1, vker)
    assert abs(far.estimate - 1.0) < 1e-3


def test_exp_functional_golden_and_truncation(vker):
    r = P.exp_functional(np.zeros(3), 0.2, 64.0, 4e-3, 20000, 5, vker, tail=True)
    # frozen golden from the long-horizon stability study (s_max 64/128/256)
    assert r.estimate == pytest.approx(1.01024, abs=8e-4)
    assert not r.truncation_flagged
    assert abs(r.truncation_gap) < 3.0 * math.hypot(r.std_error, r.std_error_half)


def test_exp_functional_monotone_in_distance(vker):
    vals = []
    for i, y in enumerate(([0.0, 0, 0], [0.5, 0, 0], [1.5, 0, 0])):
        r = P.exp_functional(np.array(y), 0.2, 64.0, 4e-3, 20000, 9 + i, vker,
                             tail=True)
        vals.append(r)
    for a, b in zip(vals, vals[1:]):
        slack = 3.0 * math.hypot(a.std_error, b.std_error)
        assert b.estimate <= a.estimate + slack


def test_exp_functional_requires_long_horizon(vker):
    with pytest.raises(ValueError):
        P.exp_functional(np.zeros(3), 0.2, 32.0, 4e-3, 100, 0, vker)
