import math

import numpy as np
import pytest

from pshe import limits as L
from pshe import statlab as S

GS = 0.0403  # representative amplitude for structure checks


def test_cov_h_symmetry_and_closed_form():
    x0, x1 = np.zeros(3), np.array([1.0, 0.0, 0.0])
    a = L.cov_H(3, (1.0, x0), (2.0, x1), GS)
    b = L.cov_H(3, (2.0, x1), (1.0, x0), GS)
    assert a == b
    # equal point, t = s = 1: gamma^2 * 2 (4 pi)^{-3/2}
    v = L.cov_H(3, (1.0, x0), (1.0, x0), GS)
    assert v == pytest.approx(GS * 2.0 * (4.0 * math.pi) ** -1.5, rel=1e-10)
    assert v == pytest.approx(GS * 0.0448972, rel=1e-5)


def test_cov_h_zero_time_power_law():
    rs = np.array([1.0, 2.0, 4.0, 8.0])
    vals = [L.cov_H(3, (0.0, np.zeros(3)), (0.0, np.array([r, 0, 0])), GS)
            for r in rs]
    slope, _ = S.loglog_slope(np.column_stack([rs, vals]))
    assert abs(slope + 1.0) < 1e-3


def test_cov_hbar_flat_start_and_symmetry():
    x0, x1 = np.zeros(3), np.array([1.0, 0.0, 0.0])
    assert L.cov_Hbar(3, (0.0, x0), (2.0, x1), GS) == 0.0
    assert L.cov_Hbar(3, (1.0, x0), (0.0, x1), GS) == 0.0
    a = L.cov_Hbar(3, (1.0, x0), (2.0, x1), GS)
    assert a == L.cov_Hbar(3, (2.0, x1), (1.0, x0), GS)
    assert a > 0.0
    # coincident space points: the additive-noise field is distribution valued
    assert L.cov_Hbar(3, (1.0, x0), (1.0, x0), GS) == math.inf


def test_cov_hbar_increasing_in_time():
    x0, x1 = np.zeros(3), np.array([0.5, 0.0, 0.0])
    vals = [L.cov_Hbar(3, (t, x0), (t, x1), GS) for t in (0.5, 1.0, 2.0, 4.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_cov_hbar_lattice_oracle():
    """Additive-noise heat equation on a small lattice reproduces the quadrature.

    Translation and direction averaging over the periodic box gives the
    per-replica covariance estimate at separation 0.5; the field has mean
    zero exactly, so the plain product average estimates the covariance.
    """
    gen = np.random.Generator(np.random.Philox(key=505))
    dx, n, dt, t_end = 0.125, 32, 0.004, 0.5
    steps = int(round(t_end / dt))
    reps = 120
    sep_cells = int(round(0.5 / dx))
    u = np.zeros((reps, n, n, n))
    sig = math.sqrt(dt / dx**3)
    for _ in range(steps):
        lap = sum(np.roll(u, 1, axis=a) + np.roll(u, -1, axis=a) for a in (1, 2, 3))
        lap -= 6.0 * u
        u += 0.5 * lap * dt / dx**2 + math.sqrt(GS) * sig * gen.standard_normal(u.shape)
    per_rep = np.zeros(reps)
    for a in (1, 2, 3):
        per_rep += (u * np.roll(u, sep_cells, axis=a)).mean(axis=(1, 2, 3)) / 3.0
    cov = per_rep.mean()
    se = per_rep.std(ddof=1) / math.sqrt(reps)
    target = L.cov_Hbar(3, (t_end, np.zeros(3)), (t_end, np.array([0.5, 0, 0])), GS)
    assert abs(cov - target) < max(3.0 * se, 0.05 * target)


def test_stationarity_identity_and_mismatch():
    x0, x1 = np.zeros(3), np.array([1.0, 0.0, 0.0])
    base = L.cov_Hst(3, (0.0, x0), (0.0, x1), GS)
    for t in (1.0, 4.0):
        v = L.cov_Hst(3, (t, x0), (t, x1), GS)
        assert abs(v - base) <= 1e-6
    # additivity is an exact construction identity
    t = 1.5
    assert L.cov_Hst(3, (t, x0), (t, x1), GS) == pytest.approx(
        L.cov_H(3, (t, x0), (t, x1), GS) + L.cov_Hbar(3, (t, x0), (t, x1), GS),
        rel=1e-14)
    # mismatched amplitude (amp^2 = gamma^2 / beta^2) breaks stationarity
    wrong = L.cov_H(3, (1.0, x0), (1.0, x1), GS) \
        + L.cov_Hbar(3, (1.0, x0), (1.0, x1), GS / 0.04)
    assert abs(wrong - base) > 1e-3


def test_build_limit_spec_rejects_coincident_for_hbar():
    pts = [(1.0, np.zeros(3)), (2.0, np.zeros(3))]
    with pytest.raises(ValueError):
        L.build_limit_spec("Hbar", 3, pts, GS)
    with pytest.raises(ValueError):
        L.build_limit_spec("nope", 3, pts, GS)


def test_sample_limit_matches_spec_covariance():
    pts = [(1.0, np.zeros(3)), (1.0, np.array([1.0, 0, 0])),
           (2.0, np.zeros(3))]
    spec = L.build_limit_spec("H", 3, pts, GS)
    assert np.allclose(spec.cov, spec.cov.T)
    n = 100000
    s = L.sample_limit(spec, n, seed=21)
    emp = np.cov(s.T)
    for i in range(3):
        for j in range(3):
            se = math.sqrt((spec.cov[i, i] * spec.cov[j, j] + spec.cov[i, j]**2) / n)
            assert abs(emp[i, j] - spec.cov[i, j]) < 5.0 * se
    # deterministic in seed
    assert np.array_equal(s, L.sample_limit(spec, n, seed=21))


def test_sample_limit_single_point_ks():
    spec = L.build_limit_spec("H", 3, [(1.0, np.zeros(3))], GS)
    s = L.sample_limit(spec, 20000, seed=2)[:, 0]
    rep = S.ks_normal(s, 0.0, spec.cov[0, 0])
    assert rep.passed


def test_heat_evolution_identity():
    assert L.heat_evolution_residual(3, 2.0, 1.0, GS) < 1e-4
    assert L.heat_evolution_residual(3, 0.5, 2.0, GS) < 1e-4


def test_gff_prefactor_ratio():
    assert L.gff_prefactor_ratio(3) == pytest.approx(0.25)
