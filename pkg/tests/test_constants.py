import math

import numpy as np
import pytest

from pshe import constants as C
from pshe import kernels as K


@pytest.fixture(scope="module")
def vker():
    return K.autocorrelate(K.make_mollifier(3))


def test_c2_closed_forms():
    assert C.c2_closed_form(3) == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-12)
    assert C.c2_closed_form(4) == pytest.approx(1.0, rel=1e-12)
    assert C.c2_closed_form(5) == pytest.approx(0.7522527780636751, rel=1e-12)
    with pytest.raises(ValueError):
        C.c2_closed_form(2)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_c2_mc_agrees_with_closed_form(d):
    cf, mc, se = C.c2(d, 400_000, seed=d)
    # d = 4 has infinite summand variance; the sample se is finite-sample only
    assert abs(mc - cf) < 4.0 * max(se, 1e-3)


def test_beta_zero_degeneracy(vker):
    assert C.gamma_sq(0.0, vker, 16, 0) == (0.0, 0.0)
    assert C.c1(0.0, vker, 16, 0) == (0.0, 0.0)
    a, b = C.c0_two_forms(0.0, vker, 16, 0)
    assert a == (0.0, 0.0) and b == (0.0, 0.0)


def test_gamma_sq_lower_bound(vker):
    # gamma^2 >= beta^2 int V since the inner expectation is >= 1
    for beta in (0.1, 0.2):
        gs, se = C.gamma_sq(beta, vker, n_per_node=1024, seed=1, s_max=48.0)
        assert gs + 3 * se >= beta**2 * vker.volume_integral()
        assert gs > 0


def test_gamma_sq_golden(vker):
    # frozen from the doubled-budget stability study
    gs, se = C.gamma_sq(0.2, vker, n_per_node=4096, seed=0)
    assert gs == pytest.approx(0.040298, abs=6e-5)


def test_c0_forms_agree(vker):
    (a, a_se), (b, b_se) = C.c0_two_forms(0.2, vker, n_per_node=4096, seed=0)
    assert abs(a - b) <= 3.0 * math.hypot(a_se, b_se)
    assert a == pytest.approx(0.000905, abs=1.5e-5)


def test_c1_monotone_in_beta(vker):
    vals = []
    for i, beta in enumerate((0.1, 0.15, 0.2)):
        est, se = C.c1(beta, vker, n_samples=8192, seed=50 + i)
        assert est > -3 * se
        vals.append((est, se))
    for (lo, lo_se), (hi, hi_se) in zip(vals, vals[1:]):
        assert hi >= lo - 3.0 * math.hypot(lo_se, hi_se)


def test_c1_golden(vker):
    est, se = C.c1(0.2, vker, n_samples=32768, seed=2)
    assert est == pytest.approx(0.00320, abs=3e-4)


def test_inadmissible_beta_rejected(vker):
    with pytest.raises(ValueError):
        C.gamma_sq(5.0, vker, 128, 0)
    with pytest.raises(ValueError):
        C.c1(5.0, vker, 128, 0)


def test_table_identities(vker):
    tab = C.build_constants_table(0.2, vker, seed=0, n_per_node=512,
                                  n_c1=2048, n_c2=50_000)
    assert tab.gamma_sq == tab.beta**2 * tab.gbar_sq
    assert tab.c0_a == pytest.approx(tab.gamma_sq * (4 * math.pi) ** -1.5,
                                     rel=1e-14)
    assert tab.g_limit(1.0) == 0.0
    assert tab.g_limit(math.inf) == pytest.approx(2.0 * tab.c0_a, rel=1e-12)
    # the pointwise variance identity is the same number at t = 1
    assert tab.pointwise_clt_variance(1.0) == pytest.approx(
        2.0 * tab.c0_a, rel=1e-14)
    assert tab.admissible and tab.khasminskii_margin < 0.5


def test_table_serialization(tmp_path, vker):
    tab = C.build_constants_table(0.2, vker, seed=3, n_per_node=256,
                                  n_c1=1024, n_c2=20_000)
    import json
    payload = json.loads(tab.to_json(tmp_path / "c.json"))
    assert payload["beta"] == 0.2
    tab.to_csv(tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "name,value"
    assert any(r.startswith("gamma_sq,") for r in rows)


def test_reproducibility(vker):
    a = C.gamma_sq(0.2, vker, n_per_node=512, seed=7)
    b = C.gamma_sq(0.2, vker, n_per_node=512, seed=7)
    assert a == b
