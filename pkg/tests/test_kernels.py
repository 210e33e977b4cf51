import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pshe import kernels as K


@pytest.fixture(scope="module")
def moll():
    return K.make_mollifier(3)


@pytest.fixture(scope="module")
def vker(moll):
    return K.autocorrelate(moll)


def test_make_mollifier_rejects_low_dim():
    with pytest.raises(ValueError):
        K.make_mollifier(2)
    with pytest.raises(ValueError):
        K.make_mollifier(3, resolution=32)


def test_mollifier_support_boundary(moll):
    assert moll(0.5) == 0.0
    assert moll(0.75) == 0.0
    assert moll(0.49) > 0.0


def test_mollifier_normalization(moll):
    assert abs(moll.volume_integral() - 1.0) < 1e-6


def test_mollifier_scaled_family_normalized(moll):
    # quadrature of phi_eps over R^3 equals 1 for each scale
    for eps in (1.0, 0.5, 0.25):
        val, _ = quad(lambda r: moll.scaled(r, eps) * r**2, 0.0, 0.5 * eps,
                      epsabs=1e-10, limit=200)
        assert abs(4.0 * math.pi * val - 1.0) < 1e-6


@given(st.floats(min_value=0.0, max_value=2.0))
@settings(max_examples=50, deadline=None)
def test_mollifier_nonnegative(r):
    m = K.make_mollifier(3)
    assert m(r) >= 0.0


def test_v_support_and_symmetry(vker):
    assert vker(1.0) == 0.0
    assert vker(1.5) == 0.0
    # radial table: same value for any direction is structural; spot check shape
    assert vker(0.3) > vker(0.6) > 0.0


def test_v0_two_independent_routes(moll, vker):
    # oracle: direct high-resolution quadrature of the squared profile
    direct, _ = quad(lambda r: moll(r) ** 2 * r**2, 0.0, 0.5,
                     epsabs=1e-12, limit=300)
    direct *= 4.0 * math.pi
    assert abs(vker.v0 - direct) < 1e-8 * direct
    # frozen golden value for the standard bump in d = 3
    assert vker.v0 == pytest.approx(3.9516035841911243, rel=1e-6)


@given(st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=50, deadline=None)
def test_v_below_v0(r):
    v = K.autocorrelate(K.make_mollifier(3))
    assert 0.0 <= v(r) <= v.v0 + 1e-12


def test_v_total_mass_is_one(vker):
    # int V = (int phi)^2 = 1
    assert abs(vker.volume_integral() - 1.0) < 1e-5


def test_heat_kernel_value_and_errors():
    assert K.heat_kernel(3, 1.0, np.zeros(3)) == pytest.approx(
        (2.0 * math.pi) ** -1.5, rel=1e-12)
    with pytest.raises(ValueError):
        K.heat_kernel(3, 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        K.heat_kernel(3, -1.0, np.zeros(3))


@pytest.mark.parametrize("d,t", [(3, 1.0), (3, 0.25), (4, 2.0)])
def test_heat_kernel_normalization(d, t):
    area = K.sphere_area(d)
    val, _ = quad(lambda r: K.heat_kernel(d, t, np.array([r] + [0.0] * (d - 1)))
                  * r ** (d - 1), 0.0, 40.0 * math.sqrt(t), epsabs=1e-10, limit=400)
    assert abs(area * val - 1.0) < 1e-6


def test_heat_time_integral_scaling_identity():
    # I(lambda x) = lambda^(2-d) I(x) within 1e-4 relative, quadrature route
    base = K.heat_kernel_time_integral(3, 1.0, quadrature=True)
    for lam in (2.0, 4.0):
        scaled = K.heat_kernel_time_integral(3, lam, quadrature=True)
        assert abs(scaled / (lam ** (-1) * base) - 1.0) < 1e-4


def test_heat_time_integral_shift_matches_quadrature():
    for r, shift in [(1.0, 2.0), (0.5, 1.0), (2.0, 0.0)]:
        cf = K.heat_kernel_time_integral(3, r, shift)
        qd = K.heat_kernel_time_integral(3, r, shift, quadrature=True)
        assert cf == pytest.approx(qd, rel=1e-7)


def test_green_overlap_matches_far_field(vker):
    q = K.green_overlap(vker)
    # beyond the kernel support: exactly the Newton potential of unit mass
    for r in (1.0, 3.0, 8.0, 100.0):
        assert q(r) == pytest.approx(1.0 / (4.0 * math.pi * r), rel=1e-4)


def test_green_overlap_at_zero_against_radial_integral(vker):
    q = K.green_overlap(vker)
    # q(0) = int_0^1 V(r) r dr for d = 3
    oracle, _ = quad(lambda r: vker(r) * r, 0.0, 1.0, epsabs=1e-10, limit=200)
    assert q(0.0) == pytest.approx(oracle, rel=1e-5)


def test_export_radial_csv(tmp_path, vker):
    path = tmp_path / "v.csv"
    K.export_radial_csv(path, vker.table, "V")
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "r,V"
    assert len(rows) == len(vker.table.grid) + 1
    r0, v0 = rows[1].split(",")
    assert float(r0) == 0.0
    assert float(v0) == pytest.approx(vker.v0, rel=1e-9)
