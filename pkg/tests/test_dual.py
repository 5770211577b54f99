"""Forward-mode arithmetic checked against finite differences and identities."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pivoted_tracking import dual
from pivoted_tracking.dual import Dual

finite = st.floats(-10, 10, allow_nan=False)
nonzero = finite.filter(lambda x: abs(x) > 1e-3)


def jet2(v, d1, d2):
    """Nested Dual carrying (v, d1, d2) along a curve."""
    return Dual(Dual(v, d1), Dual(d1, d2))


def unpack2(x):
    return x.val.val, x.val.dot, x.dot.dot


@given(finite, finite, finite, finite)
def test_product_rule(a, da, b, db):
    x = Dual(a, da) * Dual(b, db)
    assert x.val == a * b
    assert x.dot == pytest.approx(da * b + a * db, rel=1e-12, abs=1e-12)


@given(finite, finite, nonzero, finite)
def test_quotient_rule(a, da, b, db):
    x = Dual(a, da) / Dual(b, db)
    assert x.val == a / b
    want = (da * b - a * db) / (b * b)
    assert x.dot == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_quotient_value_bit_exact():
    # the value slot must match plain float division exactly, because the
    # simulator compares dual-path and scalar-path outputs at 0 tolerance
    a, b = 0.1234567891234, 0.987654321987
    assert (Dual(a, 1.0) / Dual(b, 2.0)).val == a / b
    assert (7.0 / Dual(b, 2.0)).val == 7.0 / b


@given(nonzero, finite)
def test_reciprocal(a, da):
    x = dual.d_reciprocal(Dual(a, da))
    assert x.val == 1.0 / a
    assert x.dot == pytest.approx(-da / (a * a), rel=1e-9, abs=1e-9)


def test_scalar_passthrough():
    # every lifted op must accept plain floats unchanged
    assert dual.d_tan(0.3) == math.tan(0.3)
    assert dual.d_sqrt(2.0) == math.sqrt(2.0)
    assert dual.d_abs(-4.0) == 4.0
    assert dual.d_reciprocal(8.0) == 0.125
    assert dual.scalar(5.0) == 5.0
    assert dual.scalar(Dual(Dual(3.0, 1.0), Dual(1.0, 0.0))) == 3.0


def test_sign0_convention():
    assert dual.sign0(0.0) == 0.0
    assert dual.sign0(-0.0) == 0.0
    assert dual.sign0(3e-300) == 1.0
    assert dual.sign0(-2.0) == -1.0


@given(st.floats(-1.4, 1.4), finite, finite)
def test_tan_second_derivative(v, d1, d2):
    t0, t1, t2 = unpack2(dual.d_tan(jet2(v, d1, d2)))
    tv = math.tan(v)
    sec2 = 1.0 + tv * tv
    assert t0 == tv
    assert t1 == pytest.approx(sec2 * d1, rel=1e-12, abs=1e-12)
    # (tan f)'' = sec^2 f * f'' + 2 tan f sec^2 f * (f')^2
    assert t2 == pytest.approx(sec2 * d2 + 2 * tv * sec2 * d1 * d1, rel=1e-9, abs=1e-9)


@given(st.floats(0.01, 50), finite, finite)
def test_sqrt_second_derivative(v, d1, d2):
    r0, r1, r2 = unpack2(dual.d_sqrt(jet2(v, d1, d2)))
    rv = math.sqrt(v)
    assert r0 == rv
    assert r1 == pytest.approx(d1 / (2 * rv), rel=1e-12)
    want2 = d2 / (2 * rv) - d1 * d1 / (4 * v * rv)
    assert r2 == pytest.approx(want2, rel=1e-9, abs=1e-9)


@given(finite, finite, nonzero, finite)
def test_norm2_gradient(x0, dx0, x1, dx1):
    n = dual.d_norm2(Dual(x0, dx0), Dual(x1, dx1))
    mag = math.hypot(x0, x1)
    assert n.val == pytest.approx(mag, rel=1e-14)
    assert n.dot == pytest.approx((x0 * dx0 + x1 * dx1) / mag, rel=1e-9, abs=1e-9)


def test_abs_derivative_at_zero_is_zero():
    x = dual.d_abs(Dual(0.0, 3.0))
    assert x.val == 0.0 and x.dot == 0.0


@given(st.floats(-2, 2))
def test_atan_tan_inverse(v):
    x = dual.d_atan(dual.d_tan(Dual(v * 0.5, 1.0)))
    assert x.val == pytest.approx(v * 0.5, rel=1e-12, abs=1e-12)
    assert x.dot == pytest.approx(1.0, rel=1e-10)


def _fd(f, s, h=1e-6):
    return (f(s + h) - f(s - h)) / (2 * h)


@pytest.mark.parametrize("s", [0.1, 0.35, 0.62, 0.9])
def test_lifted_step_derivative(s):
    got = dual.step(Dual(s, 1.0), 0.0, 1.0)
    assert got.val == dual.step(s, 0.0, 1.0)
    assert got.dot == pytest.approx(_fd(lambda q: dual.step(q, 0.0, 1.0), s), rel=1e-6)


@pytest.mark.parametrize("s", [0.1, 0.35, 0.62, 0.9])
def test_lifted_ramp_chain(s):
    # d(ramp)/ds is the step itself, scaled by the inner rate
    got = dual.ramp(Dual(s, 2.5), 0.0, 1.0)
    assert got.dot == pytest.approx(2.5 * dual.step(s, 0.0, 1.0), rel=1e-12)


def test_lifted_step_second_derivative():
    s = 0.4
    got = dual.step(jet2(s, 1.0, 0.0), 0.0, 1.0)
    fd2 = _fd(lambda q: dual.step_deriv(q, 0.0, 1.0, 1), s)
    assert unpack2(got)[2] == pytest.approx(fd2, rel=1e-6)


def test_constant_like_depth():
    c = dual.constant_like(jet2(1.0, 2.0, 3.0), 7.0)
    assert unpack2(c) == (7.0, 0.0, 0.0)
    assert dual.constant_like(0.5, 7.0) == 7.0


def test_comparisons_use_leading_value():
    assert Dual(1.0, 99.0) < Dual(2.0, -99.0)
    assert Dual(3.0, 0.0) >= 3.0
    assert not (Dual(0.5, 1.0) > 0.5)
