"""Smooth C-infinity step and ramp functions.

The whole controller is built from one family of compactly-supported
smooth transitions: a bump `exp(-1/s)`, the normalized step built from
it, affine-rescaled steps, and the integral ramp. Everything here is a
pure function of scalars; arrays go through numpy ufunc broadcasting
only where noted.
"""

from __future__ import annotations

import math

import numpy as np

# Arguments closer to the support endpoints than this are snapped to the
# flat jet. exp(-1/s) underflows to 0.0 well before s = 1e-3, so the snap
# is exact in double precision; it exists to keep 1/s powers finite.
_JET_GUARD = 1e-3

# Fixed-order Gauss-Legendre rule for the ramp integral. Order 64 beats
# adaptive quadrature to ~1e-12 absolute on this integrand (checked in
# tests against scipy.integrate.quad) and is deterministic.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)

_ORDER_RANGE = (1, 2, 3, 4)


def bump(s: float) -> float:
    """exp(-1/s) for s > 0, identically 0 for s <= 0."""
    if s <= 0.0 or s < 1e-300:  # second clause: keep 1/s from overflowing
        return 0.0
    inv = 1.0 / s
    if inv > 745.0:  # exp underflow; the true value is a strict 0.0 in fp
        return 0.0
    return math.exp(-inv)


def _bump_jet(s: float) -> tuple[float, float, float, float, float]:
    # Value and first four derivatives of exp(-1/s), s > 0.
    # d/ds exp(-1/s) = exp(-1/s)/s^2 and so on; the polynomial parts below
    # are exact.
    w = bump(s)
    if w == 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    i1 = 1.0 / s
    i2 = i1 * i1
    i3 = i2 * i1
    i4 = i2 * i2
    i5 = i4 * i1
    i6 = i3 * i3
    i7 = i6 * i1
    i8 = i4 * i4
    return (
        w,
        w * i2,
        w * (i4 - 2.0 * i3),
        w * (i6 - 6.0 * i5 + 6.0 * i4),
        w * (i8 - 12.0 * i7 + 36.0 * i6 - 24.0 * i5),
    )


def smooth_step01(u: float) -> float:
    """The normalized step: 0 for u <= 0, 1 for u >= 1, strictly increasing between."""
    a = bump(u)
    if a == 0.0:
        return 0.0
    b = bump(1.0 - u)
    if b == 0.0:
        return 1.0
    return a / (a + b)


def smooth_step01_jet(u: float) -> tuple[float, float, float, float, float]:
    """Value and derivatives 1..4 of the normalized step at u.

    Computed by Taylor-series division of N(u) = bump(u) by
    D(u) = bump(u) + bump(1-u); the quotient coefficients give the
    derivatives exactly (no finite differencing).
    """
    if u <= _JET_GUARD:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    if u >= 1.0 - _JET_GUARD:
        return 1.0, 0.0, 0.0, 0.0, 0.0
    nj = _bump_jet(u)
    bj = _bump_jet(1.0 - u)
    # Taylor coefficients; bump(1-u) derivatives pick up (-1)^k.
    fact = (1.0, 1.0, 2.0, 6.0, 24.0)
    n = [nj[k] / fact[k] for k in range(5)]
    d = [n[k] + ((-1.0) ** k) * bj[k] / fact[k] for k in range(5)]
    q = [0.0] * 5
    q[0] = n[0] / d[0]
    for k in range(1, 5):
        acc = n[k]
        for j in range(k):
            acc -= q[j] * d[k - j]
        q[k] = acc / d[0]
    return q[0], q[1], 2.0 * q[2], 6.0 * q[3], 24.0 * q[4]


def _check_params(s0: float, s1: float) -> None:
    if s0 == s1:
        raise ValueError(f"step parameters must differ, got s0 = s1 = {s0}")


def smooth_step(s: float, s0: float, s1: float) -> float:
    """Smooth step that is 0 at s0 and 1 at s1 (either orientation)."""
    _check_params(s0, s1)
    return smooth_step01((s - s0) / (s1 - s0))


def smooth_step_deriv(s: float, s0: float, s1: float, order: int = 1) -> float:
    """Exact analytic d^order/ds^order of smooth_step, order in 1..4."""
    _check_params(s0, s1)
    if order not in _ORDER_RANGE:
        raise ValueError(f"derivative order must be in {_ORDER_RANGE}, got {order}")
    scale = 1.0 / (s1 - s0)
    jet = smooth_step01_jet((s - s0) * scale)
    return jet[order] * scale**order


def smooth_ramp(s: float, s0: float, s1: float) -> float:
    """Integral of smooth_step from s0 to s; requires s0 < s1.

    0 for s <= s0, and s - (s0+s1)/2 for s >= s1. On the transition the
    integral has no closed form and is evaluated with the fixed
    Gauss-Legendre rule.
    """
    if s0 >= s1:
        raise ValueError(f"ramp requires s0 < s1, got ({s0}, {s1})")
    if s <= s0:
        return 0.0
    if s >= s1:
        return s - 0.5 * (s0 + s1)
    width = s1 - s0
    u = (s - s0) / width
    # integral_0^u of the normalized step, rescaled by the window width
    half = 0.5 * u
    acc = 0.0
    for x, w in zip(_GL_NODES, _GL_WEIGHTS):
        acc += w * smooth_step01(half * (x + 1.0))
    return width * half * acc
