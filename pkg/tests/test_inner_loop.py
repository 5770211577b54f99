"""Attitude-loop oracles.

The load-bearing facts checked independently here:
  * the distance bound mu and its inverse are a round-trip pair, with the
    affine tail 4 v + 2 delta_a entered exactly at v = delta_a / 2;
  * below the switching floor every eta-dependent gate is closed, so the
    controls are exactly invariant under re-anchoring (this is why the
    boundary rule produces zero control residual);
  * the rate setpoint's damping branch has a closed form that can be
    recomputed by hand.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivoted_tracking import geometry, inner_loop
from pivoted_tracking.geometry import MrpCoordinate
from pivoted_tracking.inner_loop import (
    ActuationTarget,
    ControllerParams,
    InnerState,
    PivotState,
)

PARAMS = ControllerParams()

# brentq on the defining equation, frozen
MU_AT_0005 = 0.06912724586544532

# regression pins for one nontrivial probe state (gates open, finite half-width)
PROBE_WS = -4.01741387350386
PROBE_WS_DOT = -5.221284218444224
PROBE_U2 = -231.57654554199218
PROBE_VA = 0.8837101254264653
PROBE_ETA_RATE = 0.13570186906969137


def _target(a, ad=(0.0, 0.0), add=(0.0, 0.0)):
    return ActuationTarget(
        a_star=np.asarray(a, dtype=float),
        a_star_dot=np.asarray(ad, dtype=float),
        a_star_ddot=np.asarray(add, dtype=float),
    )


def _probe():
    tgt = _target([1.2, 9.5], [0.3, -0.4], [0.05, 0.02])
    eta = MrpCoordinate(0.11)
    piv = PivotState(lam=np.array([0.1, 0.9949874371066199]), omega=0.5)
    return tgt, eta, InnerState(pivot=piv, eta=eta)


def test_default_params_frozen():
    p = PARAMS
    assert p.r == pytest.approx(2 * math.pi / 10, rel=1e-15)
    assert (p.a0, p.a1, p.rho) == (0.02, 0.03, 0.2)
    assert (p.delta_a, p.delta_eta_dot) == (0.025, 0.01)
    assert (p.k_a, p.k_eta, p.p_omega, p.k_omega) == (5.0, 5.0, 5.0, 100.0)
    assert p.switching_floor == 0.02  # min(r / 2 pi, a0) with r / 2 pi = 0.1
    assert p.decay_rate == 5.0


def test_params_validation():
    with pytest.raises(ValueError):
        ControllerParams(a0=0.03, a1=0.02)
    with pytest.raises(ValueError):
        ControllerParams(rho=1.0)
    with pytest.raises(ValueError):
        ControllerParams(k_omega=0.0)


def test_thrust_command():
    assert inner_loop.thrust_command(_target([3.0, 4.0])) == 5.0
    assert inner_loop.thrust_command(_target([0.0, 0.0])) == 0.0


# -- distance bound -------------------------------------------------------------


def test_distance_bound_affine_tail_exact():
    # at and above v = delta_a / 2 the bound is 4 v + 2 delta_a in closed form
    p = PARAMS
    assert inner_loop.set_distance_bound(0.0125, p) == 0.1
    assert inner_loop.set_distance_bound(0.5, p) == 4 * 0.5 + 2 * p.delta_a
    assert inner_loop.set_distance_bound(0.0, p) == 0.0
    assert inner_loop.set_distance_bound(-1.0, p) == 0.0


def test_distance_bound_root_branch_frozen():
    assert inner_loop.set_distance_bound(0.005, PARAMS) == pytest.approx(MU_AT_0005, rel=1e-12)


@given(st.floats(1e-6, 0.012))
def test_distance_bound_solves_defining_equation(v):
    d = inner_loop.set_distance_bound(v, PARAMS)
    assert inner_loop.set_distance_bound_inverse(d, PARAMS) == pytest.approx(v, rel=1e-8, abs=1e-14)


def test_distance_bound_continuous_at_branch_point():
    p = PARAMS
    v = 0.5 * p.delta_a
    below = inner_loop.set_distance_bound(v * (1 - 1e-12), p)
    at = inner_loop.set_distance_bound(v, p)
    assert below == pytest.approx(at, rel=1e-9)


@given(st.floats(0, 0.05), st.floats(0, 0.05))
def test_distance_bound_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert inner_loop.set_distance_bound(lo, PARAMS) <= inner_loop.set_distance_bound(hi, PARAMS) + 1e-15


# -- rate setpoint --------------------------------------------------------------


def test_damping_branch_closed_form():
    # gates closed (|eta| well inside the half-width): the setpoint is the
    # bare damping term -4 k_eta eta / (1 + eta^2), hand-computable
    tgt = _target([0.0, 9.81])
    eta = MrpCoordinate(0.001)
    ws = inner_loop.target_angular_rate(tgt, eta, PARAMS)
    want = -4.0 * PARAMS.k_eta * 0.001 / (1.0 + 0.001**2)
    assert ws == pytest.approx(want, rel=1e-15)


def test_damping_gate_closed_at_tiny_thrust():
    # below a0 the thrust gate is exactly zero, so the setpoint vanishes
    tgt = _target([0.0, 0.015])
    assert inner_loop.target_angular_rate(tgt, MrpCoordinate(0.8), PARAMS) == 0.0


def test_rate_probe_frozen():
    tgt, eta, state = _probe()
    assert inner_loop.target_angular_rate(tgt, eta, PARAMS) == pytest.approx(PROBE_WS, rel=1e-13)
    ws, ws_dot = inner_loop.target_angular_rate_jet(tgt, eta, state.pivot.omega, PARAMS)
    assert ws == pytest.approx(PROBE_WS, rel=1e-13)
    assert ws_dot == pytest.approx(PROBE_WS_DOT, rel=1e-12)
    assert inner_loop.pivot_accel_command(state, tgt, PARAMS) == pytest.approx(PROBE_U2, rel=1e-12)
    assert inner_loop.attitude_lyapunov(tgt, eta, PARAMS) == pytest.approx(PROBE_VA, rel=1e-13)
    assert inner_loop.mrp_rate(state, tgt) == pytest.approx(PROBE_ETA_RATE, rel=1e-13)


@settings(max_examples=200)
@given(
    st.floats(-2.0, 2.0),
    st.floats(0.5, 20.0),
    st.floats(-math.pi, math.pi),
    st.floats(-5.0, 5.0),
    st.floats(-5.0, 5.0),
    st.floats(-3.0, 3.0),
)
def test_jet_value_matches_scalar_path(ev, n, ang, adx, ady, omega):
    # the jet's value slot must reproduce the scalar setpoint to rounding;
    # divergence here would mean the derivative is of a different function
    tgt = _target([n * math.cos(ang), n * math.sin(ang)], [adx, ady])
    eta = MrpCoordinate(ev)
    ws = inner_loop.target_angular_rate(tgt, eta, PARAMS)
    ws_jet, _ = inner_loop.target_angular_rate_jet(tgt, eta, omega, PARAMS)
    assert ws_jet == pytest.approx(ws, rel=1e-12, abs=1e-12)


def test_rate_jet_time_derivative_by_finite_differences():
    # propagate eta with its own closed-loop rate and the target along a
    # straight-line jet; the reported derivative must match central FD
    p = PARAMS
    a = np.array([1.2, 9.5])
    ad = np.array([0.3, -0.4])
    add = np.array([0.05, 0.02])
    omega = 0.5
    eta0 = 0.11

    def ws_at(dt):
        at = a + ad * dt + 0.5 * add * dt * dt
        atd = ad + add * dt
        tgt = _target(at, atd, add)
        st_ = InnerState(PivotState(at / np.linalg.norm(at), omega), MrpCoordinate(eta_at(dt)))
        return inner_loop.target_angular_rate(tgt, st_.eta, p)

    def eta_at(dt):
        # one Euler substep of the coordinate rate is enough for O(h^2) FD
        tgt = _target(a, ad, add)
        rate = inner_loop.mrp_rate(
            InnerState(PivotState(a / np.linalg.norm(a), omega), MrpCoordinate(eta0)), tgt
        )
        return eta0 + rate * dt

    tgt0 = _target(a, ad, add)
    _, ws_dot = inner_loop.target_angular_rate_jet(tgt0, MrpCoordinate(eta0), omega, p)
    h = 1e-6
    fd = (ws_at(h) - ws_at(-h)) / (2 * h)
    assert ws_dot == pytest.approx(fd, rel=1e-5)


# -- Lyapunov pieces ------------------------------------------------------------


def test_attitude_lyapunov_zero_inside_ball():
    tgt = _target([0.0, 9.81])
    hw = geometry.mrp_halfwidth(9.81, PARAMS.r)
    assert inner_loop.attitude_lyapunov(tgt, MrpCoordinate(0.5 * hw.value), PARAMS) == 0.0
    # saturated half-width: every attitude acceptable
    assert inner_loop.attitude_lyapunov(_target([0.0, 0.05]), MrpCoordinate(50.0), PARAMS) == 0.0


def test_forcing_gate_identity():
    # on the support region, forcing * step == k_a * ramp exactly
    from pivoted_tracking.shaping import smooth_ramp, smooth_step

    tgt = _target([0.0, 9.81])
    hw = geometry.mrp_halfwidth(9.81, PARAMS.r).value
    eta = MrpCoordinate(hw + 0.004)
    s = 9.81 * (abs(eta.value) - hw)
    f = inner_loop.convergence_forcing(tgt, eta, PARAMS)
    z = smooth_step(s, 0.0, PARAMS.delta_a)
    assert f * z == pytest.approx(PARAMS.k_a * smooth_ramp(s, 0.0, PARAMS.delta_a), rel=1e-15)


def test_forcing_exact_zero_off_support():
    tgt = _target([0.0, 9.81])
    hw = geometry.mrp_halfwidth(9.81, PARAMS.r).value
    assert inner_loop.convergence_forcing(tgt, MrpCoordinate(0.5 * hw), PARAMS) == 0.0
    # barely past the boundary the step underflows to a denormal ratio;
    # the analytic limit 0 must be returned instead of 0/0
    eta = MrpCoordinate(hw + 1e-10 / 9.81)
    assert inner_loop.convergence_forcing(tgt, eta, PARAMS) == 0.0


def test_lyapunov_components_consistent():
    tgt, eta, state = _probe()
    va, vo, vt = inner_loop.lyapunov_components(state, tgt, PARAMS)
    ws = inner_loop.target_angular_rate(tgt, eta, PARAMS)
    assert va == inner_loop.attitude_lyapunov(tgt, eta, PARAMS)
    assert vo == pytest.approx(0.5 * PARAMS.p_omega * (state.pivot.omega - ws) ** 2, rel=1e-15)
    assert vt == va + vo


# -- switching boundary ---------------------------------------------------------


def _state(lam_angle, omega, eta, valid=True):
    lam = np.array([math.cos(lam_angle), math.sin(lam_angle)])
    return InnerState(PivotState(lam, omega), MrpCoordinate(eta, valid=valid))


def test_switching_invalidates_at_zero():
    state = _state(0.3, 0.0, 0.7)
    out, changed = inner_loop.apply_switching(state, _target([0.0, 0.0]), PARAMS)
    assert changed and not out.eta.valid
    # already invalid: no further change
    out2, changed2 = inner_loop.apply_switching(out, _target([0.0, 0.0]), PARAMS)
    assert out2 is out and not changed2


def test_switching_passthrough_above_floor():
    state = _state(0.3, 0.0, 0.7)
    out, changed = inner_loop.apply_switching(state, _target([0.0, 9.81]), PARAMS)
    assert out is state and not changed


def test_switching_anchors_below_floor():
    lam_angle = 1.1
    state = _state(lam_angle, 0.0, 123.0)  # stale coordinate
    tgt = _target([0.01, 0.005])  # norm ~ 0.011, inside the zone
    out, changed = inner_loop.apply_switching(state, tgt, PARAMS)
    assert changed
    n = inner_loop.thrust_command(tgt)
    want = geometry.mrp_from_angle(geometry.signed_angle(out.pivot.lam, tgt.a_star / n))
    assert out.eta.value == want and out.eta.valid


def test_switching_reanchors_invalid_above_floor():
    state = _state(0.4, 0.0, 0.0, valid=False)
    tgt = _target([0.0, 9.81])
    out, changed = inner_loop.apply_switching(state, tgt, PARAMS)
    assert changed and out.eta.valid
    want = geometry.mrp_from_angle(geometry.signed_angle(out.pivot.lam, np.array([0.0, 1.0])))
    assert out.eta.value == want


@settings(max_examples=300)
@given(
    st.floats(-math.pi, math.pi),
    st.floats(-3.0, 3.0),
    st.floats(-50.0, 50.0),
    st.floats(0.001, 0.0199),
    st.floats(-math.pi, math.pi),
)
def test_controls_invariant_under_reanchoring(lam_angle, omega, eta, n, tgt_angle):
    """Switching continuity: inside the zone (n below the floor) every
    eta-gate is closed, so re-anchoring the coordinate cannot move the
    commanded angular acceleration at all."""
    state = _state(lam_angle, omega, eta)
    tgt = _target([n * math.cos(tgt_angle), n * math.sin(tgt_angle)])
    u2_before = inner_loop.pivot_accel_command(state, tgt, PARAMS)
    after, _ = inner_loop.apply_switching(state, tgt, PARAMS)
    u2_after = inner_loop.pivot_accel_command(after, tgt, PARAMS)
    assert abs(u2_after - u2_before) <= 1e-9  # in fact exactly zero
    ws_before = inner_loop.target_angular_rate(tgt, state.eta, PARAMS)
    ws_after = inner_loop.target_angular_rate(tgt, after.eta, PARAMS)
    assert abs(ws_after - ws_before) <= 1e-9


def test_invalid_eta_raises_when_it_matters():
    state = _state(0.2, 0.0, 0.0, valid=False)
    tgt = _target([0.0, 9.81])
    with pytest.raises(ValueError):
        inner_loop.pivot_accel_command(state, tgt, PARAMS)
    with pytest.raises(ValueError):
        inner_loop.mrp_rate(state, tgt)
    # below the floor the controller is angle-blind and must not raise
    small = _target([0.0, 0.01])
    assert np.isfinite(inner_loop.pivot_accel_command(state, small, PARAMS))


def test_mrp_rate_rejects_zero_thrust():
    state = _state(0.2, 0.0, 0.1)
    with pytest.raises(ValueError):
        inner_loop.mrp_rate(state, _target([0.0, 0.0]))
