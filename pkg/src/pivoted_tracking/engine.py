"""Compiled fast path for the built-in vehicle.

Same math as the reference loop in simulator.py, hand-flattened to
scalars for numba: forward-mode pairs (value, d/dt) are threaded
explicitly, and the half-width 2-jet uses (value, d1, d2) triples. The
reference implementation stays the behavioral oracle; an equivalence
test pins this one to it.

Only the redesigned controller on the built-in planar vehicle is
compiled (square or hover reference, no input hold); everything else
falls back to the reference engine.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from . import simulator
from .shaping import _GL_NODES, _GL_WEIGHTS

_INF_ANGLE = 2.0 * math.pi - 4e-9
_TWO_PI = 2.0 * math.pi
_FORCING_UNDERFLOW = 1e-300
_ETA_CAP = 1e8
_GRAVITY = 9.81


@njit(cache=True, error_model="numpy")
def _bump(s):
    if s <= 0.0:
        return 0.0
    inv = 1.0 / s
    if inv > 745.0:
        return 0.0
    return math.exp(-inv)


@njit(cache=True, error_model="numpy")
def _step01(u):
    a = _bump(u)
    if a == 0.0:
        return 0.0
    b = _bump(1.0 - u)
    if b == 0.0:
        return 1.0
    return a / (a + b)


@njit(cache=True, error_model="numpy")
def _bump_jet(s):
    w = _bump(s)
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


@njit(cache=True, error_model="numpy")
def _step01_jet(u):
    if u <= 1e-3:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    if u >= 1.0 - 1e-3:
        return 1.0, 0.0, 0.0, 0.0, 0.0
    nj = _bump_jet(u)
    bj = _bump_jet(1.0 - u)
    n0 = nj[0]
    n1 = nj[1]
    n2 = nj[2] / 2.0
    n3 = nj[3] / 6.0
    n4 = nj[4] / 24.0
    d0 = n0 + bj[0]
    d1 = n1 - bj[1]
    d2 = n2 + bj[2] / 2.0
    d3 = n3 - bj[3] / 6.0
    d4 = n4 + bj[4] / 24.0
    q0 = n0 / d0
    q1 = (n1 - q0 * d1) / d0
    q2 = (n2 - (q0 * d2 + q1 * d1)) / d0
    q3 = (n3 - (q0 * d3 + q1 * d2 + q2 * d1)) / d0
    q4 = (n4 - (q0 * d4 + q1 * d3 + q2 * d2 + q3 * d1)) / d0
    return q0, q1, 2.0 * q2, 6.0 * q3, 24.0 * q4


@njit(cache=True, error_model="numpy")
def _step(s, s0, s1):
    return _step01((s - s0) / (s1 - s0))


@njit(cache=True, error_model="numpy")
def _step_d1(s, s0, s1):
    scale = 1.0 / (s1 - s0)
    return _step01_jet((s - s0) * scale)[1] * scale


@njit(cache=True, error_model="numpy")
def _step_d2(s, s0, s1):
    scale = 1.0 / (s1 - s0)
    return _step01_jet((s - s0) * scale)[2] * scale * scale


@njit(cache=True, error_model="numpy")
def _ramp(s, s0, s1):
    if s <= s0:
        return 0.0
    if s >= s1:
        return s - 0.5 * (s0 + s1)
    width = s1 - s0
    u = (s - s0) / width
    half = 0.5 * u
    acc = 0.0
    for i in range(_GL_NODES.shape[0]):
        acc += _GL_WEIGHTS[i] * _step01(half * (_GL_NODES[i] + 1.0))
    return width * half * acc


@njit(cache=True, error_model="numpy")
def _sign0(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True, error_model="numpy")
def _signed_angle(lx, ly, sx, sy):
    s = lx * -sy + ly * sx
    c = lx * sx + ly * sy
    ang = math.atan2(s, c)
    if ang == -math.pi:
        ang = math.pi
    return ang


@njit(cache=True, error_model="numpy")
def _hw_theta(sigma):
    # smooth half-width angle; saturates at a full turn
    if sigma <= 1.0 / _TWO_PI:
        return _TWO_PI
    inv = 1.0 / sigma
    z = _step(inv, 2.0, _TWO_PI)
    return inv * (1.0 - z) + _TWO_PI * z


@njit(cache=True, error_model="numpy")
def _hw_eta(n, r):
    # (mrp half-width, at_infinity)
    theta = _hw_theta(n / r)
    if theta >= _INF_ANGLE:
        return 0.0, True
    return math.tan(0.25 * theta), False


@njit(cache=True, error_model="numpy")
def _hw_eta_jet(n, nd, ndd, r):
    # (value, d/dt, d2/dt2, at_infinity) of the mrp half-width
    theta0 = _hw_theta(n / r)
    if theta0 >= _INF_ANGLE:
        return 0.0, 0.0, 0.0, True
    s0 = n / r
    s1 = nd / r
    s2 = ndd / r
    i0 = 1.0 / s0
    i1 = -s1 / (s0 * s0)
    i2 = 2.0 * s1 * s1 / (s0 * s0 * s0) - s2 / (s0 * s0)
    z0 = _step(i0, 2.0, _TWO_PI)
    zp = _step_d1(i0, 2.0, _TWO_PI)
    zpp = _step_d2(i0, 2.0, _TWO_PI)
    z1 = zp * i1
    z2 = zpp * i1 * i1 + zp * i2
    th0 = i0 * (1.0 - z0) + _TWO_PI * z0
    th1 = i1 * (1.0 - z0) - i0 * z1 + _TWO_PI * z1
    th2 = i2 * (1.0 - z0) - 2.0 * i1 * z1 - i0 * z2 + _TWO_PI * z2
    q0 = 0.25 * th0
    q1 = 0.25 * th1
    q2 = 0.25 * th2
    t0 = math.tan(q0)
    sec2 = 1.0 + t0 * t0
    t1 = sec2 * q1
    t2 = sec2 * (q2 + 2.0 * t0 * q1 * q1)
    return t0, t1, t2, False


@njit(cache=True, error_model="numpy")
def _norm_jet(ax, ay, adx, ady, addx, addy):
    n = math.hypot(ax, ay)
    if n == 0.0:
        return 0.0, 0.0, 0.0
    nd = (ax * adx + ay * ady) / n
    ndd = (adx * adx + ady * ady + ax * addx + ay * addy - nd * nd) / n
    return n, nd, ndd


@njit(cache=True, error_model="numpy")
def _rate_core(eta, ax, ay, adx, ady, n, hw, hwd, has_hw,
               a0, a1, rho, delta_a, delta_ed, k_a, k_eta):
    # value-only angular-rate setpoint, mirroring the reference branching
    one_plus = 1.0 + eta * eta
    damping = -4.0 * k_eta * eta / one_plus * _step(n, a0, a1)
    if not has_hw:
        return damping
    abs_eta = abs(eta)
    ratio = abs_eta / hw
    if ratio <= rho:
        return damping
    gate = _step(ratio, rho, 1.0)
    q = 4.0 * _sign0(eta) / one_plus

    aligned = (ax * adx + ay * ady) / n
    across = (ay * adx - ax * ady) / n
    term_ff = -(q * (abs_eta - hw) * aligned + across) / n

    term_keep = q * hwd * (1.0 - _step(hwd, 0.0, delta_ed))

    s_arg = n * (abs_eta - hw)
    if s_arg <= 0.0:
        forcing = 0.0
    else:
        z = _step(s_arg, 0.0, delta_a)
        if z < _FORCING_UNDERFLOW:
            forcing = 0.0
        else:
            forcing = k_a * _ramp(s_arg, 0.0, delta_a) / z
    term_force = -q * forcing / n

    return (term_ff + term_keep + term_force) * gate + damping


@njit(cache=True, error_model="numpy")
def _rate_core_jet(eta_v, eta_d, ax_v, ax_d, ay_v, ay_d, adx_v, adx_d, ady_v, ady_d,
                   n_v, n_d, hw_v, hw_d, hwd_v, hwd_d, has_hw,
                   a0, a1, rho, delta_a, delta_ed, k_a, k_eta):
    # (value, d/dt) of the angular-rate setpoint; first-order forward mode
    op_v = 1.0 + eta_v * eta_v
    op_d = 2.0 * eta_v * eta_d
    num_v = -4.0 * k_eta * eta_v
    num_d = -4.0 * k_eta * eta_d
    fr_v = num_v / op_v
    fr_d = (num_d - fr_v * op_d) / op_v
    zg_v = _step(n_v, a0, a1)
    zg_d = _step_d1(n_v, a0, a1) * n_d
    damp_v = fr_v * zg_v
    damp_d = fr_v * zg_d + fr_d * zg_v
    if not has_hw:
        return damp_v, damp_d

    sgn = _sign0(eta_v)
    ae_v = abs(eta_v)
    ae_d = sgn * eta_d
    rt_v = ae_v / hw_v
    if rt_v <= rho:
        return damp_v, damp_d
    rt_d = (ae_d - rt_v * hw_d) / hw_v
    gate_v = _step(rt_v, rho, 1.0)
    gate_d = _step_d1(rt_v, rho, 1.0) * rt_d

    q_v = 4.0 * sgn / op_v
    q_d = -q_v * op_d / op_v

    al_num_v = ax_v * adx_v + ay_v * ady_v
    al_num_d = ax_v * adx_d + ax_d * adx_v + ay_v * ady_d + ay_d * ady_v
    al_v = al_num_v / n_v
    al_d = (al_num_d - al_v * n_d) / n_v
    ac_num_v = ay_v * adx_v - ax_v * ady_v
    ac_num_d = ay_v * adx_d + ay_d * adx_v - ax_v * ady_d - ax_d * ady_v
    ac_v = ac_num_v / n_v
    ac_d = (ac_num_d - ac_v * n_d) / n_v

    gap_v = ae_v - hw_v
    gap_d = ae_d - hw_d
    qa_v = q_v * gap_v
    qa_d = q_v * gap_d + q_d * gap_v
    ffn_v = qa_v * al_v + ac_v
    ffn_d = qa_v * al_d + qa_d * al_v + ac_d
    ff_v = -ffn_v / n_v
    ff_d = -(ffn_d - ffn_v / n_v * n_d) / n_v

    kg_v = 1.0 - _step(hwd_v, 0.0, delta_ed)
    kg_d = -_step_d1(hwd_v, 0.0, delta_ed) * hwd_d
    qh_v = q_v * hwd_v
    qh_d = q_v * hwd_d + q_d * hwd_v
    keep_v = qh_v * kg_v
    keep_d = qh_v * kg_d + qh_d * kg_v

    s_v = n_v * gap_v
    s_d = n_v * gap_d + n_d * gap_v
    if s_v <= 0.0:
        fo_v = 0.0
        fo_d = 0.0
    else:
        z_v = _step(s_v, 0.0, delta_a)
        if z_v < _FORCING_UNDERFLOW:
            fo_v = 0.0
            fo_d = 0.0
        else:
            z_d = _step_d1(s_v, 0.0, delta_a) * s_d
            rp_v = _ramp(s_v, 0.0, delta_a)
            rp_d = z_v * s_d
            fo_v = k_a * rp_v / z_v
            fo_d = (k_a * rp_d - fo_v * z_d) / z_v
    qf_v = q_v * fo_v
    qf_d = q_v * fo_d + q_d * fo_v
    force_v = -qf_v / n_v
    force_d = -(qf_d - qf_v / n_v * n_d) / n_v

    grp_v = ff_v + keep_v + force_v
    grp_d = ff_d + keep_d + force_d
    return grp_v * gate_v + damp_v, grp_v * gate_d + grp_d * gate_v + damp_d


@njit(cache=True, error_model="numpy")
def _rate_jet(ev, omega, ax, ay, adx, ady, addx, addy,
              r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, floor):
    # (setpoint, its total time derivative) along the closed loop
    n, nd, ndd = _norm_jet(ax, ay, adx, ady, addx, addy)
    if n < floor:
        return _rate_core_jet(ev, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                              n, nd, 0.0, 0.0, 0.0, 0.0, False,
                              a0, a1, rho, delta_a, delta_ed, k_a, k_eta)
    ev_dot = 0.25 * (1.0 + ev * ev) * (omega - (ax * ady - ay * adx) / (n * n))
    h0, h1, h2, at_inf = _hw_eta_jet(n, nd, ndd, r)
    return _rate_core_jet(ev, ev_dot, ax, adx, ay, ady, adx, addx, ady, addy,
                          n, nd, h0, h1, h1, h2, not at_inf,
                          a0, a1, rho, delta_a, delta_ed, k_a, k_eta)


@njit(cache=True, error_model="numpy")
def _rate_value(ev, ax, ay, adx, ady, addx, addy,
                r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta):
    n, nd, ndd = _norm_jet(ax, ay, adx, ady, addx, addy)
    hw, at_inf = _hw_eta(n, r)
    if at_inf:
        return _rate_core(ev, 0.0, 0.0, 0.0, 0.0, n, 0.0, 0.0, False,
                          a0, a1, rho, delta_a, delta_ed, k_a, k_eta)
    h0, h1, h2, _ = _hw_eta_jet(n, nd, ndd, r)
    return _rate_core(ev, ax, ay, adx, ady, n, h0, h1, True,
                      a0, a1, rho, delta_a, delta_ed, k_a, k_eta)


@njit(cache=True, error_model="numpy")
def _accel_command(ev, omega, ax, ay, adx, ady, addx, addy,
                   r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor):
    ws, ws_dot = _rate_jet(ev, omega, ax, ay, adx, ady, addx, addy,
                           r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, floor)
    n = math.hypot(ax, ay)
    hw, at_inf = _hw_eta(n, r)
    if at_inf:
        cross = 0.0
    else:
        zc = _step(n * (abs(ev) - hw), 0.0, delta_a)
        cross = _sign0(ev) * 0.25 * (1.0 + ev * ev) * n * zc / p_omega
    return ws_dot - 0.5 * k_omega * (omega - ws) - cross


@njit(cache=True, error_model="numpy")
def _traj(tid, t):
    # (px, py, d1x, d1y, d2x, d2y, d3x, d3y, d4x, d4y)
    if tid == 1:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    va = _step01_jet(t / 3.0)
    vb = _step01_jet((t - 14.0) / 3.0)
    ha = _step01_jet((t - 7.0) / 3.0)
    hb = _step01_jet((t - 21.0) / 3.0)
    w1 = 3.0
    w2 = 9.0
    w3 = 27.0
    w4 = 81.0
    v0 = va[0] - vb[0]
    v1 = (va[1] - vb[1]) / w1
    v2 = (va[2] - vb[2]) / w2
    v3 = (va[3] - vb[3]) / w3
    v4 = (va[4] - vb[4]) / w4
    h0 = ha[0] - hb[0]
    h1 = (ha[1] - hb[1]) / w1
    h2 = (ha[2] - hb[2]) / w2
    h3 = (ha[3] - hb[3]) / w3
    h4 = (ha[4] - hb[4]) / w4
    return (10.0 * h0, 10.0 * v0, 10.0 * h1, 10.0 * v1, 10.0 * h2, 10.0 * v2,
            10.0 * h3, 10.0 * v3, 10.0 * h4, 10.0 * v4)


@njit(cache=True, error_model="numpy")
def _target(tid, t, x0, x1, x2, x3, lx, ly, omega, k_x, k_v):
    # ideal actuation vector and two closed-loop time derivatives
    px, py, d1x, d1y, d2x, d2y, d3x, d3y, d4x, d4y = _traj(tid, t)
    epx = x0 - px
    epy = x1 - py
    evx = x2 - d1x
    evy = x3 - d1y
    ax = d2x - k_x * epx - k_v * evx
    ay = d2y + _GRAVITY - k_x * epy - k_v * evy

    u1 = math.hypot(ax, ay)
    ep_dx = evx
    ep_dy = evy
    ev_dx = lx * u1 - d2x
    ev_dy = ly * u1 - _GRAVITY - d2y
    adx = d3x - k_x * ep_dx - k_v * ev_dx
    ady = d3y - k_x * ep_dy - k_v * ev_dy

    if u1 > 0.0:
        u1_dot = (ax * adx + ay * ady) / u1
    else:
        u1_dot = 0.0
    om_u1 = omega * u1
    aa_dx = -ly * om_u1 + lx * u1_dot
    aa_dy = lx * om_u1 + ly * u1_dot
    ep_ddx = ev_dx
    ep_ddy = ev_dy
    ev_ddx = aa_dx - d3x
    ev_ddy = aa_dy - d3y
    addx = d4x - k_x * ep_ddx - k_v * ev_ddx
    addy = d4y - k_x * ep_ddy - k_v * ev_ddy
    return ax, ay, adx, ady, addx, addy


@njit(cache=True, error_model="numpy")
def _deriv(tid, t, y, eta_valid, k_x, k_v,
           r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor):
    # (dy[8], ok): stage derivative with stage-local coordinate recovery
    x0, x1, x2, x3 = y[0], y[1], y[2], y[3]
    lx, ly = y[4], y[5]
    omega = y[6]
    eta = y[7]
    ax, ay, adx, ady, addx, addy = _target(tid, t, x0, x1, x2, x3, lx, ly, omega, k_x, k_v)
    n = math.hypot(ax, ay)
    ev = eta
    valid = eta_valid
    if not valid:
        if n > 0.0:
            ev = math.tan(0.25 * _signed_angle(lx, ly, ax / n, ay / n))
            valid = True
        else:
            ev = 0.0
    u2 = _accel_command(ev, omega, ax, ay, adx, ady, addx, addy,
                        r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor)
    if valid and n >= floor:
        spin = (ax * ady - ay * adx) / (n * n)
        eta_dot = 0.25 * (1.0 + ev * ev) * (omega - spin)
    else:
        eta_dot = 0.0

    dy = np.empty(8)
    dy[0] = x2
    dy[1] = x3
    dy[2] = lx * n
    dy[3] = ly * n - _GRAVITY
    dy[4] = -ly * omega
    dy[5] = lx * omega
    dy[6] = u2
    dy[7] = eta_dot
    ok = True
    for i in range(8):
        if not math.isfinite(dy[i]):
            ok = False
    return dy, ok


@njit(cache=True, error_model="numpy")
def _rk4_step(tid, t, y, eta_valid, h, k_x, k_v,
              r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor):
    # one step; returns (y_next, drift, capped, ok)
    k1, ok1 = _deriv(tid, t, y, eta_valid, k_x, k_v, r, a0, a1, rho, delta_a,
                     delta_ed, k_a, k_eta, p_omega, k_omega, floor)
    k2, ok2 = _deriv(tid, t + 0.5 * h, y + 0.5 * h * k1, eta_valid, k_x, k_v, r, a0, a1,
                     rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor)
    k3, ok3 = _deriv(tid, t + 0.5 * h, y + 0.5 * h * k2, eta_valid, k_x, k_v, r, a0, a1,
                     rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor)
    k4, ok4 = _deriv(tid, t + h, y + h * k3, eta_valid, k_x, k_v, r, a0, a1,
                     rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega, floor)
    yn = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    norm = math.hypot(yn[4], yn[5])
    drift = abs(norm - 1.0)
    yn[4] = yn[4] / norm
    yn[5] = yn[5] / norm
    capped = False
    if abs(yn[7]) > _ETA_CAP:
        yn[7] = math.copysign(_ETA_CAP, yn[7])
        capped = True
    return yn, drift, capped, ok1 and ok2 and ok3 and ok4


@njit(cache=True, error_model="numpy")
def _simulate(tid, n_steps, h, y_init, eta_valid_init, k_x, k_v,
              r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega,
              t_log, x_log, e_log, lam_log, omega_log, eta_log, eta_valid_log,
              u1_log, u2_log, astar_log, bd_log, va_log, vo_log, v_log, sw_log,
              switch_steps, switch_residuals):
    floor = min(r / _TWO_PI, a0)
    y = y_init.copy()
    eta_valid = eta_valid_init
    drift_max = 0.0
    eta_drift_max = 0.0
    cap_events = 0
    n_events = 0

    for k in range(n_steps + 1):
        t = k * h
        if k > 0:
            y, drift, capped, ok = _rk4_step(tid, (k - 1) * h, y, eta_valid, h, k_x, k_v,
                                             r, a0, a1, rho, delta_a, delta_ed,
                                             k_a, k_eta, p_omega, k_omega, floor)
            if not ok:
                return -k, drift_max, eta_drift_max, cap_events, n_events
            drift_max = max(drift_max, drift)
            if capped:
                cap_events += 1

        x0, x1, x2, x3 = y[0], y[1], y[2], y[3]
        lx, ly = y[4], y[5]
        omega = y[6]
        ax, ay, adx, ady, addx, addy = _target(tid, t, x0, x1, x2, x3, lx, ly, omega, k_x, k_v)
        n = math.hypot(ax, ay)

        switched = False
        if k > 0:
            # winding-preserving projection of the coordinate onto the
            # measured angle, then the boundary switching rule
            if eta_valid and n > 0.0:
                theta_snap = _signed_angle(lx, ly, ax / n, ay / n)
                theta_eta = 4.0 * math.atan(y[7])
                theta = theta_snap + _TWO_PI * np.rint((theta_eta - theta_snap) / _TWO_PI)
                if theta >= _TWO_PI:
                    theta -= _TWO_PI
                elif theta <= -_TWO_PI:
                    theta += _TWO_PI
                y[7] = math.tan(0.25 * theta)
                if n >= floor:
                    corr = abs(theta_eta - theta)
                    eta_drift_max = max(eta_drift_max, corr)

            changed = False
            new_eta = y[7]
            new_valid = eta_valid
            if n == 0.0:
                if eta_valid:
                    new_eta = 0.0
                    new_valid = False
                    changed = True
            elif n >= floor and eta_valid:
                pass
            else:
                anchored = math.tan(0.25 * _signed_angle(lx, ly, ax / n, ay / n))
                if not (eta_valid and anchored == y[7]):
                    new_eta = anchored
                    new_valid = True
                    changed = True
                else:
                    new_valid = True
            switched = changed or n < floor
            if switched:
                if not eta_valid and n >= floor:
                    u2_b = math.nan
                else:
                    ev_b = y[7] if eta_valid else 0.0
                    u2_b = _accel_command(ev_b, omega, ax, ay, adx, ady, addx, addy,
                                          r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta,
                                          p_omega, k_omega, floor)
                if not new_valid and n >= floor:
                    u2_a = math.nan
                else:
                    ev_a = new_eta if new_valid else 0.0
                    u2_a = _accel_command(ev_a, omega, ax, ay, adx, ady, addx, addy,
                                          r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta,
                                          p_omega, k_omega, floor)
                switch_steps[n_events] = k
                switch_residuals[n_events] = abs(u2_a - u2_b)
                n_events += 1
                y[7] = new_eta
                eta_valid = new_valid

        # log row
        px, py, d1x, d1y = _traj(tid, t)[:4]
        ev = y[7] if eta_valid else 0.0
        if not eta_valid and n >= floor:
            u2 = math.nan
        else:
            u2 = _accel_command(ev, omega, ax, ay, adx, ady, addx, addy,
                                r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta,
                                p_omega, k_omega, floor)
        gap = math.hypot(lx * n - ax, ly * n - ay) - r
        bd = gap if gap > 0.0 else 0.0
        hw, at_inf = _hw_eta(n, r)
        if at_inf:
            va = 0.0
        else:
            va = _ramp(n * (abs(ev) - hw), 0.0, delta_a)
        ws = _rate_value(ev, ax, ay, adx, ady, addx, addy,
                         r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta)
        vo = 0.5 * p_omega * (omega - ws) ** 2

        t_log[k] = t
        x_log[k, 0] = x0
        x_log[k, 1] = x1
        x_log[k, 2] = x2
        x_log[k, 3] = x3
        e_log[k, 0] = x0 - px
        e_log[k, 1] = x1 - py
        e_log[k, 2] = x2 - d1x
        e_log[k, 3] = x3 - d1y
        lam_log[k, 0] = lx
        lam_log[k, 1] = ly
        omega_log[k] = omega
        eta_log[k] = y[7]
        eta_valid_log[k] = 1 if eta_valid else 0
        u1_log[k] = n
        u2_log[k] = u2
        astar_log[k, 0] = ax
        astar_log[k, 1] = ay
        bd_log[k] = bd
        va_log[k] = va
        vo_log[k] = vo
        v_log[k] = va + vo
        sw_log[k] = 1 if switched else 0

    return n_steps + 1, drift_max, eta_drift_max, cap_events, n_events


@njit(cache=True, error_model="numpy")
def _integrate_raw(tid, t0, n_steps, h, y_init, eta_valid, k_x, k_v,
                   r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega):
    # plain stepping from an arbitrary start, no boundary logic; the fast
    # twin of the reference segment integrator
    floor = min(r / _TWO_PI, a0)
    y = y_init.copy()
    for k in range(n_steps):
        y, _, _, ok = _rk4_step(tid, t0 + k * h, y, eta_valid, h, k_x, k_v,
                                r, a0, a1, rho, delta_a, delta_ed,
                                k_a, k_eta, p_omega, k_omega, floor)
        if not ok:
            raise ValueError("non-finite derivative during segment integration")
    return y


_TRAJ_IDS = {"square": 0, "hover": 1}


def _unpack(config: "simulator.SimConfig"):
    p = config.controller
    g = config.gains
    return (
        _TRAJ_IDS[config.trajectory],
        config.step_size,
        g.k_x, g.k_v,
        p.r, p.a0, p.a1, p.rho, p.delta_a, p.delta_eta_dot,
        p.k_a, p.k_eta, p.p_omega, p.k_omega,
    )


def _initial_state(config: "simulator.SimConfig"):
    from . import geometry, inner_loop, outer_loop

    traj_fn = outer_loop.make_trajectory(config.trajectory)
    if config.x0 is None:
        x = outer_loop.state_reference(traj_fn(0.0))
    else:
        x = np.asarray(config.x0, dtype=float)
        if x.shape != (4,):
            raise ValueError(f"x0 must have shape (4,), got {x.shape}")
    lam = np.asarray(config.lam0, dtype=float)
    lam = lam / math.hypot(lam[0], lam[1])
    target = outer_loop.actuation_target(0.0, x, lam, float(config.omega0), traj_fn(0.0), config.gains)
    n0 = inner_loop.thrust_command(target)
    if n0 > 0.0:
        eta = geometry.mrp_from_angle(geometry.signed_angle(lam, target.a_star / n0))
        eta_valid = True
    else:
        eta, eta_valid = 0.0, False
    y0 = np.concatenate([x, lam, [float(config.omega0), eta]])
    return y0, eta_valid


def run_fast(config: "simulator.SimConfig") -> "simulator.RunResult":
    tid, h, k_x, k_v, r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega = _unpack(config)
    y0, eta_valid0 = _initial_state(config)
    n_steps = config.n_steps

    log = simulator._empty_log(n_steps + 1)
    switch_steps = np.zeros(n_steps + 1, dtype=np.int64)
    switch_residuals = np.zeros(n_steps + 1)
    rows, drift_max, eta_drift_max, cap_events, n_events = _simulate(
        tid, n_steps, h, y0, eta_valid0, k_x, k_v,
        r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega,
        log.t, log.x, log.e, log.lam, log.omega, log.eta, log.eta_valid,
        log.u1, log.u2, log.a_star, log.ball_dist, log.v_att, log.v_rate,
        log.v_total, log.switch_event, switch_steps, switch_residuals,
    )
    if rows < 0:
        raise simulator.SimulationDiverged(f"non-finite derivative at step {-rows}")
    return simulator.RunResult(
        log=log,
        config=config,
        completed=True,
        singular_event=None,
        switch_steps=switch_steps[:n_events].copy(),
        switch_residuals=switch_residuals[:n_events].copy(),
        norm_drift_max=float(drift_max),
        eta_drift_max=float(eta_drift_max),
        eta_cap_events=int(cap_events),
        engine_used="fast",
        wall_time=0.0,
    )


def integrate_segment(config: "simulator.SimConfig", t0: float, y0: np.ndarray,
                      eta_valid0: bool, n_steps: int) -> np.ndarray:
    tid, h, k_x, k_v, r, a0, a1, rho, delta_a, delta_ed, k_a, k_eta, p_omega, k_omega = _unpack(config)
    return _integrate_raw(tid, t0, n_steps, config.step_size, np.asarray(y0, dtype=float),
                          eta_valid0, k_x, k_v, r, a0, a1, rho, delta_a, delta_ed,
                          k_a, k_eta, p_omega, k_omega)


def warm_up() -> None:
    """Trigger compilation (or cache load) of the kernels."""
    cfg = simulator.SimConfig(duration=2e-3, trajectory="hover", engine="fast")
    run_fast(cfg)
    integrate_segment(cfg, 0.0, np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]), True, 1)
