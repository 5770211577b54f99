"""Backstepping attitude controller for the pivoted thruster.

Thrust magnitude tracks the ideal actuation vector's norm; the pivot
angle is steered so the realized thrust vector stays inside a ball
around the ideal vector. The angle target and its feedforward rate are
assembled from smooth gates so that nothing blows up when the ideal
vector crosses zero (free fall): every term that would divide by the
norm is switched off, exactly, before the norm gets small.

All rates are produced by forward-mode propagation (see dual.py), never
by finite differencing inside the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import dual, geometry
from .dual import Dual
from .geometry import TWO_PI, MrpCoordinate
from .shaping import smooth_ramp, smooth_step

# Below this, the step ratio in the convergence forcing is taken at its
# analytic limit (0) instead of dividing two denormals.
_FORCING_UNDERFLOW = 1e-300

# Integration cap on the MRP magnitude; far above anything reachable
# while the attitude gates are active.
ETA_CAP = 1e8


@dataclass(frozen=True)
class ControllerParams:
    """All tuning constants of the attitude loop, with validity checks."""

    r: float = TWO_PI / 10.0
    a0: float = 0.02
    a1: float = 0.03
    rho: float = 0.2
    delta_a: float = 0.025
    delta_eta_dot: float = 0.01
    k_a: float = 5.0
    k_eta: float = 5.0
    p_omega: float = 5.0
    k_omega: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.a0 < self.a1:
            raise ValueError(f"need 0 < a0 < a1, got a0={self.a0}, a1={self.a1}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"need rho in (0, 1), got {self.rho}")
        for name in ("r", "delta_a", "delta_eta_dot", "k_a", "k_eta", "p_omega", "k_omega"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def switching_floor(self) -> float:
        """Norm threshold below which the controller is angle-blind."""
        return min(self.r / TWO_PI, self.a0)

    @property
    def decay_rate(self) -> float:
        """Guaranteed exponential rate of the composite Lyapunov function."""
        return min(self.k_a, self.k_omega)


@dataclass(frozen=True)
class ActuationTarget:
    """Ideal actuation vector and its first two time derivatives."""

    a_star: np.ndarray
    a_star_dot: np.ndarray
    a_star_ddot: np.ndarray

    def norm_jet(self) -> tuple[float, float, float]:
        """(value, d/dt, d2/dt2) of the norm; zeros at the zero vector."""
        a, ad, add = self.a_star, self.a_star_dot, self.a_star_ddot
        n = math.hypot(a[0], a[1])
        if n == 0.0:
            return 0.0, 0.0, 0.0
        ndot = (a[0] * ad[0] + a[1] * ad[1]) / n
        nddot = (ad[0] ** 2 + ad[1] ** 2 + a[0] * add[0] + a[1] * add[1] - ndot**2) / n
        return n, ndot, nddot


@dataclass(frozen=True)
class PivotState:
    lam: np.ndarray
    omega: float


@dataclass(frozen=True)
class InnerState:
    pivot: PivotState
    eta: MrpCoordinate


def thrust_command(target: ActuationTarget) -> float:
    """Nonnegative thrust magnitude: the norm of the ideal vector."""
    return math.hypot(target.a_star[0], target.a_star[1])


def _require_usable_eta(eta: MrpCoordinate, n: float, params: ControllerParams) -> float:
    if not eta.valid:
        if n >= params.switching_floor:
            raise ValueError(
                "attitude coordinate invalid while the controller depends on it "
                f"(norm {n} >= floor {params.switching_floor}); re-anchor first"
            )
        return 0.0  # angle-blind regime: the value is multiplied by closed gates
    return eta.value


def attitude_lyapunov(target: ActuationTarget, eta: MrpCoordinate, params: ControllerParams) -> float:
    """Ramp of the containment excess; zero whenever the thrust direction
    already lands inside the target ball."""
    n = thrust_command(target)
    ev = _require_usable_eta(eta, n, params)
    hw = geometry.mrp_halfwidth(n, params.r)
    if hw.at_infinity:
        return 0.0
    return smooth_ramp(n * (abs(ev) - hw.value), 0.0, params.delta_a)


def convergence_forcing(target: ActuationTarget, eta: MrpCoordinate, params: ControllerParams) -> float:
    """Forcing magnitude that makes the attitude Lyapunov value contract at
    rate k_a; ramp over step, with the exact-zero branch outside support."""
    n = thrust_command(target)
    ev = _require_usable_eta(eta, n, params)
    hw = geometry.mrp_halfwidth(n, params.r)
    if hw.at_infinity:
        return 0.0
    s = n * (abs(ev) - hw.value)
    if s <= 0.0:
        return 0.0
    z = smooth_step(s, 0.0, params.delta_a)
    if z < _FORCING_UNDERFLOW:
        return 0.0
    return params.k_a * smooth_ramp(s, 0.0, params.delta_a) / z


def _angular_rate_core(eta, ax, ay, adx, ady, n, hw_value, hw_dot, p: ControllerParams):
    """Target angular rate. Every argument except p may be a Dual carrying
    its time derivative, in which case the result carries d/dt too.

    hw_value/hw_dot are None when the attitude half-width is at infinity
    (every direction acceptable); the gated group is then identically zero.
    """
    one_plus = 1.0 + eta * eta
    damping = -4.0 * p.k_eta * eta / one_plus * dual.step(n, p.a0, p.a1)
    if hw_value is None:
        return damping
    abs_eta = dual.d_abs(eta)
    ratio = abs_eta / hw_value
    if dual.scalar(ratio) <= p.rho:
        # the gate and all of its derivatives vanish on this region, so
        # skipping the group is exact (and avoids inf * 0 when the
        # half-width rate is enormous near the saturation)
        return damping
    gate = dual.step(ratio, p.rho, 1.0)
    q = 4.0 * dual.d_sign(eta) / one_plus

    aligned = (ax * adx + ay * ady) / n  # unit ideal direction . its rate
    across = (ay * adx - ax * ady) / n
    term_ff = -(q * (abs_eta - hw_value) * aligned + across) / n

    term_keep = q * hw_dot * (1.0 - dual.step(hw_dot, 0.0, p.delta_eta_dot))

    s_arg = n * (abs_eta - hw_value)
    if dual.scalar(s_arg) <= 0.0:
        forcing = 0.0
    else:
        z = dual.step(s_arg, 0.0, p.delta_a)
        if dual.scalar(z) < _FORCING_UNDERFLOW:
            forcing = 0.0
        else:
            forcing = p.k_a * dual.ramp(s_arg, 0.0, p.delta_a) / z
    term_force = -q * forcing / n

    return (term_ff + term_keep + term_force) * gate + damping


def target_angular_rate(target: ActuationTarget, eta: MrpCoordinate, params: ControllerParams) -> float:
    """The angular-rate setpoint for the pivot."""
    n = thrust_command(target)
    ev = _require_usable_eta(eta, n, params)
    hw = geometry.mrp_halfwidth(n, params.r)
    if hw.at_infinity:
        return _angular_rate_core(ev, 0.0, 0.0, 0.0, 0.0, n, None, None, params)
    a, ad = target.a_star, target.a_star_dot
    nd, ndd = target.norm_jet()[1:]
    hwj = geometry.mrp_halfwidth_jet(n, nd, ndd, params.r)
    return _angular_rate_core(ev, a[0], a[1], ad[0], ad[1], n, hwj[0], hwj[1], params)


def target_angular_rate_jet(
    target: ActuationTarget, eta: MrpCoordinate, omega: float, params: ControllerParams
) -> tuple[float, float]:
    """(value, total time derivative) of the angular-rate setpoint.

    The derivative is along the closed loop: the attitude coordinate
    moves at mrp_rate (which is where omega enters), and the target jets
    supply every explicit time dependence.
    """
    n, nd, ndd = target.norm_jet()
    ev = _require_usable_eta(eta, n, params)
    a, ad, add = target.a_star, target.a_star_dot, target.a_star_ddot

    if n < params.switching_floor:
        # angle-blind regime; the coordinate may be frozen or invalid, and
        # its rate is irrelevant because every eta-gate is flat here
        eta_in = Dual(ev, 0.0)
        ws = _angular_rate_core(eta_in, 0.0, 0.0, 0.0, 0.0, Dual(n, nd), None, None, params)
        return ws.val, ws.dot

    ev_dot = 0.25 * (1.0 + ev * ev) * (omega - (a[0] * ad[1] - a[1] * ad[0]) / (n * n))
    eta_in = Dual(ev, ev_dot)
    hwj = geometry.mrp_halfwidth_jet(n, nd, ndd, params.r)
    hw_value = None if hwj is None else Dual(hwj[0], hwj[1])
    hw_dot = None if hwj is None else Dual(hwj[1], hwj[2])
    ws = _angular_rate_core(
        eta_in,
        Dual(a[0], ad[0]),
        Dual(a[1], ad[1]),
        Dual(ad[0], add[0]),
        Dual(ad[1], add[1]),
        Dual(n, nd),
        hw_value,
        hw_dot,
        params,
    )
    return ws.val, ws.dot


def mrp_rate(state: InnerState, target: ActuationTarget) -> float:
    """Continuous evolution rate of the attitude coordinate."""
    n = thrust_command(target)
    if n == 0.0:
        raise ValueError("attitude coordinate rate undefined at zero ideal actuation")
    if not state.eta.valid:
        raise ValueError("attitude coordinate invalid; re-anchor before integrating")
    ev = state.eta.value
    a, ad = target.a_star, target.a_star_dot
    ideal_spin = (a[0] * ad[1] - a[1] * ad[0]) / (n * n)
    return 0.25 * (1.0 + ev * ev) * (state.pivot.omega - ideal_spin)


def pivot_accel_command(state: InnerState, target: ActuationTarget, params: ControllerParams) -> float:
    """Angular-acceleration input: setpoint feedforward, rate damping, and
    the backstepping cross-term."""
    n = thrust_command(target)
    ev = _require_usable_eta(state.eta, n, params)
    ws, ws_dot = target_angular_rate_jet(target, state.eta, state.pivot.omega, params)

    hw = geometry.mrp_halfwidth(n, params.r)
    if hw.at_infinity:
        cross = 0.0
    else:
        zc = smooth_step(n * (abs(ev) - hw.value), 0.0, params.delta_a)
        cross = dual.sign0(ev) * 0.25 * (1.0 + ev * ev) * n * zc / params.p_omega

    return ws_dot - 0.5 * params.k_omega * (state.pivot.omega - ws) - cross


def lyapunov_components(
    state: InnerState, target: ActuationTarget, params: ControllerParams
) -> tuple[float, float, float]:
    """(attitude part, rate part, total) of the composite Lyapunov function."""
    va = attitude_lyapunov(target, state.eta, params)
    ws = target_angular_rate(target, state.eta, params)
    vo = 0.5 * params.p_omega * (state.pivot.omega - ws) ** 2
    return va, vo, va + vo


def apply_switching(
    state: InnerState, target: ActuationTarget, params: ControllerParams
) -> tuple[InnerState, bool]:
    """Boundary rule for the attitude coordinate.

    Above the floor the coordinate continues (re-anchoring only if it was
    invalid); strictly between zero and the floor it is pinned to the
    principal branch of the measured angle; at exactly zero it becomes
    invalid. Returns (state, changed).
    """
    n = thrust_command(target)
    if n == 0.0:
        if state.eta.valid:
            return InnerState(state.pivot, MrpCoordinate(0.0, valid=False)), True
        return state, False
    if n >= params.switching_floor and state.eta.valid:
        return state, False
    theta = geometry.signed_angle(state.pivot.lam, target.a_star / n)
    anchored = geometry.mrp_from_angle(theta)
    if state.eta.valid and anchored == state.eta.value:
        return state, False
    return InnerState(state.pivot, MrpCoordinate(anchored)), True


def set_distance_bound_inverse(distance: float, params: ControllerParams) -> float:
    """The overestimate map from ball distance to attitude Lyapunov value."""
    return smooth_ramp(0.25 * distance, 0.0, params.delta_a)


def set_distance_bound(v: float, params: ControllerParams) -> float:
    """Inverse of set_distance_bound_inverse: the guaranteed bound on the
    ball distance at Lyapunov value v. Closed form on the linear tail,
    bracketed root-finding on the transition."""
    if v <= 0.0:
        return 0.0
    if v >= 0.5 * params.delta_a:
        return 4.0 * v + 2.0 * params.delta_a
    return brentq(
        lambda x: smooth_ramp(0.25 * x, 0.0, params.delta_a) - v,
        0.0,
        4.0 * params.delta_a,
        xtol=1e-15,
    )
