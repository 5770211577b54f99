"""Outer-loop vehicle model, baseline controller, and reference trajectories.

The planar multirotor is a double integrator with gravity; the baseline
law cancels gravity, feeds the reference acceleration forward, and adds
PD error feedback, so the unconstrained closed loop is linear. The chain
here also produces the first and second time derivatives of the ideal
actuation vector along the true closed loop (the applied thrust enters,
not the commanded one), which the attitude loop needs for feedforward.

A small registration hook system admits other vehicles with the same
interface; the multirotor is the built-in instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from .inner_loop import ActuationTarget
from .shaping import smooth_step01_jet

GRAVITY = 9.81

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


@dataclass(frozen=True)
class BaselineGains:
    k_x: float = 3.1623
    k_v: float = 4.0404

    def __post_init__(self):
        # positive PD gains make [[0, I], [-k_x I, -k_v I]] Hurwitz
        if self.k_x <= 0.0 or self.k_v <= 0.0:
            raise ValueError(f"gains must be positive, got k_x={self.k_x}, k_v={self.k_v}")


@dataclass(frozen=True)
class TrajectorySample:
    """Position reference and its time derivatives up to order four."""

    pos: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray


def _step_jet(t: float, s0: float, s1: float) -> tuple[float, ...]:
    w = s1 - s0
    j = smooth_step01_jet((t - s0) / w)
    return j[0], j[1] / w, j[2] / w**2, j[3] / w**3, j[4] / w**4


def square_trajectory(t: float) -> TrajectorySample:
    """10 m square traced clockwise from the bottom-left corner:
    up (0..3 s), right (7..10 s), down (14..17 s), left (21..24 s)."""
    vert = [a - b for a, b in zip(_step_jet(t, 0.0, 3.0), _step_jet(t, 14.0, 17.0))]
    horz = [a - b for a, b in zip(_step_jet(t, 7.0, 10.0), _step_jet(t, 21.0, 24.0))]
    rows = [10.0 * (h * E1 + v * E2) for h, v in zip(horz, vert)]
    return TrajectorySample(*rows)


def constant_trajectory(point: np.ndarray) -> Callable[[float], TrajectorySample]:
    point = np.asarray(point, dtype=float)
    zero = np.zeros(2)

    def traj(t: float) -> TrajectorySample:
        return TrajectorySample(point, zero, zero, zero, zero)

    return traj


def make_trajectory(name: str) -> Callable[[float], TrajectorySample]:
    if name == "square":
        return square_trajectory
    if name == "hover":
        return constant_trajectory(np.zeros(2))
    raise ValueError(f"unknown trajectory {name!r} (expected 'square' or 'hover')")


def multirotor_f(t: float, x: np.ndarray) -> np.ndarray:
    """Drift: velocity passthrough plus gravity."""
    return np.array([x[2], x[3], 0.0, -GRAVITY])


_MULTIROTOR_B = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def multirotor_input_map(t: float, x: np.ndarray) -> np.ndarray:
    return _MULTIROTOR_B


def state_reference(traj: TrajectorySample) -> np.ndarray:
    return np.concatenate([traj.pos, traj.d1])


def error_state(x: np.ndarray, traj: TrajectorySample) -> np.ndarray:
    return x - state_reference(traj)


def baseline_control(t: float, x: np.ndarray, traj: TrajectorySample, gains: BaselineGains) -> np.ndarray:
    """Ideal (unconstrained) actuation: reference acceleration, gravity
    cancellation, and PD feedback on the tracking error."""
    e = error_state(x, traj)
    return traj.d2 + GRAVITY * E2 - gains.k_x * e[:2] - gains.k_v * e[2:]


def actuation_target(
    t: float,
    x: np.ndarray,
    lam: np.ndarray,
    omega: float,
    traj: TrajectorySample,
    gains: BaselineGains,
) -> ActuationTarget:
    """Ideal actuation vector with two derivatives along the closed loop.

    The error rate uses the thrust actually applied (direction lam at the
    commanded magnitude), which is what the true time derivative sees.
    """
    e_p = x[:2] - traj.pos
    e_v = x[2:] - traj.d1
    a_star = traj.d2 + GRAVITY * E2 - gains.k_x * e_p - gains.k_v * e_v

    u1 = math.hypot(a_star[0], a_star[1])
    a_app = lam * u1
    ep_dot = e_v
    ev_dot = a_app - GRAVITY * E2 - traj.d2
    a_star_dot = traj.d3 - gains.k_x * ep_dot - gains.k_v * ev_dot

    u1_dot = (a_star[0] * a_star_dot[0] + a_star[1] * a_star_dot[1]) / u1 if u1 > 0.0 else 0.0
    a_app_dot = np.array([-lam[1], lam[0]]) * (omega * u1) + lam * u1_dot
    ep_ddot = ev_dot
    ev_ddot = a_app_dot - traj.d3
    a_star_ddot = traj.d4 - gains.k_x * ep_ddot - gains.k_v * ev_ddot

    return ActuationTarget(a_star, a_star_dot, a_star_ddot)


# -- generic vehicle hooks -----------------------------------------------------


@dataclass(frozen=True)
class VehicleModel:
    """Hook bundle for a vehicle usable by the simulator.

    kappa_dot/kappa_ddot are total derivatives given the error rates;
    error_ddot supplies the model-specific second error derivative (it
    sees the applied actuation and its rate).
    """

    n: int
    f: Callable
    input_map: Callable
    kappa: Callable
    kappa_dot: Callable
    kappa_ddot: Callable
    state_ref: Callable
    state_ref_dot: Callable
    error_ddot: Callable
    input_gain_bound: float = 1.0


def register_vehicle(
    n: int,
    f: Callable,
    input_map: Callable,
    kappa: Callable,
    kappa_dot: Callable,
    kappa_ddot: Callable,
    state_ref: Callable,
    state_ref_dot: Callable,
    error_ddot: Callable,
    probe_states: list | None = None,
) -> VehicleModel:
    """Validate and bundle vehicle hooks.

    Every hook is required (the actuation-derivative chain cannot run
    without them), and the input map must have full column rank at the
    probe states.
    """
    hooks = {
        "f": f,
        "input_map": input_map,
        "kappa": kappa,
        "kappa_dot": kappa_dot,
        "kappa_ddot": kappa_ddot,
        "state_ref": state_ref,
        "state_ref_dot": state_ref_dot,
        "error_ddot": error_ddot,
    }
    for name, hook in hooks.items():
        if hook is None:
            raise ValueError(f"vehicle registration requires hook {name!r}")
    if probe_states is None:
        probe_states = [np.zeros(n), 0.5 * np.ones(n), np.array([(-1.0) ** i for i in range(n)])]
    bound = 0.0
    for i, xp in enumerate(probe_states):
        g = np.asarray(input_map(0.3 * i, np.asarray(xp, dtype=float)))
        if g.shape != (n, 2):
            raise ValueError(f"input map must return shape ({n}, 2), got {g.shape}")
        if np.linalg.matrix_rank(g, tol=1e-9) < 2:
            raise ValueError(f"input map is rank deficient at probe state {i}")
        bound = max(bound, float(np.linalg.norm(g, 2)))
    return VehicleModel(
        n=n,
        input_gain_bound=bound,
        **hooks,
    )


def planar_multirotor(gains: BaselineGains) -> VehicleModel:
    """The built-in vehicle; hooks delegate to the module-level functions."""

    def kappa(t, e, traj):
        return traj.d2 + GRAVITY * E2 - gains.k_x * e[:2] - gains.k_v * e[2:]

    def kappa_dot(t, e, e_dot, traj):
        return traj.d3 - gains.k_x * e_dot[:2] - gains.k_v * e_dot[2:]

    def kappa_ddot(t, e, e_dot, e_ddot, traj):
        return traj.d4 - gains.k_x * e_ddot[:2] - gains.k_v * e_ddot[2:]

    def state_ref_dot(traj):
        return np.concatenate([traj.d1, traj.d2])

    def error_ddot(t, x, e_dot, a_app, a_app_dot, traj):
        return np.concatenate([e_dot[2:], a_app_dot - traj.d3])

    return register_vehicle(
        n=4,
        f=multirotor_f,
        input_map=multirotor_input_map,
        kappa=kappa,
        kappa_dot=kappa_dot,
        kappa_ddot=kappa_ddot,
        state_ref=state_reference,
        state_ref_dot=state_ref_dot,
        error_ddot=error_ddot,
    )


def toy_integrator(k_p: float = 2.0) -> VehicleModel:
    """Velocity-controlled point (state rate equals actuation): the
    smallest vehicle exercising the generic hook path."""

    def f(t, x):
        return np.zeros(2)

    def input_map(t, x):
        return np.eye(2)

    def kappa(t, e, traj):
        return traj.d1 - k_p * e

    def kappa_dot(t, e, e_dot, traj):
        return traj.d2 - k_p * e_dot

    def kappa_ddot(t, e, e_dot, e_ddot, traj):
        return traj.d3 - k_p * e_ddot

    def state_ref(traj):
        return traj.pos

    def state_ref_dot(traj):
        return traj.d1

    def error_ddot(t, x, e_dot, a_app, a_app_dot, traj):
        return a_app_dot - traj.d2

    return register_vehicle(
        n=2,
        f=f,
        input_map=input_map,
        kappa=kappa,
        kappa_dot=kappa_dot,
        kappa_ddot=kappa_ddot,
        state_ref=state_ref,
        state_ref_dot=state_ref_dot,
        error_ddot=error_ddot,
    )


def model_actuation_target(
    model: VehicleModel,
    t: float,
    x: np.ndarray,
    lam: np.ndarray,
    omega: float,
    traj: TrajectorySample,
) -> ActuationTarget:
    """Generic version of actuation_target driven by vehicle hooks."""
    e = x - model.state_ref(traj)
    a_star = np.asarray(model.kappa(t, e, traj), dtype=float)

    u1 = math.hypot(a_star[0], a_star[1])
    a_app = lam * u1
    e_dot = model.f(t, x) + model.input_map(t, x) @ a_app - model.state_ref_dot(traj)
    a_star_dot = np.asarray(model.kappa_dot(t, e, e_dot, traj), dtype=float)

    u1_dot = (a_star[0] * a_star_dot[0] + a_star[1] * a_star_dot[1]) / u1 if u1 > 0.0 else 0.0
    a_app_dot = np.array([-lam[1], lam[0]]) * (omega * u1) + lam * u1_dot
    e_ddot = model.error_ddot(t, x, e_dot, a_app, a_app_dot, traj)
    a_star_ddot = np.asarray(model.kappa_ddot(t, e, e_dot, e_ddot, traj), dtype=float)

    return ActuationTarget(a_star, a_star_dot, a_star_ddot)


# -- linear disturbance gain ---------------------------------------------------

_ISS_CACHE: dict[tuple[float, float], float] = {}


def _iss_integral(k_x: float, k_v: float) -> float:
    # integral over [0, inf) of the spectral norm of exp(A s) B for the
    # closed-loop error system; the integrand decays exponentially, so
    # truncate once it is negligible
    A = np.block([[np.zeros((2, 2)), np.eye(2)], [-k_x * np.eye(2), -k_v * np.eye(2)]])
    B = np.vstack([np.zeros((2, 2)), np.eye(2)])
    ds = 1e-3
    E = expm(A * ds)
    phi = np.eye(4)
    vals = []
    s = 0.0
    while True:
        v = np.linalg.norm(phi @ B, 2)
        vals.append(v)
        if (v < 1e-12 and s > 1.0) or s > 200.0:
            break
        phi = E @ phi
        s += ds
    return float(simpson(np.array(vals), dx=ds))


def linear_iss_gain(d: float, gains: BaselineGains) -> float:
    """Ultimate bound on the tracking-error norm under a disturbance of
    norm at most d, for the linear baseline closed loop."""
    key = (gains.k_x, gains.k_v)
    if key not in _ISS_CACHE:
        _ISS_CACHE[key] = _iss_integral(*key)
    return d * _ISS_CACHE[key]
