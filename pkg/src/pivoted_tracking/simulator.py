"""Deterministic closed-loop simulation and certificate checking.

Fixed-step classical Runge-Kutta on the coupled (vehicle, pivot,
attitude-coordinate) system, with the attitude-coordinate switching rule
applied at step boundaries. Two controller modes: the redesigned
set-based law ("put"), and a deliberately naive direction-tracking
backstepping law ("naive") that divides by the ideal-actuation norm
without gating and therefore meets the free-fall singularity.

Runs are bit-reproducible: same config, same log. A numba fast path
(engine.py) accelerates the built-in vehicle; the reference path here is
plain Python and also serves generic registered vehicles.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry, inner_loop, outer_loop
from .geometry import MrpCoordinate, TargetBall
from .inner_loop import ETA_CAP, ActuationTarget, ControllerParams, InnerState, PivotState
from .outer_loop import BaselineGains, VehicleModel

SINGULARITY_THRESHOLD = 1e-6

LOG_COLUMNS = (
    "t",
    "x1", "x2", "v1", "v2",
    "ep1", "ep2", "ev1", "ev2",
    "lam1", "lam2", "omega", "eta", "eta_valid",
    "u1", "u2", "astar1", "astar2",
    "ball_dist", "V_a", "V_omega", "V",
    "switch_event", "singular",
)

LOG_FORMAT_VERSION = 1


class SimulationDiverged(RuntimeError):
    """A state or control became non-finite during integration."""


@dataclass(frozen=True)
class SimConfig:
    step_size: float = 1e-3
    duration: float = 30.0
    controller: ControllerParams = field(default_factory=ControllerParams)
    gains: BaselineGains = field(default_factory=BaselineGains)
    trajectory: str = "square"
    mode: str = "put"  # put | naive
    x0: np.ndarray | None = None  # None: start on the reference
    lam0: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    omega0: float = 0.0
    hold_inputs: bool = False  # zero-order hold on (u1, u2) across RK stages
    engine: str = "auto"  # auto | fast | reference
    model: VehicleModel | None = None  # None: built-in planar multirotor

    def __post_init__(self):
        if self.step_size <= 0.0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.duration < self.step_size:
            raise ValueError(f"duration must be at least one step, got {self.duration}")
        if self.mode not in ("put", "naive"):
            raise ValueError(f"mode must be 'put' or 'naive', got {self.mode!r}")
        if self.engine not in ("auto", "fast", "reference"):
            raise ValueError(f"engine must be auto/fast/reference, got {self.engine!r}")
        norm = math.hypot(self.lam0[0], self.lam0[1])
        if not norm > 0.0:
            raise ValueError("lam0 must be a nonzero direction")

    @property
    def n_steps(self) -> int:
        return round(self.duration / self.step_size)


@dataclass
class SimLog:
    """Column store of per-step records; one row per step boundary."""

    t: np.ndarray
    x: np.ndarray
    e: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    eta: np.ndarray
    eta_valid: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    a_star: np.ndarray
    ball_dist: np.ndarray
    v_att: np.ndarray
    v_rate: np.ndarray
    v_total: np.ndarray
    switch_event: np.ndarray
    singular: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def row(self, k: int) -> dict:
        return {name: v for name, v in zip(LOG_COLUMNS, self._row_values(k))}

    def _row_values(self, k: int):
        return (
            float(self.t[k]),
            float(self.x[k, 0]), float(self.x[k, 1]), float(self.x[k, 2]), float(self.x[k, 3]),
            float(self.e[k, 0]), float(self.e[k, 1]), float(self.e[k, 2]), float(self.e[k, 3]),
            float(self.lam[k, 0]), float(self.lam[k, 1]), float(self.omega[k]), float(self.eta[k]),
            int(self.eta_valid[k]),
            float(self.u1[k]), float(self.u2[k]), float(self.a_star[k, 0]), float(self.a_star[k, 1]),
            float(self.ball_dist[k]), float(self.v_att[k]), float(self.v_rate[k]), float(self.v_total[k]),
            int(self.switch_event[k]), int(self.singular[k]),
        )

    def error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e, axis=1)

    def to_csv(self, path) -> None:
        # repr() floats: shortest exact round-trip, so identical runs give
        # byte-identical artifacts
        with open(path, "w") as fh:
            fh.write(f"# pivoted-tracking log v{LOG_FORMAT_VERSION}\n")
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for k in range(len(self)):
                fh.write(",".join(repr(v) for v in self._row_values(k)) + "\n")


def _empty_log(n_rows: int, n_state: int = 4) -> SimLog:
    return SimLog(
        t=np.zeros(n_rows),
        x=np.zeros((n_rows, n_state)),
        e=np.zeros((n_rows, n_state)),
        lam=np.zeros((n_rows, 2)),
        omega=np.zeros(n_rows),
        eta=np.zeros(n_rows),
        eta_valid=np.zeros(n_rows, dtype=np.int8),
        u1=np.zeros(n_rows),
        u2=np.zeros(n_rows),
        a_star=np.zeros((n_rows, 2)),
        ball_dist=np.zeros(n_rows),
        v_att=np.zeros(n_rows),
        v_rate=np.zeros(n_rows),
        v_total=np.zeros(n_rows),
        switch_event=np.zeros(n_rows, dtype=np.int8),
        singular=np.zeros(n_rows, dtype=np.int8),
    )


@dataclass
class RunResult:
    log: SimLog
    config: SimConfig
    completed: bool
    singular_event: dict | None
    switch_steps: np.ndarray
    switch_residuals: np.ndarray
    norm_drift_max: float
    eta_drift_max: float
    eta_cap_events: int
    engine_used: str
    wall_time: float


# -- naive direction-tracking law ----------------------------------------------


def naive_rate_setpoint(target: ActuationTarget, lam: np.ndarray, k_eta: float) -> float:
    """Angle-error backstepping setpoint with ungated division by the norm."""
    a, ad = target.a_star, target.a_star_dot
    n = math.hypot(a[0], a[1])
    lam_star = a / n
    theta = geometry.signed_angle(lam, lam_star)
    ideal_spin = (a[0] * ad[1] - a[1] * ad[0]) / (n * n)
    return ideal_spin - k_eta * theta


def naive_accel_command(
    target: ActuationTarget, lam: np.ndarray, omega: float, k_eta: float, k_omega: float
) -> float:
    a, ad, add = target.a_star, target.a_star_dot, target.a_star_ddot
    n = math.hypot(a[0], a[1])
    lam_star = a / n
    theta = geometry.signed_angle(lam, lam_star)
    ndot = (a[0] * ad[0] + a[1] * ad[1]) / n
    ideal_spin = (a[0] * ad[1] - a[1] * ad[0]) / (n * n)
    ideal_spin_dot = (a[0] * add[1] - a[1] * add[0]) / (n * n) - 2.0 * ideal_spin * ndot / n
    ws = ideal_spin - k_eta * theta
    ws_dot = ideal_spin_dot - k_eta * (omega - ideal_spin)
    return ws_dot - k_omega * (omega - ws)


# -- reference engine ----------------------------------------------------------


def _make_target_fn(config: SimConfig, traj_fn: Callable) -> Callable:
    if config.model is None:
        gains = config.gains

        def target_fn(t, x, lam, omega):
            return outer_loop.actuation_target(t, x, lam, omega, traj_fn(t), gains)

    else:
        model = config.model

        def target_fn(t, x, lam, omega):
            return outer_loop.model_actuation_target(model, t, x, lam, omega, traj_fn(t))

    return target_fn


def _stage_eta(eta: float, eta_valid: bool, lam: np.ndarray, target: ActuationTarget) -> tuple[float, bool]:
    # Mid-step recovery: if the coordinate is invalid but the ideal vector
    # is nonzero again, anchor to the principal branch for this stage.
    if eta_valid:
        return eta, True
    n = inner_loop.thrust_command(target)
    if n > 0.0:
        theta = geometry.signed_angle(lam, target.a_star / n)
        return geometry.mrp_from_angle(theta), True
    return 0.0, False


def _put_controls(
    t: float, x, lam, omega: float, eta: float, eta_valid: bool, config: SimConfig, target_fn
) -> tuple[float, float, float, ActuationTarget]:
    """(u1, u2, eta_dot, target) at one evaluation point."""
    params = config.controller
    target = target_fn(t, x, lam, omega)
    eta_s, valid_s = _stage_eta(eta, eta_valid, lam, target)
    n = inner_loop.thrust_command(target)
    state = InnerState(PivotState(lam, omega), MrpCoordinate(eta_s, valid=valid_s))
    u2 = inner_loop.pivot_accel_command(state, target, params)
    if valid_s and n >= params.switching_floor:
        eta_dot = inner_loop.mrp_rate(state, target)
    else:
        eta_dot = 0.0
    return n, u2, eta_dot, target


def _naive_controls(
    t: float, x, lam, omega: float, eta: float, eta_valid: bool, config: SimConfig, target_fn
) -> tuple[float, float, float, ActuationTarget]:
    params = config.controller
    target = target_fn(t, x, lam, omega)
    u1 = inner_loop.thrust_command(target)
    u2 = naive_accel_command(target, lam, omega, params.k_eta, params.k_omega)
    return u1, u2, 0.0, target


def _integrate_reference(
    config: SimConfig,
    traj_fn: Callable,
    t0: float,
    y0: np.ndarray,
    eta_valid0: bool,
    n_steps: int,
):
    """Core fixed-step loop from an arbitrary start state.

    y layout: [vehicle state (n), lam (2), omega, eta]. Returns the raw
    state history plus per-step drift/cap bookkeeping; switching is NOT
    applied here (run() owns boundary logic) except for the stage-local
    anchoring of an invalid coordinate.
    """
    model = config.model
    n_state = 4 if model is None else model.n
    h = config.step_size
    controls = _put_controls if config.mode == "put" else _naive_controls
    target_fn = _make_target_fn(config, traj_fn)

    if model is None:
        def vehicle_rate(t, x, a_app):
            return np.array([x[2], x[3], a_app[0], a_app[1] - outer_loop.GRAVITY])
    else:
        def vehicle_rate(t, x, a_app):
            return model.f(t, x) + model.input_map(t, x) @ a_app

    def deriv(t, y, eta_valid, held):
        x = y[:n_state]
        lam = y[n_state : n_state + 2]
        omega = y[n_state + 2]
        eta = y[n_state + 3]
        if held is None:
            u1, u2, eta_dot, _ = controls(t, x, lam, omega, eta, eta_valid, config, target_fn)
        else:
            u1, u2, eta_dot = held
        a_app = lam * u1
        dx = vehicle_rate(t, x, a_app)
        dlam = np.array([-lam[1], lam[0]]) * omega
        out = np.concatenate([dx, dlam, [u2, eta_dot]])
        if not np.all(np.isfinite(out)):
            raise SimulationDiverged(f"non-finite derivative at t={t}")
        return out

    ys = np.zeros((n_steps + 1, len(y0)))
    ys[0] = y0
    drift_max = 0.0
    cap_events = 0
    y = y0.copy()
    for k in range(n_steps):
        t = t0 + k * h
        if config.hold_inputs:
            x = y[:n_state]
            lam = y[n_state : n_state + 2]
            u1, u2, eta_dot, _ = controls(
                t, x, lam, y[n_state + 2], y[n_state + 3], eta_valid0, config, target_fn
            )
            held = (u1, u2, eta_dot)
        else:
            held = None
        k1 = deriv(t, y, eta_valid0, held)
        k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1, eta_valid0, held)
        k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2, eta_valid0, held)
        k4 = deriv(t + h, y + h * k3, eta_valid0, held)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        lam = y[n_state : n_state + 2]
        norm = math.hypot(lam[0], lam[1])
        drift_max = max(drift_max, abs(norm - 1.0))
        y[n_state : n_state + 2] = lam / norm

        if abs(y[n_state + 3]) > ETA_CAP:
            y[n_state + 3] = math.copysign(ETA_CAP, y[n_state + 3])
            cap_events += 1
        ys[k + 1] = y
    return ys, drift_max, cap_events


def _project_eta(eta: float, lam: np.ndarray, a_star: np.ndarray, n: float) -> tuple[float, float]:
    """Snap the integrated coordinate back onto tan(angle/4).

    The coordinate and the pivot direction are integrated separately, so
    their errors differ; without this the coordinate slowly decoheres
    from the true angle and the controller regulates a fiction. The
    branch (winding) of the integrated value is kept; only the fractional
    angle is corrected. Returns (projected value, |correction| in rad).
    """
    theta_snap = geometry.signed_angle(lam, a_star / n)
    theta_eta = 4.0 * math.atan(eta)
    theta = theta_snap + geometry.TWO_PI * round((theta_eta - theta_snap) / geometry.TWO_PI)
    if theta >= geometry.TWO_PI:
        theta -= geometry.TWO_PI
    elif theta <= -geometry.TWO_PI:
        theta += geometry.TWO_PI
    return math.tan(0.25 * theta), abs(theta_eta - theta)


def _segment_origin_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Distance from the origin to the segment [p, q] in the plane."""
    d = q - p
    dd = d[0] * d[0] + d[1] * d[1]
    if dd == 0.0:
        return math.hypot(p[0], p[1])
    tau = -(p[0] * d[0] + p[1] * d[1]) / dd
    tau = min(1.0, max(0.0, tau))
    c = p + tau * d
    return math.hypot(c[0], c[1])


def run(config: SimConfig) -> RunResult:
    """Simulate per config and return the full log plus run bookkeeping."""
    t_begin = time.perf_counter()
    engine = _resolve_engine(config)
    if engine == "fast":
        from . import engine as fast_engine

        result = fast_engine.run_fast(config)
        result.wall_time = time.perf_counter() - t_begin
        return result
    result = _run_reference(config)
    result.wall_time = time.perf_counter() - t_begin
    return result


def _resolve_engine(config: SimConfig) -> str:
    supported = (
        config.model is None
        and config.mode == "put"
        and config.trajectory in ("square", "hover")
        and not config.hold_inputs
    )
    if config.engine == "fast":
        if not supported:
            raise ValueError(
                "fast engine supports only the built-in vehicle in put mode "
                "without input hold; use engine='reference'"
            )
        return "fast"
    if config.engine == "reference":
        return "reference"
    return "fast" if supported else "reference"


def _run_reference(config: SimConfig) -> RunResult:
    params = config.controller
    gains = config.gains
    traj_fn = outer_loop.make_trajectory(config.trajectory)
    model = config.model
    n_state = 4 if model is None else model.n
    target_fn = _make_target_fn(config, traj_fn)
    naive = config.mode == "naive"

    if config.x0 is None:
        if model is None:
            x = outer_loop.state_reference(traj_fn(0.0))
        else:
            x = np.asarray(model.state_ref(traj_fn(0.0)), dtype=float)
    else:
        x = np.asarray(config.x0, dtype=float)
        if x.shape != (n_state,):
            raise ValueError(f"x0 must have shape ({n_state},), got {x.shape}")
    lam = np.asarray(config.lam0, dtype=float)
    lam = lam / math.hypot(lam[0], lam[1])
    omega = float(config.omega0)

    # initialize the attitude coordinate on the principal branch
    target = target_fn(0.0, x, lam, omega)
    n0 = inner_loop.thrust_command(target)
    if n0 > 0.0:
        eta = geometry.mrp_from_angle(geometry.signed_angle(lam, target.a_star / n0))
        eta_valid = True
    else:
        eta, eta_valid = 0.0, False

    n_steps = config.n_steps
    log = _empty_log(n_steps + 1, n_state)
    switch_steps: list[int] = []
    switch_residuals: list[float] = []
    singular_event = None
    drift_max = 0.0
    cap_events = 0
    eta_drift_max = 0.0

    y = np.concatenate([x, lam, [omega, eta]])
    h = config.step_size
    prev_astar = target.a_star.copy()
    _log_row(log, 0, 0.0, y, eta_valid, config, target_fn, traj_fn, n_state, False, False)

    rows_filled = n_steps + 1
    completed = True
    for k in range(1, n_steps + 1):
        try:
            ys, drift, caps = _integrate_reference(config, traj_fn, (k - 1) * h, y, eta_valid, 1)
        except SimulationDiverged:
            if not naive:
                raise
            # an ungated division hit the degenerate point mid-stage
            singular_event = {"step": k, "t": k * h, "kind": "nonfinite"}
            rows_filled = k
            completed = False
            break
        y = ys[1]
        drift_max = max(drift_max, drift)
        cap_events += caps
        t = k * h

        x = y[:n_state]
        lam = y[n_state : n_state + 2]
        omega = y[n_state + 2]
        target = target_fn(t, x, lam, omega)

        switched = False
        if naive:
            n = inner_loop.thrust_command(target)
            crossing = _segment_origin_distance(prev_astar, target.a_star)
            if n < SINGULARITY_THRESHOLD or crossing < SINGULARITY_THRESHOLD:
                singular_event = {
                    "step": k,
                    "t": t,
                    "a_star_norm": n,
                    "crossing_distance": crossing,
                }
                _log_row(log, k, t, y, eta_valid, config, target_fn, traj_fn, n_state, False, True)
                rows_filled = k + 1
                completed = False
                break
            prev_astar = target.a_star.copy()
        else:
            n = inner_loop.thrust_command(target)
            if eta_valid and n > 0.0:
                y[n_state + 3], corr = _project_eta(y[n_state + 3], lam, target.a_star, n)
                if n >= params.switching_floor:
                    # inside the zone the coordinate is frozen and about to be
                    # re-anchored, so the correction there is re-measurement,
                    # not drift
                    eta_drift_max = max(eta_drift_max, corr)
            state = InnerState(
                PivotState(lam.copy(), omega),
                MrpCoordinate(y[n_state + 3], valid=eta_valid),
            )
            new_state, changed = inner_loop.apply_switching(state, target, params)
            # every boundary inside the switching zone applies the
            # re-anchoring rule and counts as an event, value change or not
            switched = changed or n < params.switching_floor
            if switched:
                u2_before = _u2_or_nan(state, target, params)
                u2_after = _u2_or_nan(new_state, target, params)
                switch_steps.append(k)
                switch_residuals.append(abs(u2_after - u2_before))
                y[n_state + 3] = new_state.eta.value if new_state.eta.valid else 0.0
                eta_valid = new_state.eta.valid
        _log_row(log, k, t, y, eta_valid, config, target_fn, traj_fn, n_state, switched, False)

    log = _truncate_log(log, rows_filled)
    return RunResult(
        log=log,
        config=config,
        completed=completed,
        singular_event=singular_event,
        switch_steps=np.array(switch_steps, dtype=np.int64),
        switch_residuals=np.array(switch_residuals),
        norm_drift_max=drift_max,
        eta_drift_max=eta_drift_max,
        eta_cap_events=cap_events,
        engine_used="reference",
        wall_time=0.0,
    )


def _u2_or_nan(state: InnerState, target: ActuationTarget, params: ControllerParams) -> float:
    # an invalid coordinate at zero norm is a legitimate pre-switch state;
    # the command there is still defined (angle-blind)
    try:
        return inner_loop.pivot_accel_command(state, target, params)
    except ValueError:
        return math.nan


def _log_row(log, k, t, y, eta_valid, config, target_fn, traj_fn, n_state, switched, singular):
    x = y[:n_state]
    lam = y[n_state : n_state + 2]
    omega = y[n_state + 2]
    eta = y[n_state + 3]
    traj = traj_fn(t)
    target = target_fn(t, x, lam, omega)
    params = config.controller
    u1 = inner_loop.thrust_command(target)
    ball = TargetBall(center=target.a_star, radius=params.r)
    a_applied = lam * u1

    if config.model is None:
        ref = outer_loop.state_reference(traj)
    else:
        ref = np.asarray(config.model.state_ref(traj), dtype=float)

    log.t[k] = t
    log.x[k] = x
    log.e[k] = x - ref
    log.lam[k] = lam
    log.omega[k] = omega
    log.eta[k] = eta
    log.eta_valid[k] = 1 if eta_valid else 0
    log.u1[k] = u1
    log.a_star[k] = target.a_star
    log.ball_dist[k] = geometry.ball_distance(a_applied, ball)
    log.switch_event[k] = 1 if switched else 0
    log.singular[k] = 1 if singular else 0

    if config.mode == "put":
        state = InnerState(PivotState(lam, omega), MrpCoordinate(eta, valid=eta_valid))
        log.u2[k] = _u2_or_nan(state, target, params)
        va, vo, v = inner_loop.lyapunov_components(state, target, params)
        log.v_att[k] = va
        log.v_rate[k] = vo
        log.v_total[k] = v
    else:
        log.u2[k] = naive_accel_command(target, lam, omega, params.k_eta, params.k_omega)
        log.v_att[k] = 0.0
        log.v_rate[k] = 0.0
        log.v_total[k] = 0.0


def _truncate_log(log: SimLog, rows: int) -> SimLog:
    if rows == len(log):
        return log
    return SimLog(**{name: getattr(log, name)[:rows] for name in log.__dataclass_fields__})


# -- certificates ----------------------------------------------------------------

ENVELOPE_TOLERANCE = 1.02
ENVELOPE_FLOOR = 1e-9
MU_TOLERANCE = 1.05
MU_FLOOR = 1e-12
TERMINAL_BALL_TOLERANCE = 1e-3
SWITCH_RESIDUAL_TOLERANCE = 1e-9
FINAL_WINDOW = 5.0


@dataclass
class CertificateReport:
    envelope_ratio_max: float
    envelope_ok: bool
    peak_decay_ratio_max: float
    terminal_ball_distance: float
    terminal_ball_ok: bool
    mu_ratio_max: float
    mu_ok: bool
    pointwise_mu_ratio_max: float
    final_window_error_max: float
    iss_bound: float
    iss_ok: bool
    input_gain_bound: float
    switch_residual_max: float
    switch_ok: bool
    switch_event_count: int
    max_events_per_second: int
    norm_drift_max: float
    eta_cap_events: int
    passed: bool

    def to_dict(self) -> dict:
        return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in self.__dict__.items()}

    def format_text(self) -> str:
        d = self.to_dict()
        lines = ["certificate report"]
        for key, val in d.items():
            lines.append(f"  {key} = {val}")
        return "\n".join(lines)


def _segments(n_rows: int, switch_steps: np.ndarray) -> list[tuple[int, int]]:
    """Half-open row ranges between switching events (event row starts a
    new segment, since the logged row is post-switch)."""
    starts = [0] + [int(s) for s in switch_steps if 0 < s < n_rows]
    starts = sorted(set(starts))
    bounds = starts + [n_rows]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _mu_memo(params: ControllerParams):
    cache: dict[float, float] = {}

    def mu(v: float) -> float:
        if v not in cache:
            cache[v] = inner_loop.set_distance_bound(v, params)
        return cache[v]

    return mu


def certify(result: RunResult) -> CertificateReport:
    """Check the decay, set-distance, ultimate-bound, and continuity
    certificates on a completed run of the redesigned controller."""
    if result.config.mode != "put":
        raise ValueError("certificates apply to put mode runs")
    log = result.log
    cfg = result.config
    params = cfg.controller
    k_rate = params.decay_rate
    n_rows = len(log)
    segs = _segments(n_rows, result.switch_steps)

    # exponential-decay envelope anchored at each segment's start; the
    # peak-anchored variant below is a diagnostic for post-transient decay
    ratio_max = 0.0
    peak_ratio_max = 0.0
    for lo, hi in segs:
        v = log.v_total[lo:hi]
        t = log.t[lo:hi]
        if len(v) < 2 or np.max(v) <= ENVELOPE_FLOOR:
            continue
        env = v[0] * np.exp(-k_rate * (t - t[0])) + ENVELOPE_FLOOR
        ratio_max = max(ratio_max, float(np.max(v / env)))
        p = int(np.argmax(v))
        env_p = v[p] * np.exp(-k_rate * (t[p:] - t[p])) + ENVELOPE_FLOOR
        peak_ratio_max = max(peak_ratio_max, float(np.max(v[p:] / env_p)))
    envelope_ok = ratio_max <= ENVELOPE_TOLERANCE

    # set-distance bound from sampled anchor times
    mu = _mu_memo(params)
    seg_of = np.zeros(n_rows, dtype=np.int64)
    for i, (lo, hi) in enumerate(segs):
        seg_of[lo:hi] = i
    sample_rows = [int(round(j * (n_rows - 1) / 10)) for j in range(10)]
    mu_ratio_max = 0.0
    for row in sample_rows:
        lo, hi = segs[seg_of[row]]
        vT = log.v_total[row]
        tT = log.t[row]
        for j in range(row, hi):
            bd = log.ball_dist[j]
            if bd == 0.0:
                continue
            bound = mu(vT * math.exp(-k_rate * (log.t[j] - tT)))
            mu_ratio_max = max(mu_ratio_max, bd / (bound + MU_FLOOR))
    mu_ok = mu_ratio_max <= MU_TOLERANCE

    # pointwise variant (diagnostic): distance against mu of the current V
    pw_max = 0.0
    for j in range(n_rows):
        bd = log.ball_dist[j]
        if bd > 0.0:
            pw_max = max(pw_max, bd / (mu(log.v_total[j]) + MU_FLOOR))

    terminal_bd = float(log.ball_dist[-1])
    terminal_ok = terminal_bd <= TERMINAL_BALL_TOLERANCE

    gbar = 1.0 if cfg.model is None else cfg.model.input_gain_bound
    iss_bound = outer_loop.linear_iss_gain(gbar * params.r, cfg.gains)
    mask = log.t >= log.t[-1] - FINAL_WINDOW
    final_err = float(np.max(log.error_norm()[mask]))
    iss_ok = final_err <= iss_bound

    switch_res_max = float(np.max(result.switch_residuals)) if len(result.switch_residuals) else 0.0
    switch_ok = switch_res_max <= SWITCH_RESIDUAL_TOLERANCE

    events_per_s = 0
    if len(result.switch_steps):
        t_ev = log.t[result.switch_steps]
        events_per_s = int(max(np.sum((t_ev >= s) & (t_ev < s + 1.0)) for s in range(int(log.t[-1]) + 1)))

    return CertificateReport(
        envelope_ratio_max=ratio_max,
        envelope_ok=envelope_ok,
        peak_decay_ratio_max=peak_ratio_max,
        terminal_ball_distance=terminal_bd,
        terminal_ball_ok=terminal_ok,
        mu_ratio_max=mu_ratio_max,
        mu_ok=mu_ok,
        pointwise_mu_ratio_max=pw_max,
        final_window_error_max=final_err,
        iss_bound=iss_bound,
        iss_ok=iss_ok,
        input_gain_bound=gbar,
        switch_residual_max=switch_res_max,
        switch_ok=switch_ok,
        switch_event_count=len(result.switch_steps),
        max_events_per_second=events_per_s,
        norm_drift_max=result.norm_drift_max,
        eta_cap_events=result.eta_cap_events,
        passed=envelope_ok and terminal_ok and mu_ok and iss_ok and switch_ok,
    )


# -- integrator-order study ------------------------------------------------------


def richardson_ratio(
    config: SimConfig | None = None,
    t0: float = 0.5,
    t1: float = 1.5,
    h: float = 1e-3,
    h_ref: float = 1e-4,
) -> float:
    """Error ratio between step sizes h and h/2 on [t0, t1], against an
    h_ref reference started from the same state; ~16 for a 4th-order method."""
    if config is None:
        config = SimConfig()
    cfg_anchor = SimConfig(
        step_size=h_ref,
        duration=max(t0, h_ref),
        controller=config.controller,
        gains=config.gains,
        trajectory=config.trajectory,
        mode="put",
        x0=config.x0,
        lam0=config.lam0,
        omega0=config.omega0,
        engine=config.engine,
    )
    anchor = run(cfg_anchor)
    lg = anchor.log
    y0 = np.concatenate([lg.x[-1], lg.lam[-1], [lg.omega[-1], lg.eta[-1]]])
    eta_valid0 = bool(lg.eta_valid[-1])
    traj_fn = outer_loop.make_trajectory(config.trajectory)

    def final_state(step: float) -> np.ndarray:
        n = round((t1 - t0) / step)
        cfg = SimConfig(
            step_size=step,
            duration=config.duration,
            controller=config.controller,
            gains=config.gains,
            trajectory=config.trajectory,
            engine=config.engine,
        )
        if _resolve_engine(cfg) == "fast":
            from . import engine as fast_engine

            return fast_engine.integrate_segment(cfg, t0, y0, eta_valid0, n)
        ys, _, _ = _integrate_reference(cfg, traj_fn, t0, y0, eta_valid0, n)
        return ys[-1]

    ref = final_state(h_ref)
    err_h = np.linalg.norm(final_state(h) - ref)
    err_half = np.linalg.norm(final_state(0.5 * h) - ref)
    return float(err_h / err_half)
