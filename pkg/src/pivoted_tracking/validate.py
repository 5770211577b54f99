"""Randomized property suites behind the `validate` subcommand.

Every suite draws from a seeded generator, so a run is reproducible from
its seed. Checks call the public functions through their module
attributes on purpose: patching e.g. geometry.halfwidth_smooth is a
supported way to fault-inject and watch the right suite fail. On
failure the minimal counterexample found is printed.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.integrate import quad

from . import geometry, inner_loop, outer_loop, shaping, simulator
from .inner_loop import ControllerParams, InnerState, MrpCoordinate, PivotState


@dataclasses.dataclass
class Failure:
    suite: str
    check: str
    detail: str

    def __str__(self) -> str:
        return f"{self.suite}/{self.check}: {self.detail}"


class Recorder:
    def __init__(self, suite: str):
        self.suite = suite
        self.failures: list[Failure] = []
        self.checks = 0

    def record(self, check: str, violations: list[tuple[float, str]]) -> None:
        """violations: (magnitude key, description); the smallest key is the
        minimal counterexample."""
        self.checks += 1
        if violations:
            violations.sort(key=lambda pair: pair[0])
            detail = f"{len(violations)} violation(s); minimal: {violations[0][1]}"
            self.failures.append(Failure(self.suite, check, detail))

    def ok(self, check: str, passed: bool, detail: str = "") -> None:
        self.checks += 1
        if not passed:
            self.failures.append(Failure(self.suite, check, detail))


def _log_uniform(rng: np.random.Generator, lo: float, hi: float, n: int) -> np.ndarray:
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


# -- shaping -------------------------------------------------------------------


def suite_shaping(rng: np.random.Generator) -> Recorder:
    rec = Recorder("shaping")
    n = 20_000

    u = rng.uniform(-2.0, 3.0, n)
    vals = np.array([shaping.smooth_step01(ui) for ui in u])
    bad = [(abs(ui), f"step01({ui}) = {vi}") for ui, vi in zip(u, vals)
           if not (0.0 <= vi <= 1.0)]
    rec.record("range", bad)

    bad = [(abs(ui), f"step01({ui}) = {vi} outside flat region")
           for ui, vi in zip(u, vals)
           if (ui <= 0.0 and vi != 0.0) or (ui >= 1.0 and vi != 1.0)]
    rec.record("flat_outside_support", bad)

    pairs = np.sort(rng.uniform(-0.5, 1.5, (n // 2, 2)), axis=1)
    bad = []
    for lo, hi in pairs:
        a, b = shaping.smooth_step01(lo), shaping.smooth_step01(hi)
        if a > b:
            bad.append((hi - lo, f"step01({lo}) = {a} > step01({hi}) = {b}"))
    rec.record("monotone", bad)

    # first derivative against a central difference
    bad = []
    for _ in range(300):
        s0 = rng.uniform(-1.0, 1.0)
        s1 = s0 + rng.uniform(0.05, 2.0)
        s = rng.uniform(s0 + 0.05 * (s1 - s0), s1 - 0.05 * (s1 - s0))
        h = 1e-6 * (s1 - s0)
        fd = (shaping.smooth_step(s + h, s0, s1) - shaping.smooth_step(s - h, s0, s1)) / (2 * h)
        an = shaping.smooth_step_deriv(s, s0, s1, 1)
        err = abs(an - fd) / max(1.0, abs(fd))
        if err > 1e-5:
            bad.append((err, f"step'({s}; {s0}, {s1}): analytic {an} vs fd {fd}"))
    rec.record("derivative_fd", bad)

    # ramp: flat at zero below, exact affine tail above, slope equals step
    bad = []
    for _ in range(2000):
        s0 = rng.uniform(-1.0, 1.0)
        s1 = s0 + rng.uniform(0.05, 2.0)
        s_lo = s0 - rng.uniform(0.0, 1.0)
        s_hi = s1 + rng.uniform(0.0, 1.0)
        v_lo = shaping.smooth_ramp(s_lo, s0, s1)
        v_hi = shaping.smooth_ramp(s_hi, s0, s1)
        if v_lo != 0.0:
            bad.append((abs(s_lo - s0), f"ramp({s_lo}; {s0}, {s1}) = {v_lo} below support"))
        tail = s_hi - 0.5 * (s0 + s1)
        if abs(v_hi - tail) > 1e-12 * max(1.0, abs(tail)):
            bad.append((abs(s_hi - s1), f"ramp({s_hi}; {s0}, {s1}) = {v_hi}, affine tail {tail}"))
    rec.record("ramp_support", bad)

    bad = []
    for _ in range(200):
        s0 = rng.uniform(-1.0, 1.0)
        s1 = s0 + rng.uniform(0.05, 2.0)
        s = rng.uniform(s0, s1)
        h = 1e-6 * (s1 - s0)
        fd = (shaping.smooth_ramp(s + h, s0, s1) - shaping.smooth_ramp(s - h, s0, s1)) / (2 * h)
        an = shaping.smooth_step(s, s0, s1)
        err = abs(an - fd)
        if err > 1e-5:
            bad.append((err, f"ramp'({s}; {s0}, {s1}): step {an} vs fd {fd}"))
    rec.record("ramp_slope_is_step", bad)

    # quadrature oracle: the ramp is the integral of the step
    bad = []
    for _ in range(12):
        s0 = rng.uniform(-1.0, 1.0)
        s1 = s0 + rng.uniform(0.1, 2.0)
        for s in rng.uniform(s0, s1, 4):
            ref, est_err = quad(shaping.smooth_step, s0, s, args=(s0, s1),
                                epsabs=1e-13, epsrel=1e-13, limit=200)
            got = shaping.smooth_ramp(s, s0, s1)
            err = abs(got - ref)
            if err > 1e-10:
                bad.append((err, f"ramp({s}; {s0}, {s1}) = {got}, quadrature {ref} (quad err {est_err:.1e})"))
    rec.record("ramp_quadrature", bad)
    return rec


# -- geometry ------------------------------------------------------------------


def suite_geometry(rng: np.random.Generator) -> Recorder:
    rec = Recorder("geometry")
    n = 100_000
    params = ControllerParams()

    # the smooth half-width never overestimates the exact one
    sigma = _log_uniform(rng, 1e-3, 1e3, n)
    bad = []
    for sv in sigma:
        smooth = geometry.halfwidth_smooth(sv)
        exact = geometry.halfwidth_exact(sv)
        if smooth > min(exact, geometry.TWO_PI) * (1.0 + 1e-12):
            bad.append((sv, f"halfwidth_smooth({sv}) = {smooth} > exact {exact}"))
        if smooth <= 0.0:
            bad.append((sv, f"halfwidth_smooth({sv}) = {smooth} not positive"))
    rec.record("underestimate", bad)

    # containment: an attitude inside the half-width keeps the applied
    # vector inside the ball (checked against the closed-form test)
    a_norm = _log_uniform(rng, 1e-2, 1e2, n)
    frac = rng.uniform(-1.0, 1.0, n)
    bad = []
    for nv, fv in zip(a_norm, frac):
        hw = geometry.mrp_halfwidth(nv, params.r)
        if hw.at_infinity:
            theta = fv * math.pi
        else:
            theta = 4.0 * math.atan(fv * hw.value)
        if not geometry.containment_check(nv, theta, params.r):
            bad.append((nv, f"norm {nv}, angle {theta} escapes the ball (halfwidth {hw})"))
    rec.record("containment", bad)

    # chord identity: the squared miss distance is 2 n^2 (1 - cos theta),
    # evaluated in the stable half-angle form (the raw difference loses
    # half the digits near zero angle)
    theta = rng.uniform(-math.pi, math.pi, n)
    phi = rng.uniform(-math.pi, math.pi, n)
    norms = _log_uniform(rng, 1e-2, 1e2, n)
    lam = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    lam_rot = np.stack([np.cos(phi + theta), np.sin(phi + theta)], axis=1)
    chord_sq = np.sum((norms[:, None] * (lam_rot - lam)) ** 2, axis=1)
    closed = (2.0 * norms * np.sin(0.5 * theta)) ** 2
    rel = np.abs(chord_sq - closed) / (np.abs(closed) + norms * norms * 1e-10)
    worst = int(np.argmax(rel))
    rec.ok("chord_identity", bool(np.all(rel < 1e-10)),
           f"norm {norms[worst]}, theta {theta[worst]}: chord^2 {chord_sq[worst]} vs {closed[worst]}")

    # gate identity: the alignment gate is exactly open on the support of
    # the containment-excess gate (parameter consistency)
    norms = _log_uniform(rng, 1e-2, 1e2, n)
    etas = rng.standard_cauchy(n)
    bad = []
    for nv, ev in zip(norms, etas):
        hw = geometry.mrp_halfwidth(nv, params.r)
        if hw.at_infinity:
            continue
        excess = shaping.smooth_step(nv * (abs(ev) - hw.value), 0.0, params.delta_a)
        if excess == 0.0:
            continue
        gate = shaping.smooth_step(abs(ev) / hw.value, params.rho, 1.0)
        if gate * excess != excess:
            bad.append((abs(ev), f"norm {nv}, eta {ev}: gate {gate} truncates excess {excess}"))
    rec.record("gate_identity", bad)

    # signed angle: antisymmetric, range (-pi, pi], zero only at alignment
    bad = []
    for _ in range(5000):
        p, q = rng.uniform(-math.pi, math.pi, 2)
        u = np.array([math.cos(p), math.sin(p)])
        v = np.array([math.cos(q), math.sin(q)])
        fwd = geometry.signed_angle(u, v)
        rev = geometry.signed_angle(v, u)
        if not (-math.pi < fwd <= math.pi):
            bad.append((abs(fwd), f"angle({p}, {q}) = {fwd} out of range"))
        elif fwd != math.pi and abs(fwd + rev) > 1e-12:
            bad.append((abs(fwd + rev), f"angle({p}, {q}) = {fwd}, reversed {rev}"))
    rec.record("signed_angle", bad)

    # half-width jet against finite differences of the scalar version
    # (norms kept away from the saturation cliff, where the coordinate
    # half-width blows up and differencing is meaningless)
    bad = []
    for _ in range(400):
        nv = float(_log_uniform(rng, 0.12, 50.0, 1)[0])
        nd = rng.normal(0.0, 5.0)
        ndd = rng.normal(0.0, 20.0)
        jet = geometry.mrp_halfwidth_jet(nv, nd, ndd, params.r)
        if jet is None:
            continue
        h = 1e-6

        def eta_of(dt):
            m = nv + nd * dt + 0.5 * ndd * dt * dt
            return geometry.mrp_halfwidth(m, params.r).value

        f0, fp, fm = eta_of(0.0), eta_of(h), eta_of(-h)
        if not (math.isfinite(f0) and math.isfinite(fp) and math.isfinite(fm)):
            continue
        fd1 = (fp - fm) / (2 * h)
        fd2 = (fp - 2 * f0 + fm) / (h * h)
        scale1 = max(1.0, abs(fd1))
        scale2 = max(10.0, abs(fd2))
        if abs(jet[1] - fd1) / scale1 > 1e-4 or abs(jet[2] - fd2) / scale2 > 1e-3:
            bad.append((nv, f"norm jet ({nv}, {nd}, {ndd}): jet ({jet[1]}, {jet[2]}) vs fd ({fd1}, {fd2})"))
    rec.record("halfwidth_jet_fd", bad)
    return rec


# -- inner loop ----------------------------------------------------------------


def suite_inner_loop(rng: np.random.Generator) -> Recorder:
    rec = Recorder("inner_loop")
    params = ControllerParams()

    def make_target(n: float, psi: float, d: np.ndarray):
        a_star = n * np.array([math.cos(psi), math.sin(psi)])
        return outer_loop.ActuationTarget(a_star=a_star, a_star_dot=d[:2].copy(),
                                          a_star_ddot=d[2:4].copy())

    # switching continuity: the pivot command is unchanged by the boundary
    # rule (the anchor only acts where every coordinate gate is flat)
    bad = []
    for _ in range(4000):
        n = rng.uniform(0.0, params.switching_floor * 0.999)
        psi = rng.uniform(-math.pi, math.pi)
        d = rng.normal(0.0, 3.0, 6)
        target = make_target(n, psi, d)
        phi = rng.uniform(-math.pi, math.pi)
        lam = np.array([math.cos(phi), math.sin(phi)])
        omega = rng.normal(0.0, 3.0)
        if rng.uniform() < 0.3:
            eta = MrpCoordinate(0.0, valid=False)
        else:
            eta = MrpCoordinate(rng.standard_cauchy(), valid=True)
        state = InnerState(PivotState(lam, omega), eta)
        new_state, _ = inner_loop.apply_switching(state, target, params)
        try:
            before = inner_loop.pivot_accel_command(state, target, params)
        except ValueError:
            continue
        after = inner_loop.pivot_accel_command(new_state, target, params)
        resid = abs(after - before)
        if not resid <= simulator.SWITCH_RESIDUAL_TOLERANCE:
            bad.append((n, f"norm {n}, eta {eta}: command jump {resid}"))
    rec.record("switching_continuity", bad)

    # distance bound: the set distance is below the bound drawn from the
    # attitude Lyapunov value
    bad = []
    for _ in range(4000):
        n = float(_log_uniform(rng, 1e-3, 1e2, 1)[0])
        psi = rng.uniform(-math.pi, math.pi)
        theta = rng.uniform(-math.pi, math.pi)
        d = rng.normal(0.0, 3.0, 6)
        target = make_target(n, psi, d)
        lam = np.array([math.cos(psi + theta), math.sin(psi + theta)])
        eta = MrpCoordinate(math.tan(0.25 * theta), valid=True)
        state_eta = eta
        va = inner_loop.attitude_lyapunov(target, state_eta, params)
        ball = geometry.TargetBall(center=target.a_star, radius=params.r)
        bd = geometry.ball_distance(n * lam, ball)
        bound = inner_loop.set_distance_bound(va, params)
        if bd > bound * (1.0 + 1e-9) + 1e-12:
            bad.append((va, f"norm {n}, angle {theta}: distance {bd} > bound {bound} at V {va}"))
    rec.record("distance_bound", bad)

    # rate setpoint: the jet's value equals the scalar implementation
    bad = []
    for _ in range(4000):
        n = float(_log_uniform(rng, 1e-3, 1e2, 1)[0])
        psi = rng.uniform(-math.pi, math.pi)
        d = rng.normal(0.0, 3.0, 6)
        target = make_target(n, psi, d)
        eta = MrpCoordinate(rng.standard_cauchy(), valid=True)
        omega = rng.normal(0.0, 3.0)
        ws = inner_loop.target_angular_rate(target, eta, params)
        ws_jet, _ = inner_loop.target_angular_rate_jet(target, eta, omega, params)
        denom = max(1.0, abs(ws))
        if abs(ws - ws_jet) / denom > 1e-12:
            bad.append((n, f"norm {n}, eta {eta.value}: scalar {ws} vs jet value {ws_jet}"))
    rec.record("rate_setpoint_transcription", bad)

    # distance bound shape: zero at zero, nondecreasing, affine tail
    vs = np.sort(_log_uniform(rng, 1e-8, 10.0, 2000))
    mus = np.array([inner_loop.set_distance_bound(v, params) for v in vs])
    rec.ok("distance_bound_zero", inner_loop.set_distance_bound(0.0, params) == 0.0,
           "bound at zero value is nonzero")
    rec.ok("distance_bound_monotone", bool(np.all(np.diff(mus) >= -1e-12)),
           "bound decreases somewhere")
    v_tail = float(vs[-1])
    rec.ok("distance_bound_tail",
           abs(inner_loop.set_distance_bound(v_tail, params) - (4.0 * v_tail + 2.0 * params.delta_a)) < 1e-9,
           f"tail at {v_tail} is not affine")
    return rec


# -- outer loop ----------------------------------------------------------------


def closed_loop_fd(result: simulator.RunResult, row: int, delta: float = 1e-5) -> dict:
    """Finite differences of the controller chain along the closed loop.

    Integrates two fine steps forward from the logged row and takes
    central differences around the middle point, where the analytic
    quantities are also evaluated. Returns both sides for comparison.
    Only the built-in vehicle layout (4 states) is supported."""
    config = result.config
    log = result.log
    if not (0 <= row < len(log)):
        raise IndexError(f"row {row} outside log of {len(log)} rows")
    t = float(log.t[row])
    y = np.concatenate([log.x[row], log.lam[row], [log.omega[row], log.eta[row]]])
    eta_valid = bool(log.eta_valid[row])
    traj_fn = outer_loop.make_trajectory(config.trajectory)
    fine = dataclasses.replace(config, step_size=delta, engine="reference")
    ys, _, _ = simulator._integrate_reference(fine, traj_fn, t, y, eta_valid, 2)

    target_fn = simulator._make_target_fn(config, traj_fn)

    def target_of(k):
        yv = ys[k]
        return target_fn(t + k * delta, yv[:4], yv[4:6], yv[6])

    targets = [target_of(k) for k in range(3)]
    params = config.controller
    mid = targets[1]
    y_mid = ys[1]
    state_mid = InnerState(
        PivotState(y_mid[4:6], y_mid[6]), MrpCoordinate(y_mid[7], valid=eta_valid)
    )

    ws = []
    for k in range(3):
        eta_k = MrpCoordinate(ys[k][7], valid=eta_valid)
        ws.append(inner_loop.target_angular_rate(targets[k], eta_k, params))
    ws_mid, ws_dot_mid = inner_loop.target_angular_rate_jet(
        mid, state_mid.eta, state_mid.pivot.omega, params
    )

    n_mid = inner_loop.thrust_command(mid)
    out = {
        "t": t + delta,
        "norm": n_mid,
        "a_star_dot": mid.a_star_dot,
        "fd_a_star_dot": (targets[2].a_star - targets[0].a_star) / (2 * delta),
        "a_star_ddot": mid.a_star_ddot,
        "fd_a_star_ddot": (targets[2].a_star_dot - targets[0].a_star_dot) / (2 * delta),
        "ws_dot": ws_dot_mid,
        "fd_ws_dot": (ws[2] - ws[0]) / (2 * delta),
        "ws_value_gap": abs(ws[1] - ws_mid),
    }
    if eta_valid and n_mid >= params.switching_floor:
        out["eta_dot"] = inner_loop.mrp_rate(state_mid, mid)
        out["fd_eta_dot"] = (ys[2][7] - ys[0][7]) / (2 * delta)
    return out


def suite_outer_loop(rng: np.random.Generator) -> Recorder:
    rec = Recorder("outer_loop")
    gains = outer_loop.BaselineGains()

    # trajectory jets against finite differences of the position row
    bad = []
    for t in rng.uniform(0.0, 28.0, 400):
        traj = outer_loop.square_trajectory(t)
        h = 1e-5
        rows = [outer_loop.square_trajectory(t + k * h) for k in (-2, -1, 1, 2)]
        fd1 = (-rows[3].pos + 8 * rows[2].pos - 8 * rows[1].pos + rows[0].pos) / (12 * h)
        fd2 = (rows[2].pos - 2 * traj.pos + rows[1].pos) / (h * h)
        e1 = np.max(np.abs(fd1 - traj.d1)) / max(1.0, np.max(np.abs(traj.d1)))
        e2 = np.max(np.abs(fd2 - traj.d2)) / max(10.0, np.max(np.abs(traj.d2)))
        if e1 > 1e-6 or e2 > 1e-4:
            bad.append((t, f"t {t}: d1 err {e1}, d2 err {e2}"))
    rec.record("trajectory_jets_fd", bad)

    # the square visits its corners on the dwell plateaus
    corners = {5.0: (0.0, 10.0), 12.0: (10.0, 10.0), 19.0: (10.0, 0.0), 26.0: (0.0, 0.0)}
    bad = []
    for t, (cx, cy) in corners.items():
        traj = outer_loop.square_trajectory(t)
        err = math.hypot(traj.pos[0] - cx, traj.pos[1] - cy)
        if err > 1e-12 or np.max(np.abs(traj.d1)) > 1e-12:
            bad.append((t, f"t {t}: pos {tuple(traj.pos)} expected {(cx, cy)}"))
    rec.record("square_corners", bad)

    # ideal-vector chain along the closed loop, against finite differences
    result = simulator.run(simulator.SimConfig(duration=1.2, engine="reference"))
    bad = []
    for row in (150, 400, 700, 1000):
        fd = closed_loop_fd(result, row)
        if fd["norm"] < 0.5:
            continue
        e1 = np.max(np.abs(fd["a_star_dot"] - fd["fd_a_star_dot"]))
        e1 /= max(1.0, np.max(np.abs(fd["fd_a_star_dot"])))
        e2 = np.max(np.abs(fd["a_star_ddot"] - fd["fd_a_star_ddot"]))
        e2 /= max(10.0, np.max(np.abs(fd["fd_a_star_ddot"])))
        if e1 > 1e-4 or e2 > 1e-3:
            bad.append((float(row), f"row {row}: a_star_dot err {e1}, a_star_ddot err {e2}"))
    rec.record("ideal_vector_chain_fd", bad)

    # ISS gain: vanishes at zero, increases with the ball radius
    rs = np.sort(_log_uniform(rng, 1e-3, 2.0, 40))
    gam = np.array([outer_loop.linear_iss_gain(r, gains) for r in rs])
    rec.ok("iss_gain_zero", outer_loop.linear_iss_gain(0.0, gains) == 0.0, "gain at 0 not 0")
    rec.ok("iss_gain_monotone", bool(np.all(np.diff(gam) > 0.0)), "gain not increasing in radius")

    # generic vehicle hook: the velocity-controlled point converges into
    # the ISS ball of its own first-order loop
    toy = outer_loop.toy_integrator(k_p=2.0)
    cfg = simulator.SimConfig(duration=8.0, model=toy, trajectory="hover",
                              x0=np.array([3.0, -2.0]), engine="reference")
    res = simulator.run(cfg)
    tail = res.log.error_norm()[res.log.t >= 6.0]
    bound = toy.input_gain_bound * cfg.controller.r / 2.0
    rec.ok("toy_model_iss", bool(tail.max() <= bound * 1.05 + 1e-9),
           f"toy tail error {tail.max()} above first-order bound {bound}")
    return rec


# -- closed-loop certificates ----------------------------------------------------


def suite_certificates(rng: np.random.Generator) -> Recorder:
    rec = Recorder("certificates")

    # hover from the reference state is an exact equilibrium
    res = simulator.run(simulator.SimConfig(duration=1.0, trajectory="hover"))
    rec.ok("hover_fixed_point",
           bool(np.max(res.log.error_norm()) == 0.0 and np.max(res.log.v_total) == 0.0),
           f"hover drifts: err {np.max(res.log.error_norm())}, V {np.max(res.log.v_total)}")

    # determinism: identical config gives identical trajectories
    cfg = simulator.SimConfig(duration=1.5)
    a = simulator.run(cfg)
    b = simulator.run(cfg)
    same = all(
        np.array_equal(getattr(a.log, f.name), getattr(b.log, f.name))
        for f in dataclasses.fields(a.log)
    )
    rec.ok("deterministic", same, "two identical runs differ")

    # the maneuver's first flip: command continuity across every event
    res = simulator.run(simulator.SimConfig(duration=3.0))
    resid = float(np.max(res.switch_residuals, initial=0.0))
    rec.ok("switch_residuals", resid <= simulator.SWITCH_RESIDUAL_TOLERANCE,
           f"max command jump {resid} across {len(res.switch_steps)} events")
    rec.ok("flip_completes", bool(res.completed and np.isfinite(res.log.x).all()),
           "3 s maneuver failed")

    report = simulator.certify(res)
    rec.ok("mu_certificate", bool(report.mu_ok), f"mu ratio {report.mu_ratio_max}")
    return rec


_SUITES = {
    "shaping": suite_shaping,
    "geometry": suite_geometry,
    "inner_loop": suite_inner_loop,
    "outer_loop": suite_outer_loop,
    "certificates": suite_certificates,
}


def run_suites(suite: str = "all", seed: int = 0) -> list[Failure]:
    """Run the selected property suite(s); returns all failures."""
    if suite == "all":
        names = list(_SUITES)
    elif suite in _SUITES:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(_SUITES)} or 'all'")
    failures: list[Failure] = []
    for name in names:
        rec = _SUITES[name](np.random.default_rng(seed))
        status = "ok" if not rec.failures else "FAIL"
        print(f"suite {name}: {status} ({rec.checks} checks)")
        for failure in rec.failures:
            print(f"  {failure}")
        failures.extend(rec.failures)
    return failures
