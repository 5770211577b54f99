"""Tracking control for vehicles with a pivoted one-sided actuator.

The actuator thrust is confined to a body axis that must be steered; the
redesign here tracks a ball around the ideal actuation vector instead of
the vector itself, which keeps the commands bounded through free-fall
crossings where the ideal vector vanishes.
"""

from .geometry import MrpCoordinate, TargetBall, ball_distance, halfwidth_exact, halfwidth_smooth
from .inner_loop import (
    ActuationTarget,
    ControllerParams,
    InnerState,
    PivotState,
    pivot_accel_command,
    set_distance_bound,
    target_angular_rate,
    thrust_command,
)
from .outer_loop import (
    BaselineGains,
    VehicleModel,
    actuation_target,
    linear_iss_gain,
    make_trajectory,
    planar_multirotor,
    register_vehicle,
    square_trajectory,
    toy_integrator,
)
from .shaping import bump, smooth_ramp, smooth_step, smooth_step_deriv
from .simulator import CertificateReport, RunResult, SimConfig, SimLog, certify, run

__version__ = "0.1.0"

__all__ = [
    "ActuationTarget",
    "BaselineGains",
    "CertificateReport",
    "ControllerParams",
    "InnerState",
    "MrpCoordinate",
    "PivotState",
    "RunResult",
    "SimConfig",
    "SimLog",
    "TargetBall",
    "VehicleModel",
    "actuation_target",
    "ball_distance",
    "bump",
    "certify",
    "halfwidth_exact",
    "halfwidth_smooth",
    "linear_iss_gain",
    "make_trajectory",
    "pivot_accel_command",
    "planar_multirotor",
    "register_vehicle",
    "run",
    "set_distance_bound",
    "smooth_ramp",
    "smooth_step",
    "smooth_step_deriv",
    "square_trajectory",
    "target_angular_rate",
    "thrust_command",
    "toy_integrator",
]
