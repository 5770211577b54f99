"""Pivot-attitude geometry.

Signed angles on the circle, the target ball around the ideal actuation
vector, the exact and smoothed half-widths of the attitude interval that
keeps thrust inside that ball, and the scalar MRP coordinate (a double
covering of the circle; the point at infinity is a legitimate attitude).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dual
from .dual import Dual

TWO_PI = 2.0 * math.pi

# Rotation generator: ROT90 @ v turns v counterclockwise by 90 degrees.
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])

# The smoothed half-width saturates at a full turn; at_infinity kicks in
# when the quarter-angle is within 1e-9 of pi/2, where tan blows up.
_INFINITY_ANGLE = TWO_PI - 4e-9


@dataclass(frozen=True)
class MrpCoordinate:
    """Scalar MRP with branch bookkeeping.

    A finite value maps to the rotation angle 4*atan(value); at_infinity
    is the zero-rotation point on the shadow sheet. valid=False means the
    coordinate is currently undefined (ideal actuation vanished) and must
    be re-anchored before use.
    """

    value: float = 0.0
    at_infinity: bool = False
    valid: bool = True


@dataclass(frozen=True)
class TargetBall:
    center: np.ndarray  # ideal actuation vector
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")


def signed_angle(lam: np.ndarray, lam_star: np.ndarray) -> float:
    """Counterclockwise angle from lam_star to lam, in (-pi, pi]."""
    s = lam[0] * -lam_star[1] + lam[1] * lam_star[0]  # lam . ROT90 lam_star
    c = lam[0] * lam_star[0] + lam[1] * lam_star[1]
    ang = math.atan2(s, c)
    if ang == -math.pi:
        ang = math.pi
    return ang


def halfwidth_exact(sigma: float) -> float:
    """Largest |angle| keeping thrust of relative magnitude sigma inside the ball.

    sigma is thrust magnitude over ball radius. Below 1/2 every attitude
    works (returns inf); at exactly 1/2 only the antipode boundary holds.
    """
    if sigma < 0.0:
        raise ValueError(f"relative magnitude must be nonnegative, got {sigma}")
    if sigma < 0.5:
        return math.inf
    return math.acos(1.0 - 1.0 / (2.0 * sigma * sigma))


def halfwidth_smooth(sigma):
    """Smooth underestimate of halfwidth_exact, saturating at a full turn.

    Accepts a float or a Dual jet of sigma (time derivatives propagate).
    Equals 1/sigma once sigma >= 1/2 and exactly a full turn for
    sigma <= 1/(2 pi).
    """
    sv = dual.scalar(sigma)
    if sv <= 1.0 / TWO_PI:
        # inverse is past the blend window; the value is exactly 2*pi and
        # flat, so the jet is constant (also covers sigma = 0)
        return dual.constant_like(sigma, TWO_PI)
    inv = 1.0 / sigma if not isinstance(sigma, Dual) else dual.d_reciprocal(sigma)
    z = dual.step(inv, 2.0, TWO_PI)
    return inv * (1.0 - z) + TWO_PI * z


def mrp_halfwidth(a_star_norm, r: float) -> MrpCoordinate:
    """Half-width of the target attitude set in MRP coordinates.

    tan of a quarter of the smoothed half-width. Flagged at_infinity when
    the half-width reaches a full turn (every attitude is acceptable,
    including the point at infinity).
    """
    if r <= 0.0:
        raise ValueError(f"ball radius must be positive, got {r}")
    theta = halfwidth_smooth(dual.scalar(a_star_norm) / r)
    if theta >= _INFINITY_ANGLE:
        return MrpCoordinate(value=math.inf, at_infinity=True)
    return MrpCoordinate(value=math.tan(0.25 * theta))


def mrp_halfwidth_jet(a_star_norm: float, norm_dot: float, norm_ddot: float, r: float):
    """(value, d/dt, d2/dt2) of the MRP half-width, or None when at infinity.

    The nested-Dual push-through gives the 2-jet along the trajectory of
    the thrust magnitude.
    """
    theta0 = halfwidth_smooth(a_star_norm / r)
    if theta0 >= _INFINITY_ANGLE:
        return None
    sigma = Dual(Dual(a_star_norm / r, norm_dot / r), Dual(norm_dot / r, norm_ddot / r))
    eta = dual.d_tan(0.25 * halfwidth_smooth(sigma))
    return eta.val.val, eta.val.dot, eta.dot.dot


def mrp_from_angle(theta: float) -> float:
    """Principal-branch MRP of a rotation angle in (-pi, pi]."""
    return math.tan(0.25 * theta)


def shadow(eta: MrpCoordinate) -> MrpCoordinate:
    """The other covering point of the same physical attitude."""
    if eta.at_infinity:
        return MrpCoordinate(value=0.0)
    if eta.value == 0.0:
        return MrpCoordinate(value=math.inf, at_infinity=True)
    return MrpCoordinate(value=-1.0 / eta.value)


def ball_distance(a: np.ndarray, ball: TargetBall) -> float:
    """Euclidean distance from a to the ball (0 inside)."""
    gap = math.hypot(a[0] - ball.center[0], a[1] - ball.center[1]) - ball.radius
    return gap if gap > 0.0 else 0.0


def containment_check(a_norm: float, theta: float, r: float) -> bool:
    """Does thrust of magnitude a_norm at angle theta from the ideal direction
    land inside the ball of radius r around the ideal vector?

    Closed form: the miss distance squared is 2 a^2 (1 - cos theta).
    """
    if a_norm < 0.0:
        raise ValueError(f"thrust magnitude must be nonnegative, got {a_norm}")
    if r <= 0.0:
        raise ValueError(f"ball radius must be positive, got {r}")
    return 2.0 * a_norm * a_norm * (1.0 - math.cos(theta)) <= r * r
