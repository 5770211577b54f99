"""Forward-mode derivative propagation.

`Dual(v, d)` carries a value and its derivative with respect to one
scalar (time, for every use in this package). Components may themselves
be Dual, which gives second derivatives: pushing
`Dual(Dual(v, d1), Dual(d1, d2))` through a function f returns the 2-jet
of f along the curve.

The lifted wrappers at the bottom accept plain floats too and then just
call the scalar implementation, so generic code can be written once.
"""

from __future__ import annotations

import math

from . import shaping


def scalar(x):
    """Leading (innermost) value of a possibly nested Dual."""
    while isinstance(x, Dual):
        x = x.val
    return x


class Dual:
    __slots__ = ("val", "dot")

    def __init__(self, val, dot=0.0):
        self.val = val
        self.dot = dot

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.dot * other.val + self.val * other.dot)
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # quotient value computed by direct division so the value slot is
        # bit-identical with the plain-float code path
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.dot - q * other.dot) / other.val)
        return Dual(self.val / other, self.dot / other)

    def __rtruediv__(self, other):
        # other / self with other a plain constant
        q = other / self.val
        return Dual(q, (-q * self.dot) / self.val)

    # comparisons act on leading values; used only for branch selection
    def __lt__(self, other):
        return scalar(self) < scalar(other)

    def __le__(self, other):
        return scalar(self) <= scalar(other)

    def __gt__(self, other):
        return scalar(self) > scalar(other)

    def __ge__(self, other):
        return scalar(self) >= scalar(other)


def d_reciprocal(x):
    if isinstance(x, Dual):
        inv = d_reciprocal(x.val)
        return Dual(inv, -inv * inv * x.dot)
    return 1.0 / x


def constant_like(template, c):
    """A constant with the same nesting depth as template (all dots zero)."""
    if isinstance(template, Dual):
        return Dual(constant_like(template.val, c), constant_like(template.dot, 0.0))
    return c


def d_abs(x):
    # derivative sign(val); sign(0) taken as 0, consistent with the
    # controller convention (every |.| here is multiplied by a factor
    # vanishing at 0)
    if isinstance(x, Dual):
        return Dual(d_abs(x.val), d_sign(x.val) * x.dot)
    return abs(x)


def d_sign(x):
    if isinstance(x, Dual):
        return Dual(d_sign(x.val), constant_like(x.dot, 0.0))
    return sign0(x)


def sign0(x: float) -> float:
    """sign with sign0(0) = 0, the convention used throughout the controller."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def d_sqrt(x):
    if isinstance(x, Dual):
        r = d_sqrt(x.val)
        return Dual(r, x.dot / (2.0 * r))
    return math.sqrt(x)


def d_tan(x):
    if isinstance(x, Dual):
        t = d_tan(x.val)
        return Dual(t, (1.0 + t * t) * x.dot)
    return math.tan(x)


def d_atan(x):
    if isinstance(x, Dual):
        return Dual(d_atan(x.val), x.dot / (1.0 + x.val * x.val))
    return math.atan(x)


def d_norm2(x0, x1):
    """Euclidean norm of a 2-vector of (possibly Dual) components."""
    return d_sqrt(x0 * x0 + x1 * x1)


# -- lifted smooth-shaping ops ------------------------------------------------
#
# d/ds of the step is its order-1 derivative, d/ds of the order-k
# derivative is the order-(k+1) one, and d/ds of the ramp is the step.
# The recursion keeps working for nested Duals; total depth is bounded
# by the supported derivative orders of shaping.


def step(s, s0: float, s1: float):
    if isinstance(s, Dual):
        return Dual(step(s.val, s0, s1), step_deriv(s.val, s0, s1, 1) * s.dot)
    return shaping.smooth_step(s, s0, s1)


def step_deriv(s, s0: float, s1: float, order: int):
    if isinstance(s, Dual):
        return Dual(
            step_deriv(s.val, s0, s1, order),
            step_deriv(s.val, s0, s1, order + 1) * s.dot,
        )
    return shaping.smooth_step_deriv(s, s0, s1, order)


def ramp(s, s0: float, s1: float):
    if isinstance(s, Dual):
        return Dual(ramp(s.val, s0, s1), step(s.val, s0, s1) * s.dot)
    return shaping.smooth_ramp(s, s0, s1)
