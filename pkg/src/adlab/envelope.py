"""Smooth temporal cutoffs that vanish to all orders at window endpoints.

The ramp shape is the classical exponential sigmoid

    f(s) = 1 / (1 + exp(1/s - 1/(1-s))),   s in (0, 1),

extended by 0 for s <= 0 and 1 for s >= 1.  It is C-infinity, satisfies
f(s) + f(1-s) = 1 (so each ramp integrates to exactly half its width), and
every derivative vanishes at both ends, which keeps truncated fields smooth
at the cut times.  A stage envelope rises over the first quarter of its
window, sits at exactly 1.0 on the middle half, and falls over the last
quarter.  Time derivatives up to order four come from symbolic
differentiation of f, not finite differences.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import sympy

RAMP_FRACTION = 0.25
MAX_DERIVATIVE_ORDER = 4

# Below this margin (in ramp-local coordinates) the sigmoid and all its
# derivatives are far below double-precision resolution and are treated as
# exact 0/1.  Higher orders need a wider margin because the symbolic
# derivative contains exp((order+1)/s) factors that overflow before the
# value itself stops being negligible.
def _sigma_margin(order: int) -> float:
    return max(5e-3, 2e-3 * order)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@functools.lru_cache(maxsize=None)
def _sigmoid_lambdified(order: int):
    s = sympy.Symbol("s", positive=True)
    expr = 1 / (1 + sympy.exp(1 / s - 1 / (1 - s)))
    return sympy.lambdify(s, sympy.diff(expr, s, order), modules="numpy")


def sigmoid(s, order: int = 0):
    """Evaluate f^(order)(s) elementwise, exact 0/1 outside the open ramp."""
    s = np.asarray(s, dtype=float)
    margin = _sigma_margin(order)
    inside = (s > margin) & (s < 1.0 - margin)
    out = np.zeros_like(s)
    if order == 0:
        out[s >= 1.0 - margin] = 1.0
    if np.any(inside):
        with np.errstate(all="ignore"):
            out[inside] = _sigmoid_lambdified(order)(s[inside])
    return out


@functools.lru_cache(maxsize=None)
def _unit_ramp_derivative_max(order: int) -> float:
    """max over [0,1] of |f^(order)|, by dense deterministic sampling."""
    grid = np.linspace(0.0, 1.0, 8193)
    return float(np.max(np.abs(sigmoid(grid, order))))


def _ramp_integral(lo: float, hi: float) -> float:
    """integral of f over [lo, hi] within [0,1] by 64-point Gauss-Legendre."""
    if hi <= lo:
        return 0.0
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(_GL_WEIGHTS, sigmoid(mid + half * _GL_NODES)))


@dataclass(frozen=True)
class Envelope:
    """Temporal cutoff supported on [t0, t1], equal to 1 on the middle half."""

    t0: float
    t1: float

    @property
    def width(self) -> float:
        return self.t1 - self.t0

    @property
    def mass(self) -> float:
        """Exact value of the full integral: width * (1 - RAMP_FRACTION)."""
        return self.width * (1.0 - RAMP_FRACTION)

    def value(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, order: int):
        """d^order/dt^order of the envelope, elementwise."""
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(f"derivative order must be in 0..4, got {order}")
        t = np.asarray(t, dtype=float)
        w = self.width
        s = (t - self.t0) / w
        rho = RAMP_FRACTION
        out = np.zeros_like(s)

        rising = (s > 0.0) & (s < rho)
        falling = (s > 1.0 - rho) & (s < 1.0)
        if np.any(rising):
            scale = (1.0 / (rho * w)) ** order
            out[rising] = scale * sigmoid(s[rising] / rho, order)
        if np.any(falling):
            scale = (-1.0 / (rho * w)) ** order
            out[falling] = scale * sigmoid((1.0 - s[falling]) / rho, order)
        if order == 0:
            out[(s >= rho) & (s <= 1.0 - rho)] = 1.0
        return out

    def integral(self, ta: float, tb: float) -> float:
        """integral of the envelope over [ta, tb], exact on the plateau."""
        ta = max(ta, self.t0)
        tb = min(tb, self.t1)
        if tb <= ta:
            return 0.0
        w = self.width
        rho = RAMP_FRACTION
        sa = (ta - self.t0) / w
        sb = (tb - self.t0) / w

        total = 0.0
        # rising ramp, s in [0, rho]
        lo, hi = max(sa, 0.0), min(sb, rho)
        if hi > lo:
            total += rho * _ramp_integral(lo / rho, hi / rho)
        # plateau, s in [rho, 1 - rho]
        lo, hi = max(sa, rho), min(sb, 1.0 - rho)
        if hi > lo:
            total += hi - lo
        # falling ramp, s in [1 - rho, 1]; mirror of the rising ramp
        lo, hi = max(sa, 1.0 - rho), min(sb, 1.0)
        if hi > lo:
            total += rho * _ramp_integral((1.0 - hi) / rho, (1.0 - lo) / rho)
        return w * total

    def integral_of_square(self, ta: float, tb: float) -> float:
        """integral of envelope^2 over [ta, tb] (plateau part exact)."""
        ta = max(ta, self.t0)
        tb = min(tb, self.t1)
        if tb <= ta:
            return 0.0
        w = self.width
        rho = RAMP_FRACTION
        sa, sb = (ta - self.t0) / w, (tb - self.t0) / w

        def ramp_sq(lo: float, hi: float) -> float:
            if hi <= lo:
                return 0.0
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            vals = sigmoid(mid + half * _GL_NODES)
            return half * float(np.dot(_GL_WEIGHTS, vals * vals))

        total = 0.0
        lo, hi = max(sa, 0.0), min(sb, rho)
        total += rho * ramp_sq(lo / rho, hi / rho) if hi > lo else 0.0
        lo, hi = max(sa, rho), min(sb, 1.0 - rho)
        total += max(hi - lo, 0.0)
        lo, hi = max(sa, 1.0 - rho), min(sb, 1.0)
        total += rho * ramp_sq((1.0 - hi) / rho, (1.0 - lo) / rho) if hi > lo else 0.0
        return w * total

    def derivative_sup(self, order: int) -> float:
        """sup over the window of |d^order envelope / dt^order|."""
        if order == 0:
            return 1.0
        return _unit_ramp_derivative_max(order) / (RAMP_FRACTION * self.width) ** order


def mirror(env: Envelope, center: float = 1.0) -> Envelope:
    """The envelope reflected about t = center, i.e. chi(2*center - t)."""
    return Envelope(2.0 * center - env.t1, 2.0 * center - env.t0)
