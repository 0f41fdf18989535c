"""Self-tuning control laws built on the estimated ARMAX model.

All laws solve a difference equation for the current command ``u(t)`` given
the current output ``y(t)``, the reference ``w(t)`` and past commands, with
``A = 1 + a1 z^-1 + ... + a4 z^-4`` and ``B = b0 + ... + b3 z^-3``.

J1
    ``(B + r(1 - z^-1)) u(t) = w(t) + a1 y(t) + ... + a4 y(t-3)``.
    The differencing penalty leaves the steady-state command unconstrained.
J2
    ``(B + r) u(t) = a1 y(t) + ... + a4 y(t-3) + kc w(t)`` with the
    reference compensation ``kc = 1 + r A(1)/B(1)``.
GENERAL
    ``(B + Q C) u(t) = C w(t) - F y(t) - d`` with ``F = z (C - A)`` and the
    J1 penalty ``Q = r (1 - z^-1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sigcore import (
    ConfigError,
    DelayPolynomial,
    SignalHistory,
    as_poly,
    is_stable,
    polymul,
)

SINGULAR_TOL = 1e-6
GAIN_EPS = 1e-6
HISTORY_DEPTH = 9


class Variant(str, enum.Enum):
    J1 = "J1"
    J2 = "J2"
    GENERAL = "GENERAL"


class DegenerateGainError(ArithmeticError):
    """|B(1)| of the estimated model is too small to invert."""


@dataclass(frozen=True)
class ControllerConfig:
    variant: Variant = Variant.J1
    r: float = 0.01
    C: DelayPolynomial = field(default_factory=lambda: DelayPolynomial([1.0]))
    d: float = 0.0
    u_limits: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "C", as_poly(self.C))
        if self.r < 0:
            raise ConfigError(f"penalty r must be >= 0, got {self.r}")
        if not self.C.is_monic or self.C.degree > 4:
            raise ConfigError("C must be monic of degree <= 4")
        if self.variant is Variant.GENERAL and not is_stable(self.C):
            raise ConfigError(f"C is not stable: {self.C.coeffs}")
        if self.u_limits is not None:
            lo, hi = (float(x) for x in self.u_limits)
            if not lo < hi:
                raise ConfigError(f"u_limits must satisfy min < max, got {self.u_limits}")
            object.__setattr__(self, "u_limits", (lo, hi))

    @property
    def Q(self) -> tuple[float, ...]:
        if self.variant is Variant.J2:
            return (self.r,)
        return (self.r, -self.r)


class ControllerState:
    """Histories and cached values owned by one control loop.

    ``y_hist[0]`` and ``w_hist[0]`` hold the current sample once a law has
    been evaluated; ``u_hist[0]`` is the command just issued.
    """

    def __init__(self, config: ControllerConfig, kc: float = 1.0):
        self.config = config
        self.y_hist = SignalHistory(HISTORY_DEPTH)
        self.u_hist = SignalHistory(HISTORY_DEPTH)
        self.w_hist = SignalHistory(HISTORY_DEPTH)
        self.kc = kc
        self.singular_faults = 0
        self.gain_faults = 0

    def observe(self, w: float, y: float) -> None:
        self.w_hist.push(w)
        self.y_hist.push(y)

    def hold(self, w: float, y: float, u: float = 0.0) -> float:
        """Record a sample without evaluating any law (start-up warm-up)."""
        self.observe(w, y)
        self.u_hist.push(u)
        return u


def _theta(est) -> list[float]:
    return np.asarray(getattr(est, "theta", est), dtype=float).tolist()


def _finish(state: ControllerState, num: float, den: float) -> float:
    if not (math.isfinite(num) and math.isfinite(den)) or abs(den) < SINGULAR_TOL:
        state.singular_faults += 1
        u = state.u_hist[0]
    else:
        u = num / den
        lim = state.config.u_limits
        if lim is not None:
            u = min(max(u, lim[0]), lim[1])
    state.u_hist.push(u)
    return u


def j1_control(state: ControllerState, est, w: float, y: float) -> float:
    """Feedback-compensation law with the ``r (1 - z^-1)`` penalty."""
    th = _theta(est)
    a, b = th[:4], th[4:]
    r = state.config.r
    state.observe(w, y)
    yh, uh = state.y_hist, state.u_hist
    q = (r, -r, 0.0, 0.0)
    num = w
    for i in range(4):
        num += a[i] * yh[i]
    for j in range(1, 4):
        num -= (b[j] + q[j]) * uh[j - 1]
    return _finish(state, num, b[0] + q[0])


def compute_kf(est, eps_b: float = GAIN_EPS) -> float:
    """Inverse dc gain ``A(1)/B(1)`` of the estimated model."""
    th = _theta(est)
    b1 = math.fsum(th[4:])
    if not abs(b1) >= eps_b:
        raise DegenerateGainError(f"|B(1)| = {abs(b1):.3g} below {eps_b}")
    return (1.0 + math.fsum(th[:4])) / b1


def compute_kc(est, r: float, eps_b: float = GAIN_EPS) -> float:
    return 1.0 + r * compute_kf(est, eps_b)


def j2_control(state: ControllerState, est, w: float, y: float) -> float:
    """Feedback-plus-reference-compensation law with constant penalty ``r``.

    ``kc`` is refreshed from the live estimates each call; on a degenerate
    gain the previous value is kept.
    """
    th = _theta(est)
    a, b = th[:4], th[4:]
    r = state.config.r
    try:
        kc = compute_kc(th, r)
        if math.isfinite(kc):
            state.kc = kc
        else:
            state.gain_faults += 1
    except DegenerateGainError:
        state.gain_faults += 1
    state.observe(w, y)
    yh, uh = state.y_hist, state.u_hist
    num = state.kc * w
    for i in range(4):
        num += a[i] * yh[i]
    for j in range(1, 4):
        num -= b[j] * uh[j - 1]
    return _finish(state, num, b[0] + r)


def general_control(
    state: ControllerState, est, config: ControllerConfig | None, w: float, y: float
) -> float:
    """Colored-noise law ``u = (C w - F y - d) / (B + Q C)``, ``F = z (C - A)``."""
    cfg = config or state.config
    th = _theta(est)
    A = (1.0, *th[:4])
    c = cfg.C.coeffs
    n = max(len(A), len(c))
    A_pad = A + (0.0,) * (n - len(A))
    c_pad = c + (0.0,) * (n - len(c))
    f = [c_pad[k + 1] - A_pad[k + 1] for k in range(n - 1)]
    den = _add(th[4:], polymul(cfg.Q, c))

    state.observe(w, y)
    yh, uh, wh = state.y_hist, state.u_hist, state.w_hist
    num = 0.0
    for k, ck in enumerate(c):
        num += ck * wh[k]
    for k, fk in enumerate(f):
        num -= fk * yh[k]
    num -= cfg.d
    for j in range(1, len(den)):
        num -= den[j] * uh[j - 1]
    return _finish(state, num, den[0])


def _add(p: Sequence[float], q: Sequence[float]) -> list[float]:
    n = max(len(p), len(q))
    return [
        (p[k] if k < len(p) else 0.0) + (q[k] if k < len(q) else 0.0)
        for k in range(n)
    ]


LAWS = {
    Variant.J1: j1_control,
    Variant.J2: j2_control,
}


def control(state: ControllerState, est, w: float, y: float) -> float:
    """Dispatch on the configured variant."""
    v = state.config.variant
    if v is Variant.GENERAL:
        return general_control(state, est, state.config, w, y)
    return LAWS[v](state, est, w, y)
