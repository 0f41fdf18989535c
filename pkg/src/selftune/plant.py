"""Discrete ARMAX simulator of the excitation channel.

    A(z^-1) y(t) = z^-1 B(z^-1) u(t) + C(z^-1) e(t) + d + v(t)

``e`` is Gaussian white noise drawn from a seeded PCG64 stream and ``v`` is
an additive load disturbance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sigcore import (
    ConfigError,
    DelayPolynomial,
    SignalHistory,
    as_poly,
    eval_at_one,
    is_stable,
)

DEFAULT_A = (1.0, -1.2, 0.5, -0.1, 0.005)
DEFAULT_B = (0.3, 0.15, 0.05, 0.01)
DEFAULT_SIGMA2 = 1e-8
SAMPLE_TIME = 0.02  # seconds, only used for plot axes

_NOISE_BLOCK = 4096


class SimulationFault(RuntimeError):
    """A signal became non-finite; ``step`` is the offending sample index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class PlantModel:
    A: DelayPolynomial
    B: DelayPolynomial
    C: DelayPolynomial = field(default_factory=lambda: DelayPolynomial([1.0]))
    d: float = 0.0
    sigma2: float = DEFAULT_SIGMA2
    seed: int = 0

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, as_poly(getattr(self, name)))
        if self.A.degree != 4 or not self.A.is_monic:
            raise ConfigError("A must be monic of degree 4")
        if self.B.degree != 3:
            raise ConfigError("B must have degree 3")
        if self.C.degree > 4 or not self.C.is_monic:
            raise ConfigError("C must be monic of degree <= 4")
        if not is_stable(self.A):
            raise ConfigError(f"A is not stable: {self.A.coeffs}")
        if not is_stable(self.C):
            raise ConfigError(f"C is not stable: {self.C.coeffs}")
        if eval_at_one(self.B) == 0.0:
            raise ConfigError("B(1) must be nonzero")
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be >= 0")

    @property
    def theta(self) -> np.ndarray:
        """True parameters in estimator ordering ``[a1..a4, b0..b3]``."""
        return np.array(self.A.coeffs[1:] + self.B.coeffs)

    @property
    def dc_gain(self) -> float:
        return eval_at_one(self.B) / eval_at_one(self.A)

    @property
    def kf(self) -> float:
        return eval_at_one(self.A) / eval_at_one(self.B)


def make_default_plant(sigma2: float = DEFAULT_SIGMA2, seed: int = 0) -> PlantModel:
    """Fourth-order default plant; dc gain B(1)/A(1) = 0.51/0.205."""
    model = PlantModel(
        DelayPolynomial(DEFAULT_A), DelayPolynomial(DEFAULT_B),
        DelayPolynomial([1.0]), 0.0, sigma2, seed,
    )
    assert is_stable(model.A) and eval_at_one(model.B) != 0.0
    return model


class PlantState:
    """Signal histories of one running plant.

    ``y_hist[0]`` is the latest output ``y(t)``; ``u_hist[0]`` the latest
    applied command. Starts from rest with ``y(0) = 0``.
    """

    def __init__(self, model: PlantModel):
        self.y_hist = SignalHistory(5)
        self.u_hist = SignalHistory(5)
        self.e_hist = SignalHistory(5)
        self.t = 0
        self.v = 0.0
        self._rng = np.random.Generator(np.random.PCG64(model.seed))
        self._sigma = math.sqrt(model.sigma2)
        self._noise = np.empty(0)
        self._k = 0

    @property
    def y(self) -> float:
        return self.y_hist[0]

    @property
    def e(self) -> float:
        return self.e_hist[0]

    def _draw(self) -> float:
        if self._sigma == 0.0:
            return 0.0
        if self._k >= len(self._noise):
            self._noise = self._rng.standard_normal(_NOISE_BLOCK)
            self._k = 0
        z = self._noise[self._k]
        self._k += 1
        return self._sigma * float(z)


def plant_step(state: PlantState, model: PlantModel, u: float, v: float) -> float:
    """Apply ``u(t)``, advance one sample and return ``y(t+1)``.

    ``v`` is the load disturbance acting at the new sample.
    """
    if not (math.isfinite(u) and math.isfinite(v)):
        raise SimulationFault("non-finite plant input", state.t)
    state.u_hist.push(u)
    e = state._draw()
    a, b, c = model.A.coeffs, model.B.coeffs, model.C.coeffs
    yh, uh, eh = state.y_hist, state.u_hist, state.e_hist
    y = e
    for k in range(1, len(c)):
        y += c[k] * eh[k - 1]
    for i in range(1, 5):
        y -= a[i] * yh[i - 1]
    for j in range(4):
        y += b[j] * uh[j]
    y += model.d + v
    state.t += 1
    if not math.isfinite(y):
        raise SimulationFault("non-finite plant output", state.t)
    state.y_hist.push(y)
    state.e_hist.push(e)
    state.v = v
    return y
