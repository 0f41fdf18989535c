"""Recursive least-squares identification with exponential forgetting.

The model ``A(z^-1) y(t) = z^-1 B(z^-1) u(t)`` with four ``a`` and four ``b``
coefficients is written as the regression ``y(t) = phi(t) . theta`` where

    theta = [a1, a2, a3, a4, b0, b1, b2, b3]
    phi   = [-y(t-1), ..., -y(t-4), u(t-1), ..., u(t-4)]
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .sigcore import ConfigError, SignalHistory

NA = 4
NB = 4
N_PARAMS = NA + NB
DEFAULT_P0_SCALE = 1e4


@dataclass
class EstimatorState:
    theta: np.ndarray
    P: np.ndarray
    lam: float = 1.0
    min_excitation: float | None = None
    faults: int = field(default=0, compare=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(N_PARAMS)
        self.P = np.asarray(self.P, dtype=float).reshape(N_PARAMS, N_PARAMS)
        if not 0.0 < self.lam <= 1.0:
            raise ConfigError(f"forgetting factor must be in (0, 1], got {self.lam}")

    @classmethod
    def initial(
        cls,
        theta0: Sequence[float] | None = None,
        P0_scale: float = DEFAULT_P0_SCALE,
        lam: float = 1.0,
        min_excitation: float | None = None,
    ) -> "EstimatorState":
        if P0_scale <= 0:
            raise ConfigError(f"P0_scale must be > 0, got {P0_scale}")
        theta = np.zeros(N_PARAMS) if theta0 is None else np.array(theta0, dtype=float)
        if theta.shape != (N_PARAMS,):
            raise ConfigError(f"theta0 must have {N_PARAMS} entries")
        return cls(theta, P0_scale * np.eye(N_PARAMS), lam, min_excitation)

    @property
    def a(self) -> np.ndarray:
        return self.theta[:NA]

    @property
    def b(self) -> np.ndarray:
        return self.theta[NA:]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.P - self.P.T)))


class Update(NamedTuple):
    state: EstimatorState
    eps: float
    rejected: bool


def build_regressor(y_hist: SignalHistory, u_hist: SignalHistory) -> np.ndarray:
    """Regressor from past samples; ``h[0]`` is the sample at ``t-1``."""
    phi = np.empty(N_PARAMS)
    for i in range(NA):
        phi[i] = -y_hist[i]
    for j in range(NB):
        phi[NA + j] = u_hist[j]
    return phi


def rls_update(state: EstimatorState, phi: np.ndarray, y: float) -> Update:
    """One forgetting-factor RLS step.

    Returns the new state together with the a priori prediction error. Non-finite
    data, or an update that overflows, leave the state untouched and come back
    with ``rejected=True``.
    """
    phi = np.asarray(phi, dtype=float)
    if not (math.isfinite(y) and np.all(np.isfinite(phi))):
        state.faults += 1
        return Update(state, 0.0, True)

    theta, P, lam = state.theta, state.P, state.lam
    with np.errstate(all="ignore"):
        eps = float(y - phi @ theta)
        Pphi = P @ phi
        denom = phi @ Pphi
        if state.min_excitation is not None and denom < state.min_excitation:
            return Update(state, eps, False)

        k = Pphi / (lam + denom)
        new_theta = theta + k * eps
        new_P = (P - np.outer(k, Pphi)) / lam
        new_P = 0.5 * (new_P + new_P.T)
    if not (math.isfinite(eps) and np.all(np.isfinite(new_theta)) and np.all(np.isfinite(new_P))):
        state.faults += 1
        return Update(state, 0.0, True)
    return Update(
        EstimatorState(new_theta, new_P, lam, state.min_excitation, state.faults),
        eps,
        False,
    )


def reset_covariance(state: EstimatorState, alpha: float) -> EstimatorState:
    if not alpha > 0:
        raise ConfigError(f"covariance reset scale must be > 0, got {alpha}")
    return EstimatorState(
        state.theta.copy(), alpha * np.eye(N_PARAMS), state.lam,
        state.min_excitation, state.faults,
    )
