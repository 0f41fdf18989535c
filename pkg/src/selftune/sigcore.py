"""Delay-operator polynomials and bounded signal histories.

A polynomial ``c0 + c1 z^-1 + ... + cn z^-n`` is stored as its coefficient
list. Histories keep the most recent samples of a scalar signal, newest
first, so ``h[k]`` is the sample ``k`` steps in the past.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

STABILITY_MARGIN = 1.0 - 1e-9


class ConfigError(ValueError):
    """Raised for invalid configuration or precondition violations."""


@dataclass(frozen=True)
class DelayPolynomial:
    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = tuple(float(x) for x in coeffs)
        if not c:
            raise ConfigError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[0] == 1.0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> float:
        return self.coeffs[k]

    def __iter__(self):
        return iter(self.coeffs)


def as_poly(p: DelayPolynomial | Sequence[float]) -> DelayPolynomial:
    return p if isinstance(p, DelayPolynomial) else DelayPolynomial(p)


class SignalHistory:
    """Ring of the last ``capacity`` samples; unfilled slots read as 0."""

    __slots__ = ("_buf",)

    def __init__(self, capacity: int, initial: Iterable[float] = ()):
        if capacity < 1:
            raise ConfigError(f"history capacity must be >= 1, got {capacity}")
        self._buf = deque([0.0] * capacity, maxlen=capacity)
        # initial is given newest first
        for x in reversed(list(initial)):
            self._buf.appendleft(float(x))

    @property
    def capacity(self) -> int:
        return self._buf.maxlen

    def push(self, x: float) -> None:
        self._buf.appendleft(float(x))

    def __getitem__(self, k: int) -> float:
        return self._buf[k]

    def __len__(self) -> int:
        return self._buf.maxlen

    def to_list(self) -> list[float]:
        return list(self._buf)

    def copy(self) -> "SignalHistory":
        return SignalHistory(self.capacity, self._buf)

    def __repr__(self) -> str:
        return f"SignalHistory({list(self._buf)!r})"


def eval_at_one(p: DelayPolynomial | Sequence[float]) -> float:
    """Value of the polynomial at z = 1, i.e. the coefficient sum."""
    return float(sum(as_poly(p).coeffs))


def filter(p: DelayPolynomial | Sequence[float], h: SignalHistory) -> float:  # noqa: A001
    """Apply ``p`` to the signal held in ``h`` at the current instant."""
    c = as_poly(p).coeffs
    if h.capacity < len(c):
        raise ConfigError(
            f"history capacity {h.capacity} too small for degree {len(c) - 1}"
        )
    acc = 0.0
    for k, ck in enumerate(c):
        acc += ck * h[k]
    return acc


def is_stable(p: DelayPolynomial | Sequence[float]) -> bool:
    """True iff every root of ``c0 z^n + ... + cn`` lies strictly inside the unit circle."""
    c = as_poly(p).coeffs
    if len(c) == 1:
        return True
    if c[0] == 0.0:
        raise ConfigError("leading coefficient must be nonzero")
    roots = np.roots(c)
    return bool(np.all(np.abs(roots) < STABILITY_MARGIN))


def polymul(p: Sequence[float], q: Sequence[float]) -> list[float]:
    """Coefficient list of the product of two delay polynomials."""
    out = [0.0] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        for j, qj in enumerate(q):
            out[i + j] += pi * qj
    return out
