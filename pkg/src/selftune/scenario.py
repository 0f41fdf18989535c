"""Scenario description and its JSON form.

A scenario file mirrors :class:`ScenarioConfig`. Every section is optional
and falls back to the defaults below; unknown keys are rejected so typos fail
loudly::

    {
      "plant": {"A": [...5], "B": [...4], "C": [1.0], "d": 0.0, "sigma2": 1e-8},
      "controller": {"variant": "J1", "r": 0.01, "C": [1.0], "d": 0.0,
                     "u_limits": null},
      "estimator": {"theta0": null, "P0_scale": 1e4, "lambda": 0.998},
      "reference": [[0, 1.0]],
      "disturbance": {"step_time": 1000, "magnitude": -0.05},
      "steps": 5000,
      "seed": 0,
      "output_path": "run.csv"
    }

``reference`` is a list of ``[start_step, value]`` pairs describing a
piecewise-constant set point; the plant noise stream is seeded from ``seed``.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .controllers import ControllerConfig, Variant
from .estimator import DEFAULT_P0_SCALE, N_PARAMS
from .plant import DEFAULT_A, DEFAULT_B, DEFAULT_SIGMA2, PlantModel
from .sigcore import ConfigError, DelayPolynomial

DEFAULT_STEPS = 5000
DEFAULT_STEP_TIME = 1000
DEFAULT_LOAD_STEP = -0.05
MIN_STEPS = 100


@dataclass(frozen=True)
class EstimatorConfig:
    theta0: tuple[float, ...] | None = None
    P0_scale: float = DEFAULT_P0_SCALE
    lam: float = 0.998

    def __post_init__(self):
        if self.theta0 is not None:
            t0 = tuple(float(x) for x in self.theta0)
            if len(t0) != N_PARAMS:
                raise ConfigError(f"theta0 must have {N_PARAMS} entries, got {len(t0)}")
            object.__setattr__(self, "theta0", t0)
        if not 0.0 < self.lam <= 1.0:
            raise ConfigError(f"lambda must be in (0, 1], got {self.lam}")
        if not self.P0_scale > 0:
            raise ConfigError(f"P0_scale must be > 0, got {self.P0_scale}")


@dataclass(frozen=True)
class Disturbance:
    step_time: int = DEFAULT_STEP_TIME
    magnitude: float = DEFAULT_LOAD_STEP

    def value(self, t: int) -> float:
        return self.magnitude if t >= self.step_time else 0.0


@dataclass(frozen=True)
class Reference:
    segments: tuple[tuple[int, float], ...] = ((0, 1.0),)

    def __post_init__(self):
        segs = tuple((int(s), float(v)) for s, v in self.segments)
        if not segs or segs[0][0] != 0:
            raise ConfigError("reference must start with a segment at step 0")
        if any(b[0] <= a[0] for a, b in zip(segs, segs[1:])):
            raise ConfigError("reference segment starts must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, value: float) -> "Reference":
        return cls(((0, value),))

    def values(self, steps: int) -> list[float]:
        out = []
        k = 0
        segs = self.segments
        for t in range(steps):
            while k + 1 < len(segs) and segs[k + 1][0] <= t:
                k += 1
            out.append(segs[k][1])
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    plant: PlantModel = field(
        default_factory=lambda: PlantModel(
            DelayPolynomial(DEFAULT_A), DelayPolynomial(DEFAULT_B)
        )
    )
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    reference: Reference = field(default_factory=Reference)
    disturbance: Disturbance = field(default_factory=Disturbance)
    steps: int = DEFAULT_STEPS
    seed: int = 0
    output_path: str = "run.csv"

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not 0 <= self.disturbance.step_time < self.steps:
            raise ConfigError(
                f"disturbance step_time {self.disturbance.step_time} outside run of {self.steps}"
            )
        if self.plant.seed != self.seed:
            object.__setattr__(
                self, "plant", dataclasses.replace(self.plant, seed=self.seed)
            )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_variant(self, variant: Variant | str) -> "ScenarioConfig":
        return self.replace(
            controller=dataclasses.replace(self.controller, variant=Variant(variant))
        )

    def to_dict(self) -> dict[str, Any]:
        p, c, e = self.plant, self.controller, self.estimator
        return {
            "plant": {
                "A": list(p.A.coeffs), "B": list(p.B.coeffs), "C": list(p.C.coeffs),
                "d": p.d, "sigma2": p.sigma2,
            },
            "controller": {
                "variant": c.variant.value, "r": c.r, "C": list(c.C.coeffs), "d": c.d,
                "u_limits": list(c.u_limits) if c.u_limits else None,
            },
            "estimator": {
                "theta0": list(e.theta0) if e.theta0 is not None else None,
                "P0_scale": e.P0_scale, "lambda": e.lam,
            },
            "reference": [list(s) for s in self.reference.segments],
            "disturbance": {
                "step_time": self.disturbance.step_time,
                "magnitude": self.disturbance.magnitude,
            },
            "steps": self.steps,
            "seed": self.seed,
            "output_path": self.output_path,
        }


def _check_keys(section: str, data: Mapping, allowed: Sequence[str]) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{section}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def config_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    _check_keys(
        "config", data,
        ("plant", "controller", "estimator", "reference", "disturbance",
         "steps", "seed", "output_path"),
    )
    try:
        pd = data.get("plant", {})
        _check_keys("plant", pd, ("A", "B", "C", "d", "sigma2"))
        seed = int(data.get("seed", 0))
        plant = PlantModel(
            DelayPolynomial(pd.get("A", DEFAULT_A)),
            DelayPolynomial(pd.get("B", DEFAULT_B)),
            DelayPolynomial(pd.get("C", [1.0])),
            float(pd.get("d", 0.0)),
            float(pd.get("sigma2", DEFAULT_SIGMA2)),
            seed,
        )

        cd = data.get("controller", {})
        _check_keys("controller", cd, ("variant", "r", "C", "d", "u_limits"))
        lim = cd.get("u_limits")
        controller = ControllerConfig(
            Variant(cd.get("variant", "J1")),
            float(cd.get("r", 0.01)),
            DelayPolynomial(cd.get("C", [1.0])),
            float(cd.get("d", 0.0)),
            tuple(lim) if lim is not None else None,
        )

        ed = data.get("estimator", {})
        _check_keys("estimator", ed, ("theta0", "P0_scale", "lambda"))
        estimator = EstimatorConfig(
            ed.get("theta0"),
            float(ed.get("P0_scale", DEFAULT_P0_SCALE)),
            float(ed.get("lambda", 0.998)),
        )

        ref = data.get("reference", [[0, 1.0]])
        if isinstance(ref, (int, float)):
            ref = [[0, ref]]
        reference = Reference(tuple(tuple(seg) for seg in ref))

        dd = data.get("disturbance", {})
        _check_keys("disturbance", dd, ("step_time", "magnitude"))
        disturbance = Disturbance(
            int(dd.get("step_time", DEFAULT_STEP_TIME)),
            float(dd.get("magnitude", DEFAULT_LOAD_STEP)),
        )
        steps = int(data.get("steps", DEFAULT_STEPS))
        if steps < MIN_STEPS:
            raise ConfigError(f"steps must be >= {MIN_STEPS}, got {steps}")
        return ScenarioConfig(
            plant, controller, estimator, reference, disturbance, steps, seed,
            str(data.get("output_path", "run.csv")),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    return config_from_dict(data)


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


def replica_config(
    variant: Variant | str = Variant.J1,
    lam: float = 0.998,
    seed: int = 0,
    steps: int = DEFAULT_STEPS,
) -> ScenarioConfig:
    """Study-case setup: adaptive loop, r = 0.01, sigma2 = 1e-8, load step at mid-run."""
    return ScenarioConfig(
        plant=PlantModel(
            DelayPolynomial(DEFAULT_A), DelayPolynomial(DEFAULT_B),
            sigma2=DEFAULT_SIGMA2, seed=seed,
        ),
        controller=ControllerConfig(Variant(variant), r=0.01),
        estimator=EstimatorConfig(lam=lam),
        reference=Reference.constant(1.0),
        disturbance=Disturbance(steps // 2, DEFAULT_LOAD_STEP),
        steps=steps,
        seed=seed,
        output_path=f"{Variant(variant).value.lower()}.csv",
    )
