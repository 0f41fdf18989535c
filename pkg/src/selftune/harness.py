"""Closed-loop scenario runner, metrics and CSV export."""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .controllers import ControllerState, Variant, control
from .estimator import EstimatorState, build_regressor, rls_update
from .plant import PlantModel, PlantState, SimulationFault, plant_step
from .scenario import ScenarioConfig
from .sigcore import ConfigError, SignalHistory

log = logging.getLogger(__name__)

WARMUP_STEPS = 5
DEFAULT_SKIP = 50
DEFAULT_BAND = 0.01
RATIO_FLOOR = 1e-20

CSV_HEADER = (
    "t", "w", "y", "u", "v", "e",
    "a1", "a2", "a3", "a4", "b0", "b1", "b2", "b3",
    "kc", "eps",
)


class StepRecord(NamedTuple):
    t: int
    w: float
    y: float
    u: float
    v: float
    e: float
    theta: tuple[float, ...]
    kc: float | None
    eps: float


Observer = Callable[[int, EstimatorState, ControllerState], None]


def run_scenario(
    cfg: ScenarioConfig,
    observer: Observer | None = None,
    *,
    freeze: bool = False,
) -> list[StepRecord]:
    """Simulate the adaptive loop for ``cfg.steps`` samples.

    Each sample: read ``y(t)``, update the estimates from past data, compute
    ``u(t)`` (zero during the first few samples), then advance the plant.
    With ``freeze`` the estimates stay at ``theta0`` and only the prediction
    error is logged.
    """
    model = cfg.plant
    plant = PlantState(model)
    ec = cfg.estimator
    est = EstimatorState.initial(ec.theta0, ec.P0_scale, ec.lam)
    ctrl = ControllerState(cfg.controller)
    is_j2 = cfg.controller.variant is Variant.J2
    y_past = SignalHistory(4)
    u_past = SignalHistory(4)
    w_seq = cfg.reference.values(cfg.steps)
    dist = cfg.disturbance

    records: list[StepRecord] = []
    y = plant.y
    for t in range(cfg.steps):
        w = w_seq[t]
        phi = build_regressor(y_past, u_past)
        if freeze:
            eps, rejected = float(y - phi @ est.theta), False
        else:
            est, eps, rejected = rls_update(est, phi, y)
        if rejected and est.faults == 1:
            log.warning("estimator rejected non-finite data at step %d", t)
        if t < WARMUP_STEPS:
            u = ctrl.hold(w, y)
        else:
            u = control(ctrl, est, w, y)
        theta = tuple(est.theta.tolist())
        kc = ctrl.kc if is_j2 else None
        if not all(map(math.isfinite, (y, u, eps, *theta))) or (
            kc is not None and not math.isfinite(kc)
        ):
            raise SimulationFault("non-finite signal in closed loop", t)
        records.append(StepRecord(t, w, y, u, plant.v, plant.e, theta, kc, eps))
        if observer is not None:
            observer(t, est, ctrl)
        y_past.push(y)
        u_past.push(u)
        y = plant_step(plant, model, u, dist.value(t + 1))
    if est.faults:
        log.warning("estimator rejected %d updates in total", est.faults)
    return records


def prbs(n: int, nbits: int = 7, taps: tuple[int, int] = (7, 6)) -> list[float]:
    """Maximal-length pseudo-random binary sequence of +-1 from a Fibonacci LFSR."""
    reg = [1] * nbits
    out = []
    for _ in range(n):
        out.append(1.0 if reg[-1] else -1.0)
        fb = reg[taps[0] - 1] ^ reg[taps[1] - 1]
        reg = [fb] + reg[:-1]
    return out


def identify_open_loop(
    model: PlantModel,
    inputs: Sequence[float],
    est: EstimatorState,
    observer: Callable[[int, EstimatorState], None] | None = None,
) -> tuple[EstimatorState, list[float]]:
    """Drive the plant open-loop with ``inputs`` and run RLS on the data.

    Returns the final estimator state and the prediction errors.
    """
    plant = PlantState(model)
    y_past = SignalHistory(4)
    u_past = SignalHistory(4)
    y = plant.y
    errors = []
    for t, u in enumerate(inputs):
        est, eps, _ = rls_update(est, build_regressor(y_past, u_past), y)
        errors.append(eps)
        if observer is not None:
            observer(t, est)
        y_past.push(y)
        u_past.push(u)
        y = plant_step(plant, model, u, 0.0)
    return est, errors


@dataclass(frozen=True)
class MetricsReport:
    sse: float
    u_var: float
    settle_time: int | None
    ise: float
    window: tuple[int, int]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def compute_metrics(
    records: Sequence[StepRecord],
    window: tuple[int, int] | None = None,
    *,
    disturbance_time: int = 0,
    skip: int = DEFAULT_SKIP,
    band: float = DEFAULT_BAND,
) -> MetricsReport:
    """Tracking and command-activity metrics.

    ``window`` is a half-open sample range; by default it starts ``skip``
    samples after ``disturbance_time`` and runs to the end. ``u_var`` is the
    population variance. ``sse`` is the mean ``|y - w|`` over the final 10%
    of the run, and ``settle_time`` the first sample after the disturbance
    from which ``|y - w| < band`` holds to the end (``None`` if never).
    """
    n = len(records)
    if window is None:
        window = (disturbance_time + skip, n)
    lo, hi = window
    if not 0 <= lo < hi <= n:
        raise ConfigError(f"empty or out-of-range metrics window {window} for {n} records")

    y = np.array([r.y for r in records])
    w = np.array([r.w for r in records])
    u = np.array([r.u for r in records])
    err = y - w

    tail = max(1, n // 10)
    sse = float(np.mean(np.abs(err[n - tail:])))
    u_var = float(np.var(u[lo:hi]))
    ise = float(np.sum(err[lo:hi] ** 2))

    outside = np.nonzero(np.abs(err[disturbance_time:]) >= band)[0]
    if len(outside) == 0:
        settle = disturbance_time
    elif outside[-1] + disturbance_time == n - 1:
        settle = None
    else:
        settle = int(outside[-1] + disturbance_time + 1)
    return MetricsReport(sse, u_var, settle, ise, (lo, hi))


@dataclass(frozen=True)
class ComparisonReport:
    first: MetricsReport
    second: MetricsReport
    ratio: float | None
    variants: tuple[str, str]

    @property
    def ratio_text(self) -> str:
        return "undefined" if self.ratio is None else f"{self.ratio:.6g}"

    def as_dict(self) -> dict:
        return {
            "variants": list(self.variants),
            "first": self.first.as_dict(),
            "second": self.second.as_dict(),
            "u_var_ratio": self.ratio,
        }

    def table(self) -> str:
        a, b = self.variants
        rows = [
            f"{'metric':<12}{a:>16}{b:>16}",
            f"{'sse':<12}{self.first.sse:>16.6g}{self.second.sse:>16.6g}",
            f"{'u_var':<12}{self.first.u_var:>16.6g}{self.second.u_var:>16.6g}",
            f"{'settle_time':<12}{_fmt_opt(self.first.settle_time):>16}"
            f"{_fmt_opt(self.second.settle_time):>16}",
            f"{'ise':<12}{self.first.ise:>16.6g}{self.second.ise:>16.6g}",
            f"u_var ratio ({b}/{a}): {self.ratio_text}",
        ]
        return "\n".join(rows)


def _fmt_opt(x) -> str:
    return "-" if x is None else str(x)


def variance_ratio(num: float, den: float) -> float | None:
    if not (math.isfinite(num) and math.isfinite(den)) or den <= RATIO_FLOOR:
        return None
    return num / den


def _check_pair(cfg1: ScenarioConfig, cfg2: ScenarioConfig) -> None:
    if dataclasses.replace(cfg2.controller, variant=cfg1.controller.variant) != cfg1.controller:
        raise ConfigError("compared controllers may differ only in their variant")
    neutral = dict(controller=cfg1.controller, output_path=cfg1.output_path)
    if cfg1 != cfg2.replace(**neutral):
        diff = [
            f.name for f in dataclasses.fields(ScenarioConfig)
            if f.name not in neutral and getattr(cfg1, f.name) != getattr(cfg2, f.name)
        ]
        raise ConfigError(f"compared scenarios differ outside the controller: {diff}")


def compare(
    cfg1: ScenarioConfig,
    cfg2: ScenarioConfig,
    **metric_kwargs,
) -> tuple[ComparisonReport, list[StepRecord], list[StepRecord]]:
    """Run two scenarios that differ only in the controller and compare them.

    The ratio is ``u_var(second) / u_var(first)``; ``None`` when the first
    variance is numerically zero.
    """
    _check_pair(cfg1, cfg2)
    metric_kwargs.setdefault("disturbance_time", cfg1.disturbance.step_time)
    rec1 = run_scenario(cfg1)
    rec2 = run_scenario(cfg2)
    m1 = compute_metrics(rec1, **metric_kwargs)
    m2 = compute_metrics(rec2, **metric_kwargs)
    report = ComparisonReport(
        m1, m2, variance_ratio(m2.u_var, m1.u_var),
        (cfg1.controller.variant.value, cfg2.controller.variant.value),
    )
    return report, rec1, rec2


def _fmt(x: float) -> str:
    return format(x, ".17g")


def export_csv(records: Iterable[StepRecord], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(CSV_HEADER)
            for r in records:
                wr.writerow(
                    [str(r.t), _fmt(r.w), _fmt(r.y), _fmt(r.u), _fmt(r.v), _fmt(r.e)]
                    + [_fmt(x) for x in r.theta]
                    + ["" if r.kc is None else _fmt(r.kc), _fmt(r.eps)]
                )
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV {path}: {exc.strerror}") from exc


def read_csv(path: str | Path) -> list[StepRecord]:
    with Path(path).open(newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {header}")
        out = []
        for row in rd:
            vals = [float(x) if x else None for x in row]
            out.append(StepRecord(
                int(row[0]), *vals[1:6], tuple(vals[6:14]), vals[14], vals[15],
            ))
        return out
