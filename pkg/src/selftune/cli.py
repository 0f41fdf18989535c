"""Command line entry point: ``selftune run|compare|sweep``.

Exit status is 0 on success, 1 on a configuration or I/O error and 2 when
the simulation produced a non-finite signal.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .harness import compare, compute_metrics, export_csv, run_scenario
from .plant import SimulationFault
from .scenario import ScenarioConfig, config_from_dict, load_config
from .sigcore import ConfigError

log = logging.getLogger("selftune")

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2

# sweepable knob -> (section, key) in the JSON document
SWEEP_PARAMS = {
    "r": ("controller", "r"),
    "lambda": ("estimator", "lambda"),
    "P0_scale": ("estimator", "P0_scale"),
    "sigma2": ("plant", "sigma2"),
    "d": ("plant", "d"),
    "magnitude": ("disturbance", "magnitude"),
    "step_time": ("disturbance", "step_time"),
    "seed": (None, "seed"),
    "steps": (None, "steps"),
}


def _load(path: str, args) -> ScenarioConfig:
    cfg = load_config(path)
    if args.seed is None and args.steps is None:
        return cfg
    data = cfg.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.steps is not None:
        data["steps"] = args.steps
    return config_from_dict(data)


def _set(data: dict[str, Any], param: str, value: float) -> None:
    section, key = SWEEP_PARAMS[param]
    if key in ("seed", "steps", "step_time"):
        if value != int(value):
            raise ConfigError(f"{param} must be an integer, got {value}")
        value = int(value)
    (data if section is None else data[section])[key] = value


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _metrics_line(m) -> str:
    settle = "-" if m.settle_time is None else m.settle_time
    return f"sse={m.sse:.6g} u_var={m.u_var:.6g} settle_time={settle} ise={m.ise:.6g}"


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    out = Path(args.out or cfg.output_path)
    records = run_scenario(cfg)
    export_csv(records, out)
    m = compute_metrics(records, disturbance_time=cfg.disturbance.step_time)
    _emit(args, f"{cfg.controller.variant.value}: {len(records)} steps -> {out}\n"
                f"{_metrics_line(m)}")
    if args.plot:
        from .plotting import render_run

        png = render_run(records, out.with_suffix(".png"), cfg.controller.variant.value)
        _emit(args, f"figure -> {png}")
    return EXIT_OK


def _pair_paths(cfg1: ScenarioConfig, cfg2: ScenarioConfig, out: str | None):
    p1, p2 = Path(cfg1.output_path), Path(cfg2.output_path)
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        p1, p2 = d / p1.name, d / p2.name
    if p1 == p2:
        p1 = p1.with_name(f"{p1.stem}_1{p1.suffix}")
        p2 = p2.with_name(f"{p2.stem}_2{p2.suffix}")
    return p1, p2


def cmd_compare(args) -> int:
    cfg1 = _load(args.config1, args)
    cfg2 = _load(args.config2, args)
    report, rec1, rec2 = compare(cfg1, cfg2)
    p1, p2 = _pair_paths(cfg1, cfg2, args.out)
    export_csv(rec1, p1)
    export_csv(rec2, p2)
    report_path = p1.parent / "comparison.json"
    report_path.write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    _emit(args, report.table())
    _emit(args, f"runs -> {p1}, {p2}; report -> {report_path}")
    if args.plot:
        from .plotting import render_comparison, render_run

        render_run(rec1, p1.with_suffix(".png"), report.variants[0])
        render_run(rec2, p2.with_suffix(".png"), report.variants[1])
        png = render_comparison(rec1, rec2, p1.parent / "comparison.png", report.variants)
        _emit(args, f"figures -> {p1.with_suffix('.png')}, {p2.with_suffix('.png')}, {png}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _load(args.config, args)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(base.output_path).stem
    rows = []
    for value in args.values:
        data = base.to_dict()
        _set(data, args.param, value)
        cfg = config_from_dict(data)
        records = run_scenario(cfg)
        path = out_dir / f"{stem}_{args.param}={value:g}.csv"
        export_csv(records, path)
        m = compute_metrics(records, disturbance_time=cfg.disturbance.step_time)
        rows.append((value, m))
        _emit(args, f"{args.param}={value:g}: {_metrics_line(m)}")
    summary = out_dir / f"sweep_{args.param}.csv"
    with summary.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([args.param, "sse", "u_var", "settle_time", "ise"])
        for value, m in rows:
            wr.writerow([
                format(value, ".17g"), format(m.sse, ".17g"), format(m.u_var, ".17g"),
                "" if m.settle_time is None else m.settle_time, format(m.ise, ".17g"),
            ])
    _emit(args, f"summary -> {summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--steps", type=int, help="override the run length")
    common.add_argument("--out", help="CSV path (run) or output directory (compare, sweep)")
    common.add_argument("--quiet", action="store_true", help="suppress the report")
    common.add_argument("--plot", action="store_true", help="render PNG figures next to the CSVs")

    parser = argparse.ArgumentParser(
        prog="selftune", description="Self-tuning excitation controller simulations."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate one scenario to CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="run and compare two controllers")
    p.add_argument("config1")
    p.add_argument("config2")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="one-knob sensitivity sweep")
    p.add_argument("config")
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, nargs="+", type=float)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except SimulationFault as exc:
        log.error("simulation fault: %s", exc)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
