import json
import math

import numpy as np
import pytest

from selftune.controllers import ControllerConfig, Variant
from selftune.harness import (
    CSV_HEADER,
    StepRecord,
    compare,
    compute_metrics,
    export_csv,
    prbs,
    read_csv,
    run_scenario,
)
from selftune.plant import make_default_plant
from selftune.scenario import (
    Disturbance,
    EstimatorConfig,
    Reference,
    ScenarioConfig,
    config_from_dict,
    load_config,
    replica_config,
    save_config,
)
from selftune.sigcore import ConfigError


def warm_cfg(variant="J2", steps=400, magnitude=0.0, sigma2=0.0):
    model = make_default_plant(sigma2=sigma2)
    return ScenarioConfig(
        plant=model,
        controller=ControllerConfig(Variant(variant), 0.01),
        estimator=EstimatorConfig(theta0=tuple(model.theta), P0_scale=1e-12, lam=1.0),
        reference=Reference.constant(1.0),
        disturbance=Disturbance(steps // 2, magnitude),
        steps=steps,
    )


def zero_cfg(steps=10):
    return ScenarioConfig(
        plant=make_default_plant(sigma2=0.0),
        reference=Reference.constant(0.0),
        disturbance=Disturbance(0, 0.0),
        steps=steps,
    )


def rec(t, y=0.0, w=0.0, u=0.0):
    return StepRecord(t, w, y, u, 0.0, 0.0, (0.0,) * 8, None, 0.0)


# --- run_scenario ---------------------------------------------------------------

def test_zero_run_stays_zero():
    records = run_scenario(zero_cfg())
    assert len(records) == 10
    assert all(r.y == 0.0 and r.u == 0.0 for r in records)


def test_warmup_commands_are_zero():
    records = run_scenario(replica_config("J1", steps=200))
    assert [r.u for r in records[:5]] == [0.0] * 5
    assert records[5].u != 0.0


@pytest.mark.parametrize("variant", ["J1", "J2"])
def test_warm_start_reaches_reference(variant):
    records = run_scenario(warm_cfg(variant))
    assert abs(records[-1].y - 1.0) <= 1e-6
    assert records[-1].kc is None if variant == "J1" else records[-1].kc > 1.0


@pytest.mark.parametrize("variant", ["J1", "J2"])
def test_warm_start_ise_after_transient(variant):
    records = run_scenario(warm_cfg(variant))
    m = compute_metrics(records, (100, len(records)))
    assert m.ise <= 1e-12


def test_replica_recovers_after_load_step():
    cfg = replica_config("J1")
    records = run_scenario(cfg)
    st = cfg.disturbance.step_time
    assert records[st + 1].v == cfg.disturbance.magnitude and records[st - 1].v == 0.0
    err = np.abs([r.y - r.w for r in records])
    assert err[st:st + 10].max() > 1e-3  # the step is visible
    assert err[-500:].max() < 5e-3


def test_records_are_deterministic_and_finite():
    cfg = replica_config("J2", steps=1000)
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a == b
    for r in a:
        assert all(map(math.isfinite, (r.w, r.y, r.u, r.v, r.e, r.eps, r.kc, *r.theta)))


def test_observer_sees_every_step():
    seen = []
    run_scenario(zero_cfg(), lambda t, est, ctrl: seen.append(t))
    assert seen == list(range(10))


# --- metrics ----------------------------------------------------------------------

def test_metrics_constant_records():
    m = compute_metrics([rec(t, 1.0, 1.0, 0.3) for t in range(100)], (0, 100))
    assert m.sse == 0.0 and m.u_var == 0.0 and m.ise == 0.0
    assert m.settle_time == 0


def test_metrics_alternating_command_variance():
    records = [rec(t, u=1.0 if t % 2 else -1.0) for t in range(100)]
    assert compute_metrics(records, (0, 100)).u_var == 1.0


def test_metrics_settle_time_and_sse():
    # error 1 up to t=59, then 0.001
    records = [rec(t, y=1.0 + (1.0 if t < 60 else 1e-3), w=1.0) for t in range(100)]
    m = compute_metrics(records, disturbance_time=20, skip=0)
    assert m.settle_time == 60
    assert m.sse == pytest.approx(1e-3)
    assert m.ise == pytest.approx(40 + 40 * 1e-6)
    assert m.window == (20, 100)
    never = [rec(t, y=2.0, w=1.0) for t in range(100)]
    assert compute_metrics(never, (0, 100)).settle_time is None


@pytest.mark.parametrize("window", [(50, 50), (90, 120), (-1, 10)])
def test_metrics_bad_window(window):
    with pytest.raises(ConfigError):
        compute_metrics([rec(t) for t in range(100)], window)


# --- compare ----------------------------------------------------------------------

def test_compare_identical_runs_ratio_one():
    cfg = replica_config("J1", steps=800)
    report, r1, r2 = compare(cfg, cfg)
    assert report.ratio == 1.0
    assert r1 == r2


def test_compare_degenerate_ratio_undefined():
    report, *_ = compare(warm_cfg("J1"), warm_cfg("J2"))
    assert report.first.u_var < 1e-20 and report.second.u_var < 1e-20
    assert report.ratio is None and report.ratio_text == "undefined"
    assert "undefined" in report.table()


def test_compare_rejects_mismatched_scenarios():
    a = replica_config("J1", steps=800)
    with pytest.raises(ConfigError):
        compare(a, replica_config("J2", steps=800, seed=1))
    with pytest.raises(ConfigError):
        compare(a, a.replace(controller=ControllerConfig(Variant.J2, r=0.02)))


def test_compare_allows_different_output_paths():
    a = replica_config("J1", steps=300)
    report, *_ = compare(a, a.with_variant("J2").replace(output_path="other.csv"))
    assert report.variants == ("J1", "J2")
    assert report.ratio is not None and report.ratio > 0


# --- CSV --------------------------------------------------------------------------

def test_csv_empty(tmp_path):
    p = tmp_path / "empty.csv"
    export_csv([], p)
    assert p.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()


def test_csv_zero_run_line_count(tmp_path):
    p = tmp_path / "zero.csv"
    export_csv(run_scenario(zero_cfg()), p)
    text = p.read_text()
    assert text.count("\n") == 11 and "\r" not in text
    assert text.splitlines()[0] == "t,w,y,u,v,e,a1,a2,a3,a4,b0,b1,b2,b3,kc,eps"
    assert text.splitlines()[1].split(",")[14] == ""  # kc blank for J1


def test_csv_round_trip(tmp_path):
    records = run_scenario(replica_config("J2", steps=600))
    p = tmp_path / "rt.csv"
    export_csv(records, p)
    back = read_csv(p)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert a.t == b.t
        np.testing.assert_allclose(
            [a.w, a.y, a.u, a.v, a.e, *a.theta, a.kc, a.eps],
            [b.w, b.y, b.u, b.v, b.e, *b.theta, b.kc, b.eps],
            rtol=1e-10, atol=1e-300,
        )


def test_csv_significant_digits(tmp_path):
    p = tmp_path / "d.csv"
    export_csv([rec(0, y=1 / 3)], p)
    y_field = p.read_text().splitlines()[1].split(",")[2]
    assert len(y_field.replace("0.", "", 1)) >= 12


def test_csv_io_error_names_path(tmp_path):
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        export_csv([], target)


def test_csv_bytes_deterministic(tmp_path):
    cfg = replica_config("J1", steps=500)
    export_csv(run_scenario(cfg), tmp_path / "a.csv")
    export_csv(run_scenario(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


# --- configuration ----------------------------------------------------------------

def test_config_round_trip(tmp_path):
    cfg = replica_config("J2", lam=0.995, seed=4)
    save_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg


def test_config_defaults():
    cfg = config_from_dict({})
    assert cfg.steps == 5000 and cfg.disturbance.step_time == 1000
    assert cfg.estimator.lam == 0.998 and cfg.controller.r == 0.01
    assert cfg.plant.theta.tolist() == make_default_plant().theta.tolist()


@pytest.mark.parametrize(
    "doc",
    [
        {"stpes": 100},
        {"plant": {"sigma": 1e-8}},
        {"controller": {"variant": "J3"}},
        {"estimator": {"lambda": 1.5}},
        {"estimator": {"theta0": [0, 1]}},
        {"steps": 50},
        {"steps": 200, "disturbance": {"step_time": 300}},
        {"reference": [[5, 1.0]]},
        {"plant": {"A": [1, -2, 0, 0, 0]}},
        {"plant": []},
    ],
)
def test_config_rejects_invalid(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_reference_schedule():
    ref = Reference(((0, 1.0), (3, 2.0), (5, 0.5)))
    assert ref.values(7) == [1.0, 1.0, 1.0, 2.0, 2.0, 0.5, 0.5]


def test_seed_drives_plant_noise():
    cfg = config_from_dict({"seed": 9, "steps": 2000})
    assert cfg.plant.seed == 9


def test_prbs_is_balanced_and_periodic():
    seq = prbs(254)
    assert set(seq) == {-1.0, 1.0}
    assert sum(seq[:127]) == 1.0
    assert seq[:127] == seq[127:]


def test_example_configs_load():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for p in sorted(root.glob("*.json")):
        cfg = load_config(p)
        assert json.loads(p.read_text())["steps"] == cfg.steps
