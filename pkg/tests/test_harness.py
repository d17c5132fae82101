import csv
import dataclasses
import json
from dataclasses import replace

import numpy as np
import pytest
import yaml

from tacreorient.controller import GROUPS, SCENARIOS, ControllerConfig
from tacreorient.harness import (
    ConfigError,
    echo,
    load_document,
    run_episode,
    scenario_config,
)
from tacreorient.harness.ablation import (
    GROUP_ORDER,
    EpisodeResult,
    format_table,
    matrix,
    read_results,
    results_csv,
    summary,
    write_results,
)
from tacreorient.harness.cli import main
from tacreorient.harness.config import OptimizerConfig, flags_diff
from tacreorient.harness.demo import DEMO_DEFAULTS, demo_settings, draw_obstacle
from tacreorient.harness.plots import SERIES, MalformedLog, emit_plots, series
from tacreorient.harness.runner import (
    LABELS,
    SLIPPED,
    STALLED,
    SUCCESS,
    Episode,
    StallDetector,
    initial_optimizer,
)
from tacreorient.simulation import SUITE_IDS
from tacreorient.simulation.log import COLUMNS


@pytest.fixture(scope="module")
def doc():
    return load_document()


# -- configuration ----------------------------------------------------------------------

def test_thresholds_echo(doc):
    for sc in SCENARIOS:
        e = echo(scenario_config(doc, "soft", sc))
        assert e["success_deg"] == 5.0
        assert e["slip_mm"] == 20.0
        assert e["rotation_cap_deg"] == pytest.approx(3.0, abs=1e-12)


def test_lambda0_defaults_to_twice_d_lim(doc):
    cfg = scenario_config(doc, "soft", "contact")
    assert cfg.lambda0 == 2 * cfg.controller.d_lim
    assert initial_optimizer(cfg).lambda0 == cfg.lambda0


def test_noa_differs_from_cg_only_in_online_adjust(doc):
    assert flags_diff(GROUPS["NOA"], GROUPS["CG"]) == {"online_adjust"}
    cg = scenario_config(doc, "curved", "contact", group="CG")
    noa = scenario_config(doc, "curved", "contact", group="NOA")
    assert replace(noa.controller, enabled=cg.controller.enabled) == cg.controller
    assert replace(noa, controller=cg.controller, group="CG") == cg


def test_user_file_merges_over_defaults(tmp_path):
    path = tmp_path / "user.yaml"
    path.write_text(yaml.safe_dump({"controller": {"delta_f": 0.5}, "limits": {"slip_mm": 25.0}}))
    d = load_document(path)
    cfg = scenario_config(d, "soft", "contact")
    assert cfg.controller.delta_f == 0.5 and cfg.limits.slip_mm == 25.0
    # untouched defaults survive, scenario overrides still apply on top
    assert cfg.controller.v0 == load_document()["scenarios"]["contact"]["controller"]["v0"]


def test_bad_config_rejected(tmp_path, doc):
    bad = dict(doc, controller=dict(doc["controller"], warp=1))
    with pytest.raises(ConfigError):
        scenario_config(bad, "soft", "contact")
    with pytest.raises(ConfigError):
        scenario_config(doc, "teapot", "contact")
    with pytest.raises(ConfigError):
        OptimizerConfig(cadence=0)
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_document(path)


def test_controller_config_carries_no_obstacle_fields(doc):
    # the controller only meets the obstacle through touch
    hidden = {"box", "boxes", "obstacle", "clearance", "env_mu", "mu", "height", "environment"}
    assert not hidden & {f.name for f in dataclasses.fields(ControllerConfig)}
    assert not hidden & {f.name for f in dataclasses.fields(OptimizerConfig)}
    assert {"clearance_mm", "box_top_mm", "box_mu"} <= set(DEMO_DEFAULTS)


def test_demo_settings(doc):
    assert demo_settings(doc)["disturbance_pct"] == 20.0
    with pytest.raises(ConfigError):
        demo_settings({"demo": {"spin": 1}})
    a, b = draw_obstacle(DEMO_DEFAULTS, 50.0, 1), draw_obstacle(DEMO_DEFAULTS, 50.0, 1)
    assert a == b and a != draw_obstacle(DEMO_DEFAULTS, 50.0, 2)
    assert 0.5 <= a.mu <= 0.7 and 5.0 <= a.clearance <= 15.0


# -- stall detector ------------------------------------------------------------------------

def test_stall_detector_window():
    st = StallDetector(window=1.0, progress=0.5, floor=5.0, cycle_time=0.1)
    fired = [st.push(20.0 - 0.04 * k) for k in range(25)]  # 0.4 deg per second
    assert not any(fired[:10]) and all(fired[10:])
    st = StallDetector(window=1.0, progress=0.5, floor=5.0, cycle_time=0.1)
    assert not any(st.push(20.0 - 0.06 * k) for k in range(25))  # 0.6 deg per second


def test_stall_detector_floor_and_quiescence():
    st = StallDetector(window=1.0, progress=0.5, floor=5.0, cycle_time=0.1, slip_growth=1.0)
    assert not any(st.push(4.0) for _ in range(20))
    st = StallDetector(window=1.0, progress=0.5, floor=5.0, cycle_time=0.1, slip_growth=1.0)
    for k in range(20):
        st.push(10.0, slip=0.5 * k)
    assert st.stalled() and not st.quiescent()
    for _ in range(15):
        st.push(10.0, slip=9.5)
    assert st.quiescent()


# -- episodes -----------------------------------------------------------------------------

@pytest.mark.parametrize("scenario", SCENARIOS)
def test_cg_episode_succeeds(doc, scenario):
    out = run_episode(scenario_config(doc, "textured", scenario))
    assert out.label == SUCCESS and out.final_error_deg < 5.0


def test_nc_contact_on_board_eraser_slips(doc):
    out = run_episode(scenario_config(doc, "soft", "contact", group="NC"))
    assert out.label == SLIPPED and out.max_slip_mm > 20.0


def test_time_limit_gives_stall(doc):
    cfg = replace(scenario_config(doc, "textured", "contact"), time_limit=1.0)
    out = run_episode(cfg)
    assert out.label == STALLED and out.duration_s == pytest.approx(1.0, abs=0.05)
    assert out.final_error_deg >= 5.0 and out.max_slip_mm <= 20.0


def test_noa_never_probes(doc):
    for sc in SCENARIOS:
        cfg = replace(scenario_config(doc, "soft", sc, group="NOA"), time_limit=3.0)
        out = run_episode(cfg)
        assert out.probe_cycles == 0 and out.optimizer_steps == 0
        assert out.final_q == tuple(float(v) for v in initial_optimizer(cfg).q)


def test_episode_log_and_plots(doc, tmp_path):
    cfg = replace(scenario_config(doc, "curved", "contact"), time_limit=4.0)
    log = tmp_path / "ep.csv"
    out = run_episode(cfg, log)
    assert out.label in LABELS
    data = series(log)
    for name, cols in SERIES.items():
        assert all(len(data[name][c]) == out.ticks for c in cols)
    force = data["force"]["grip_force"]
    steps = np.diff(force)
    d = cfg.controller.delta_f
    assert np.all(np.isclose(steps, 0.0) | np.isclose(steps, d))
    assert force[0] in (cfg.controller.f_init, cfg.controller.f_init + d)
    written = emit_plots(log, tmp_path / "plots")
    with open(written["error"]) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SERIES["error"] and len(rows) == out.ticks + 1


def test_empty_log_gives_headers_only(tmp_path):
    log = tmp_path / "empty.csv"
    log.write_text(",".join(COLUMNS) + "\n")
    written = emit_plots(log, tmp_path / "plots")
    for name, path in written.items():
        assert path.read_text() == ",".join(SERIES[name]) + "\n"


def test_malformed_log(tmp_path):
    log = tmp_path / "bad.csv"
    log.write_text("a,b\n1,2\n")
    with pytest.raises(MalformedLog):
        emit_plots(log, tmp_path)
    with pytest.raises(MalformedLog):
        emit_plots(tmp_path / "missing.csv", tmp_path)


# -- ablation tables ------------------------------------------------------------------------

def fake_results():
    out = []
    for sc in SCENARIOS:
        for o in SUITE_IDS:
            for g in GROUP_ORDER:
                for seed in range(3):
                    label = SUCCESS if g in ("CG", "NCB") else STALLED
                    out.append(EpisodeResult(o, sc, g, seed, label, 1.25 + seed, 0.5, 12.0))
    return out


def test_matrix_shape_and_table():
    res = fake_results()
    for sc in SCENARIOS:
        m = matrix(res, sc)
        assert len(m) == 5 and all(len(row) == 5 for row in m.values())
    table = format_table(res, "contact")
    assert table.splitlines()[1].split(" | ")[0].strip() == "object"
    assert "✓ ✓ ✓" in table and "ST ST ST" in table
    s = summary(res)
    assert s["contact"]["CG"]["objects_all_success"] == 5
    assert s["in_air"]["NTO"]["objects_with_stall"] == 5


def test_results_round_trip(tmp_path):
    res = fake_results()
    path = write_results(res, tmp_path / "r.csv")
    back = read_results(path)
    assert results_csv(back) == results_csv(res) == path.read_text()


# -- CLI -------------------------------------------------------------------------------------

def test_cli_run_and_plot(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("episode: {time_limit: 2.0}\n")
    assert main(["run", "--object", "soft", "--scenario", "in_air", "--config", str(cfg),
                 "--seed", "1", "--out", str(tmp_path / "run")]) == 0
    record = json.loads((tmp_path / "run" / "soft_in_air_CG_seed1.json").read_text())
    assert record["thresholds"]["success_deg"] == 5.0
    log = tmp_path / "run" / "soft_in_air_CG_seed1.csv"
    assert main(["plot", str(log), "--out", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "soft_in_air_CG_seed1_force.csv").exists()


def test_cli_errors(tmp_path, capsys):
    assert main(["plot", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("controller: {warp: 1}\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_ablate_subset(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("episode: {time_limit: 1.0}\n")
    assert main(["ablate", "--config", str(cfg), "--seeds", "1", "--scenario", "in_air", "--group", "NTO",
                 "--group", "CG", "--object", "soft", "--out", str(tmp_path / "abl")]) == 0
    rows = read_results(tmp_path / "abl" / "results.csv")
    assert [(r.group, r.seed) for r in rows] == [("NTO", 0), ("CG", 0)]
    assert (tmp_path / "abl" / "tables.txt").exists() and (tmp_path / "abl" / "summary.json").exists()
