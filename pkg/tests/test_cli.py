"""End-to-end command-line tests: subcommand chains, exit codes, sidecars."""

import json

import numpy as np

import faultlab.cli as cli
from faultlab.cli import main
from faultlab.errors import DataError
from faultlab.io import read_detection_csv, write_series_csv
from faultlab.series import Modality, Series


def write_cfg(path, cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


SYNTH_SMALL = {
    "train_days": 1,
    "test_days": 2,
    "n_events": 2,
    "train_events": 1,
    "interval_s": 600,
    "nodes": [{"id": "node1"}],
}


def test_short_chain_produces_report(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 11, "synth": SYNTH_SMALL})
    synth_dir = tmp_path / "synth"
    assert main(["synth", "--config", cfg, "--out", str(synth_dir)]) == 0
    assert (synth_dir / "series.csv").exists()
    assert (synth_dir / "events.csv").exists()
    assert (synth_dir / "schedule.json").exists()

    inj_dir = tmp_path / "inj"
    assert main(["inject", "--config", cfg, "--in", str(synth_dir / "series.csv"),
                 "--modality", "soil_moisture", "--kind", "short",
                 "--out", str(inj_dir)]) == 0
    assert (inj_dir / "faulted.csv").exists()
    assert (inj_dir / "faulted.labels.json").exists()

    model_dir = tmp_path / "model"
    assert main(["train", "--detector", "short", "--delta", "0.05",
                 "--out", str(model_dir)]) == 0
    model = json.loads((model_dir / "model.json").read_text())
    assert model["kind"] == "short"

    det_dir = tmp_path / "det"
    assert main(["detect", "--in", str(inj_dir / "faulted.csv"),
                 "--detector", "short", "--model", str(model_dir / "model.json"),
                 "--out", str(det_dir)]) == 0
    flags = read_detection_csv(det_dir / "flags.csv")
    assert set(flags) == {"short"} and len(flags["short"]) >= 1

    eval_dir = tmp_path / "eval"
    assert main(["evaluate", "--in", str(inj_dir / "faulted.csv"),
                 "--flags", str(det_dir / "flags.csv"),
                 "--events", str(synth_dir / "events.csv"),
                 "--labels", str(inj_dir / "faulted.labels.json"),
                 "--fault-kind", "short", "--out", str(eval_dir)]) == 0
    report = json.loads((eval_dir / "report.json").read_text())
    assert 0.0 <= report["mu"] <= 1.0
    assert "false_negative_ratio" in report


def test_noise_chain_produces_report(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "seed": 11, "synth": SYNTH_SMALL,
        "inject": {"kind": "noise", "base_sigma": 0.01, "noise_multiplier": 5.0,
                   "noise_burst_lengths": [18]}})
    synth_dir = tmp_path / "synth"
    main(["synth", "--config", cfg, "--out", str(synth_dir)])

    model_dir = tmp_path / "model"
    assert main(["train", "--detector", "noise",
                 "--in", str(synth_dir / "series.csv"),
                 "--modality", "soil_moisture", "--out", str(model_dir)]) == 0
    doc = json.loads((model_dir / "model.json").read_text())
    assert doc["kind"] == "noise" and doc["sigma_train"] > 0

    inj_dir = tmp_path / "inj"
    assert main(["inject", "--config", cfg, "--in", str(synth_dir / "series.csv"),
                 "--modality", "soil_moisture", "--kind", "noise",
                 "--out", str(inj_dir)]) == 0
    labels = json.loads((inj_dir / "faulted.labels.json").read_text())
    assert labels["noise"]

    det_dir = tmp_path / "det"
    assert main(["detect", "--in", str(inj_dir / "faulted.csv"),
                 "--detector", "noise", "--model", str(model_dir / "model.json"),
                 "--multiplier", "2.0", "--out", str(det_dir)]) == 0
    flags = read_detection_csv(det_dir / "flags.csv")
    assert set(flags) == {"noise"}

    eval_dir = tmp_path / "eval"
    assert main(["evaluate", "--in", str(inj_dir / "faulted.csv"),
                 "--flags", str(det_dir / "flags.csv"),
                 "--events", str(synth_dir / "events.csv"),
                 "--labels", str(inj_dir / "faulted.labels.json"),
                 "--fault-kind", "noise", "--out", str(eval_dir)]) == 0
    report = json.loads((eval_dir / "report.json").read_text())
    assert report["false_negative_ratio"] is not None


def test_llse_train_and_detect_three_nodes(tmp_path):
    synth = dict(SYNTH_SMALL, nodes=[{"id": "n1"}, {"id": "n2"}, {"id": "n3"}])
    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 3, "synth": synth})
    synth_dir = tmp_path / "synth"
    main(["synth", "--config", cfg, "--out", str(synth_dir)])

    model_dir = tmp_path / "model"
    assert main(["train", "--detector", "llse", "--in", str(synth_dir / "series.csv"),
                 "--target", "n1", "--modality", "soil_moisture",
                 "--out", str(model_dir)]) == 0
    doc = json.loads((model_dir / "model.json").read_text())
    assert doc["kind"] == "llse"
    assert sorted(fit["node_id"] for fit in doc["neighbors"]) == ["n2", "n3"]

    det_dir = tmp_path / "det"
    assert main(["detect", "--in", str(synth_dir / "series.csv"),
                 "--detector", "llse", "--model", str(model_dir / "model.json"),
                 "--modality", "soil_moisture", "--out", str(det_dir)]) == 0
    assert (det_dir / "flags.csv").exists()


def test_meta_sidecar_echoes_config_without_paths(tmp_path):
    cfg_doc = {"seed": 11, "synth": SYNTH_SMALL}
    cfg = write_cfg(tmp_path / "cfg.json", cfg_doc)
    out = tmp_path / "out"
    main(["synth", "--config", cfg, "--seed", "7", "--out", str(out)])
    meta = json.loads((out / "series.csv.meta.json").read_text())
    assert set(meta) == {"command", "config"}
    assert meta["command"] == "synth"
    assert meta["config"]["seed"] == 7
    assert meta["config"]["synth"] == SYNTH_SMALL
    assert "out" not in meta["config"]


def test_seed_override_controls_determinism(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {"synth": SYNTH_SMALL})
    outs = [tmp_path / name for name in ("a", "b", "c")]
    for out, seed in zip(outs, ("7", "7", "8")):
        assert main(["synth", "--config", cfg, "--seed", seed,
                     "--out", str(out)]) == 0
    a, b, c = (out.joinpath("series.csv").read_bytes() for out in outs)
    assert a == b
    assert a != c


def test_sweep_writes_grid_outputs(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "seed": 5,
        "synth": {"train_days": 1, "test_days": 2, "n_events": 2, "interval_s": 600},
        "detector": "short",
        "grid": [0.5, 2.0],
        "inject": {"kind": "short"}})
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0

    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param,mu,mu_first_half_hour,fn_ratio"
    assert len(lines) == 3
    assert lines[1].startswith("0.5,")
    for i in range(2):
        doc = json.loads((out / f"report_{i:03d}.json").read_text())
        assert "mu" in doc
    assert (out / "sweep.csv.meta.json").exists()
    assert not (out / "report_002.json").exists()


def test_sweep_failure_removes_partial_outputs(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "seed": 5,
        "synth": {"train_days": 1, "test_days": 2, "n_events": 2, "interval_s": 600},
        "detector": "short",
        "grid": [0.5],
        "inject": {"kind": "short"}})

    def boom(path, report):
        raise DataError("disk full")

    monkeypatch.setattr(cli, "save_report", boom)
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 3
    assert list(out.iterdir()) == []


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["train", "--detector", "short", "--out", str(tmp_path)]) == 2
    assert main(["train", "--detector", "noise", "--out", str(tmp_path)]) == 2
    assert main(["synth", "--config", str(tmp_path / "absent.json"),
                 "--out", str(tmp_path)]) == 2

    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 2

    neg = write_cfg(tmp_path / "neg.json", {"seed": -1, "synth": SYNTH_SMALL})
    assert main(["synth", "--config", neg, "--out", str(tmp_path)]) == 2

    empty_grid = write_cfg(tmp_path / "grid.json", {
        "synth": SYNTH_SMALL, "detector": "short", "grid": []})
    assert main(["sweep", "--config", empty_grid, "--out", str(tmp_path)]) == 2
    for line in capsys.readouterr().err.splitlines():
        assert line.startswith("config error:")


def test_wrong_model_kind_exits_2(tmp_path):
    model_dir = tmp_path / "model"
    main(["train", "--detector", "short", "--delta", "1.0", "--out", str(model_dir)])

    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 1, "synth": SYNTH_SMALL})
    synth_dir = tmp_path / "synth"
    main(["synth", "--config", cfg, "--out", str(synth_dir)])
    code = main(["detect", "--in", str(synth_dir / "series.csv"),
                 "--detector", "noise", "--model", str(model_dir / "model.json"),
                 "--multiplier", "2.0", "--modality", "box_temp",
                 "--out", str(tmp_path)])
    assert code == 2


def test_missing_inputs_exit_3(tmp_path, capsys):
    assert main(["detect", "--in", str(tmp_path / "absent.csv"),
                 "--detector", "short", "--delta", "1.0",
                 "--out", str(tmp_path)]) == 3

    series = tmp_path / "series.csv"
    write_series_csv(series, [Series("n1", Modality.BOX_TEMP, 0.0, 600.0,
                                     np.arange(40.0))])
    assert main(["detect", "--in", str(series), "--detector", "noise",
                 "--model", str(tmp_path / "absent.json"),
                 "--out", str(tmp_path)]) == 3
    for line in capsys.readouterr().err.splitlines():
        assert line.startswith("data error:")


def test_evaluate_rejects_mixed_flag_sources(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 1, "synth": SYNTH_SMALL})
    synth_dir = tmp_path / "synth"
    main(["synth", "--config", cfg, "--out", str(synth_dir)])

    flags = tmp_path / "flags.csv"
    flags.write_text("index,flag_source\n3,short\n5,noise\n")
    code = main(["evaluate", "--in", str(synth_dir / "series.csv"),
                 "--flags", str(flags),
                 "--events", str(synth_dir / "events.csv"),
                 "--modality", "soil_moisture", "--out", str(tmp_path)])
    assert code == 3


def test_numeric_failure_exits_4(tmp_path, capsys):
    huge = np.array([1e300, -1e300, 1e300, -1e300, 1e300, -1e300])
    series = tmp_path / "series.csv"
    write_series_csv(series, [
        Series("t", Modality.SOIL_MOISTURE, 0.0, 600.0, np.linspace(0.2, 0.3, 6)),
        Series("a", Modality.SOIL_MOISTURE, 0.0, 600.0, huge),
        Series("b", Modality.SOIL_MOISTURE, 0.0, 600.0, np.linspace(0.1, 0.4, 6)),
    ])
    assert main(["train", "--detector", "llse", "--in", str(series),
                 "--target", "t", "--out", str(tmp_path)]) == 4
    assert capsys.readouterr().err.startswith("numeric error:")


def test_modality_filter_on_synth_output(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 2, "synth": SYNTH_SMALL})
    out = tmp_path / "out"
    assert main(["synth", "--config", cfg, "--modality", "box_temp",
                 "--out", str(out)]) == 0
    text = (out / "series.csv").read_text()
    assert "box_temp" in text and "soil_moisture" not in text


def test_schedule_json_lists_all_events(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {"seed": 11, "synth": SYNTH_SMALL})
    out = tmp_path / "out"
    main(["synth", "--config", cfg, "--out", str(out)])
    doc = json.loads((out / "schedule.json").read_text())
    # 1 training event + 2 test events; only the 2 test windows go to events.csv
    assert len(doc["schedule"]) == 3
    events_lines = (out / "events.csv").read_text().splitlines()
    assert len(events_lines) == 3
    for ev in doc["schedule"]:
        assert ev["start"] < ev["end"] and ev["rain_mm"] > 0
