import json

import numpy as np
import pytest

import seizlearn as sl
from seizlearn.cli import main, read_trace


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    rc = run_cli("synth", "--out", str(out), "--seed", "3", "--duration", "300",
                 "--channels", "4", "--rate", "48", "--no-drift")
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def model_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    rc = run_cli("train", "--record", str(synth_dir / "record.csv"),
                 "--annotations", str(synth_dir / "annotations.csv"),
                 "--out", str(out))
    assert rc == 0
    return out


def test_synth_outputs_are_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("synth", "--out", str(out), "--seed", "7",
                       "--duration", "120") == 0
    for name in ("record.csv", "annotations.csv", "config.json", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_train_run_eval_pipeline(synth_dir, model_dir, tmp_path):
    run_out = tmp_path / "run"
    rc = run_cli("run", "--model", str(model_dir / "model.json"),
                 "--record", str(synth_dir / "record.csv"),
                 "--out", str(run_out), "--mode", "float", "--online", "off")
    assert rc == 0
    eval_out = tmp_path / "eval"
    rc = run_cli("eval", str(run_out / "trace.csv"),
                 "--annotations", str(synth_dir / "annotations.csv"),
                 "--fs", "256", "--out", str(eval_out), "--skip-warmup")
    assert rc == 0
    table = (eval_out / "comparison.csv").read_text().splitlines()
    header, row = table[0].split(","), table[1].split(",")
    sens = float(row[header.index("sensitivity")])
    assert sens == 100.0             # separable fixture: everything detected
    assert (eval_out / "cumulative_trace.csv").exists()


def test_run_online_off_leaves_model_file_unchanged(synth_dir, model_dir, tmp_path):
    model_path = model_dir / "model.json"
    before = model_path.read_bytes()
    rc = run_cli("run", "--model", str(model_path),
                 "--record", str(synth_dir / "record.csv"),
                 "--out", str(tmp_path / "o"), "--online", "off")
    assert rc == 0
    assert model_path.read_bytes() == before


def test_run_online_prefix_equality(synth_dir, model_dir, tmp_path):
    args = dict(model=str(model_dir / "model.json"),
                record=str(synth_dir / "record.csv"))
    out_off = tmp_path / "off"
    out_on = tmp_path / "on"
    assert run_cli("run", "--model", args["model"], "--record", args["record"],
                   "--out", str(out_off), "--online", "off") == 0
    assert run_cli("run", "--model", args["model"], "--record", args["record"],
                   "--out", str(out_on), "--online", "on", "--ct", "0.8",
                   "--ws", "4") == 0
    off = read_trace(out_off / "trace.csv")
    on = read_trace(out_on / "trace.csv")
    retrains = np.nonzero(on["retrained"])[0]
    assert len(retrains) > 0
    first = int(retrains[0])
    assert np.array_equal(off["label"][:first + 1], on["label"][:first + 1])


def test_run_writes_feature_trace_and_updated_model(synth_dir, model_dir, tmp_path):
    out = tmp_path / "full"
    rc = run_cli("run", "--model", str(model_dir / "model.json"),
                 "--record", str(synth_dir / "record.csv"), "--out", str(out),
                 "--online", "on", "--dump-features", "--save-model")
    assert rc == 0
    assert (out / "features.csv").read_text().startswith(
        "sample,channel,line_length,bp_alpha,bp_beta,bp_gamma")
    updated = sl.load_model(out / "model_updated.json")
    original = sl.load_model(model_dir / "model.json")
    assert not np.array_equal(updated.weights, original.weights)


def test_tune_writes_report_and_model(synth_dir, model_dir, tmp_path):
    out = tmp_path / "tuned"
    rc = run_cli("tune", "--model", str(model_dir / "model.json"),
                 "--record", str(synth_dir / "record.csv"),
                 "--annotations", str(synth_dir / "annotations.csv"),
                 "--out", str(out), "--ws-min", "2", "--ws-max", "4",
                 "--ct", "0.7,0.9")
    assert rc == 0
    lines = (out / "tuning_report.csv").read_text().splitlines()
    assert lines[0] == "ws,ct,sensitivity,specificity,far_per_day"
    assert len(lines) == 1 + 3 * 2
    tuned = sl.load_model(out / "model.json")
    assert tuned.hyperparams.ws in (2, 3, 4)
    assert tuned.hyperparams.ct in (0.7, 0.9)


def test_verify_filters_passes_for_reference_banks(tmp_path, capsys):
    for fs in ("1000", "256"):
        assert run_cli("verify-filters", "--fs", fs, "--out", str(tmp_path / fs)) == 0
        report = json.loads((tmp_path / fs / "filter_report.json").read_text())
        assert all(band["passed"] for band in report.values())


def test_missing_file_is_validation_error(tmp_path):
    rc = run_cli("run", "--model", "/nonexistent/model.json",
                 "--record", "/nonexistent/rec.csv", "--out", str(tmp_path / "x"))
    assert rc == 1


def test_unknown_flag_is_validation_error():
    assert run_cli("synth", "--out", "/tmp/x", "--frobnicate") == 1


def test_invalid_hyperparams_are_validation_error(synth_dir, model_dir, tmp_path):
    rc = run_cli("run", "--model", str(model_dir / "model.json"),
                 "--record", str(synth_dir / "record.csv"),
                 "--out", str(tmp_path / "x"), "--online", "on", "--ct", "0.4")
    assert rc == 1


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 9, "duration": 120.0}))
    a = tmp_path / "a"
    assert run_cli("synth", "--out", str(a), "--config", str(cfg)) == 0
    effective = json.loads((a / "config.json").read_text())
    assert effective["seed"] == 9                  # config file beats default
    b = tmp_path / "b"
    assert run_cli("synth", "--out", str(b), "--config", str(cfg),
                   "--seed", "4") == 0
    effective = json.loads((b / "config.json").read_text())
    assert effective["seed"] == 4                  # flag beats config file


def test_manifest_lists_inputs_with_hashes(synth_dir, model_dir):
    manifest = json.loads((model_dir / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert len(manifest["inputs"]) == 2
    for entry in manifest["inputs"]:
        assert len(entry["sha256"]) == 64


def test_data_dir_env_resolution(synth_dir, model_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("SEIZLEARN_DATA_DIR", str(synth_dir))
    out = tmp_path / "env"
    rc = run_cli("run", "--model", str(model_dir / "model.json"),
                 "--record", "record.csv", "--out", str(out))
    assert rc == 0


def test_trace_round_trip(synth_dir, model_dir, tmp_path):
    out = tmp_path / "rt"
    assert run_cli("run", "--model", str(model_dir / "model.json"),
                   "--record", str(synth_dir / "record.csv"),
                   "--out", str(out), "--mode", "fixed") == 0
    trace = read_trace(out / "trace.csv")
    assert set(trace) == {"sample", "z", "p", "label", "retrained", "skipped"}
    assert np.array_equal(trace["sample"], np.arange(len(trace["sample"])))
    assert np.all((trace["p"] >= 0) & (trace["p"] <= 1))
