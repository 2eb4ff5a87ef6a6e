"""Command-line surface: synth, train, tune, run, eval, verify-filters.

Exit codes: 0 success, 1 validation error (bad flags, malformed inputs),
2 unexpected runtime failure.  Every subcommand writes its outputs under
--out along with the effective configuration (flags override config-file
entries, which override defaults) and a manifest of inputs, seed and
config hash.  Relative input paths that do not exist locally are also
resolved against $SEIZLEARN_DATA_DIR.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .data import (EEGRecord, SynthConfig, read_annotations, read_csv, load_model,
                   save_model, synth_generate, write_annotations, write_atomic, write_csv)
from .dsp import default_filter_bank, verify_filter_bank
from .evaluation import EvalConfig, compare
from .features import window_length, write_feature_trace
from .online import Hyperparams
from .pipeline import compute_features, run_record
from .train import (DEFAULT_CT_GRID, DEFAULT_WS_GRID, SplitSpec, TrainConfig,
                    train_model, tune)

DATA_DIR_ENV = "SEIZLEARN_DATA_DIR"


def _resolve(path: str) -> str:
    if path and not os.path.exists(path) and not os.path.isabs(path):
        base = os.environ.get(DATA_DIR_ENV)
        if base:
            candidate = os.path.join(base, path)
            if os.path.exists(candidate):
                return candidate
    return path


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _emit_run_metadata(out_dir: str, command: str, config: dict, inputs: list) -> None:
    os.makedirs(out_dir, exist_ok=True)
    cfg_text = json.dumps(config, indent=2, sort_keys=True) + "\n"
    write_atomic(os.path.join(out_dir, "config.json"), cfg_text)
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "seizlearn_version": __version__,
    }
    write_atomic(os.path.join(out_dir, "manifest.json"),
                 json.dumps(manifest, indent=2) + "\n")


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return doc


def _effective(args: argparse.Namespace, file_config: dict, keys: list) -> dict:
    """flags > config file > defaults, for the listed option keys."""
    out = {}
    for key in keys:
        flag_value = getattr(args, key)
        if flag_value == args.subparser.get_default(key) and key in file_config:
            out[key] = file_config[key]
        else:
            out[key] = flag_value
    return out


def write_trace(path: str, result) -> None:
    lines = ["sample,z,p,label,retrained,skipped"]
    for t in range(len(result)):
        lines.append(f"{t},{float(result.z[t])!r},{float(result.p[t])!r},"
                     f"{int(result.label[t])},{int(result.retrained[t])},"
                     f"{int(result.skipped[t])}")
    write_atomic(path, "\n".join(lines) + "\n")


def read_trace(path: str) -> dict:
    cols = {"sample": [], "z": [], "p": [], "label": [], "retrained": [], "skipped": []}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        if header != list(cols):
            raise ValueError(f"{path}: not a prediction trace (header {header})")
        for line in f:
            parts = line.strip().split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}: ragged trace row")
            for key, val in zip(cols, parts):
                cols[key].append(float(val))
    return {k: np.asarray(v) for k, v in cols.items()}


def _cmd_synth(args, parser) -> int:
    file_cfg = _load_config_file(args.config)
    keys = ["seed", "duration", "fs", "channels", "rate", "seizure_freq",
            "seizure_amp", "background_amp", "drift"]
    eff = _effective(args, file_cfg, keys)
    cfg = SynthConfig(duration_s=eff["duration"], fs=eff["fs"], channels=eff["channels"],
                      seizure_rate_per_hour=eff["rate"], seizure_freq_hz=eff["seizure_freq"],
                      seizure_amp=eff["seizure_amp"], background_amp=eff["background_amp"],
                      drift=eff["drift"], seed=eff["seed"])
    record = synth_generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "record.csv"), record)
    write_annotations(os.path.join(args.out, "annotations.csv"), record.annotations)
    _emit_run_metadata(args.out, "synth", eff, [])
    print(f"wrote {record.duration_s:.0f}s x {record.n_channels}ch @ {record.fs:g}Hz, "
          f"{len(record.annotations)} events -> {args.out}")
    return 0


def _cmd_train(args, parser) -> int:
    file_cfg = _load_config_file(args.config)
    keys = ["l1_lambda", "max_iters", "tol", "balance", "bias", "seed"]
    eff = _effective(args, file_cfg, keys)
    args.record = _resolve(args.record)
    args.annotations = _resolve(args.annotations)
    record = _read_record(args.record, args.annotations)
    config = TrainConfig(l1_lambda=eff["l1_lambda"], max_iters=eff["max_iters"],
                         tol=eff["tol"], balance=eff["balance"],
                         use_bias=eff["bias"], seed=eff["seed"])
    model, _segments = train_model(record, SplitSpec(), config)
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "model.json"))
    inputs = [args.record] + ([args.annotations] if args.annotations else [])
    _emit_run_metadata(args.out, "train", eff, inputs)
    nz = int(np.count_nonzero(model.weights))
    print(f"trained model: {nz}/{model.dim} feature weights survive L1 selection "
          f"-> {os.path.join(args.out, 'model.json')}")
    return 0


def _cmd_tune(args, parser) -> int:
    file_cfg = _load_config_file(args.config)
    keys = ["ws_min", "ws_max", "ct", "update_mode"]
    eff = _effective(args, file_cfg, keys)
    args.model = _resolve(args.model)
    args.record = _resolve(args.record)
    args.annotations = _resolve(args.annotations)
    model = load_model(args.model)
    record = _read_record(args.record, args.annotations)
    prov = model.provenance
    if "train_end_s" not in prov or "val_end_s" not in prov:
        raise ValueError("model lacks split provenance; re-train it before tuning")
    i1 = int(round(prov["train_end_s"] * record.fs))
    i2 = int(round(prov["val_end_s"] * record.fs))
    val = record.slice_samples(i1, i2)
    ws_grid = range(eff["ws_min"], eff["ws_max"] + 1)
    ct_grid = [float(c) for c in eff["ct"].split(",")] if isinstance(eff["ct"], str) else eff["ct"]
    best, rows = tune(model, val, ws_grid=ws_grid, ct_grid=ct_grid,
                      update_mode=eff["update_mode"])
    model.hyperparams = best
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "model.json"))
    lines = ["ws,ct,sensitivity,specificity,far_per_day"]
    lines += [f"{r.ws},{r.ct!r},{r.sensitivity!r},{r.specificity!r},{r.far_per_day!r}"
              for r in rows]
    write_atomic(os.path.join(args.out, "tuning_report.csv"), "\n".join(lines) + "\n")
    _emit_run_metadata(args.out, "tune", eff, [args.model, args.record, args.annotations])
    print(f"best hyperparameters: CT={best.ct:g} WS={best.ws} -> {args.out}")
    return 0


def _cmd_run(args, parser) -> int:
    file_cfg = _load_config_file(args.config)
    keys = ["mode", "online", "update_mode", "hw_faithful", "ct", "ws"]
    eff = _effective(args, file_cfg, keys)
    args.model = _resolve(args.model)
    args.record = _resolve(args.record)
    model = load_model(args.model)
    model.mode = eff["mode"]
    record = _read_record(args.record, None)
    hp = None
    if eff["ct"] is not None or eff["ws"] is not None:
        base = model.hyperparams or Hyperparams()
        hp = Hyperparams(ct=eff["ct"] if eff["ct"] is not None else base.ct,
                         ws=eff["ws"] if eff["ws"] is not None else base.ws,
                         eta_shift=base.eta_shift)
    features = compute_features(model, record)
    result = run_record(model, record, online=eff["online"] == "on", hp=hp,
                        update_mode=eff["update_mode"], hw_faithful=eff["hw_faithful"],
                        features=features)
    os.makedirs(args.out, exist_ok=True)
    write_trace(os.path.join(args.out, "trace.csv"), result)
    if args.dump_features:
        write_feature_trace(os.path.join(args.out, "features.csv"), features,
                            model.channels, fixed=model.mode == "fixed")
    if args.save_model:
        updated = model.clone()
        updated.weights = result.weights
        updated.bias = result.bias
        updated.weights_raw = result.weights_raw
        updated.bias_raw = result.bias_raw
        save_model(updated, os.path.join(args.out, "model_updated.json"))
    _emit_run_metadata(args.out, "run", eff, [args.model, args.record])
    print(f"classified {len(result)} samples ({result.retrain_count} retrains, "
          f"{result.elapsed_s:.2f}s) -> {args.out}")
    return 0


def _cmd_eval(args, parser) -> int:
    args.annotations = _resolve(args.annotations)
    args.traces = [_resolve(p) for p in args.traces]
    annotations = read_annotations(args.annotations)
    runs = {}
    for path in args.traces:
        name = os.path.splitext(os.path.basename(path))[0]
        if name in runs:
            name = f"{name}_{len(runs)}"
        runs[name] = read_trace(path)["label"].astype(np.uint8)
    warmup = window_length(args.fs) if args.skip_warmup else 0
    rows = compare(runs, args.fs, annotations, EvalConfig(
        detection_tolerance_s=args.tolerance, fa_merge_s=args.fa_merge),
        warmup_samples=warmup)
    os.makedirs(args.out, exist_ok=True)
    table = ["run,sensitivity,specificity,far_per_day,median_latency_s,"
             "delta_sensitivity,delta_specificity"]
    for row in rows:
        table.append(f"{row['run']},{row['sensitivity']!r},{row['specificity']!r},"
                     f"{row['far_per_day']!r},{row['median_latency_s']!r},"
                     f"{row['delta_sensitivity']!r},{row['delta_specificity']!r}")
        curve = ["time_s,cumulative_sensitivity"]
        curve += [f"{t!r},{v!r}" for t, v in row["report"].cumulative_sensitivity]
        write_atomic(os.path.join(args.out, f"cumulative_{row['run']}.csv"),
                     "\n".join(curve) + "\n")
        print(f"{row['run']}: {row['report'].summary()}")
    write_atomic(os.path.join(args.out, "comparison.csv"), "\n".join(table) + "\n")
    _emit_run_metadata(args.out, "eval",
                       {"fs": args.fs, "tolerance": args.tolerance,
                        "fa_merge": args.fa_merge, "skip_warmup": args.skip_warmup},
                       [args.annotations] + list(args.traces))
    return 0


def _cmd_verify_filters(args, parser) -> int:
    if args.model:
        model = load_model(_resolve(args.model))
        designs, fs = model.designs, model.fs
    else:
        designs, fs = default_filter_bank(args.fs), args.fs
    report = verify_filter_bank(designs, fs)
    print(report.summary())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        doc = {band: {"passed": b.passed, "ripple_db": b.passband_ripple_db,
                      "stopband_max_db": b.stopband_max_db,
                      "stopband_edges": list(b.stopband_edges),
                      "quantized_stable": b.quantized_stable}
               for band, b in report.bands.items()}
        write_atomic(os.path.join(args.out, "filter_report.json"),
                     json.dumps(doc, indent=2) + "\n")
    return 0 if report.passed else 1


def _read_record(record_path: str, annotations_path: Optional[str]) -> EEGRecord:
    path = _resolve(record_path)
    if path.lower().endswith(".edf"):
        from .data import read_edf
        record = read_edf(path)
    else:
        record = read_csv(path)
    if annotations_path:
        anns = read_annotations(_resolve(annotations_path))
        record = EEGRecord(fs=record.fs, data=record.data,
                           channel_names=record.channel_names, annotations=anns)
    return record


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seizlearn",
                                     description="streaming seizure detection with "
                                                 "unsupervised online learning")
    parser.add_argument("--version", action="version", version=f"seizlearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic drifting record")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=3600.0)
    p.add_argument("--fs", type=float, default=256.0)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--rate", type=float, default=12.0, help="seizure events per hour")
    p.add_argument("--seizure-freq", dest="seizure_freq", type=float, default=20.0)
    p.add_argument("--seizure-amp", dest="seizure_amp", type=float, default=6.0)
    p.add_argument("--background-amp", dest="background_amp", type=float, default=1.0)
    p.add_argument("--no-drift", dest="drift", action="store_false", default=True)
    p.set_defaults(func=_cmd_synth, subparser=p)

    p = sub.add_parser("train", help="offline training on the causal train split")
    p.add_argument("--record", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--l1-lambda", dest="l1_lambda", type=float, default=0.01)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-balance", dest="balance", action="store_false", default=True)
    p.add_argument("--no-bias", dest="bias", action="store_false", default=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train, subparser=p)

    p = sub.add_parser("tune", help="grid-search WS and CT on the validation split")
    p.add_argument("--model", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--ws-min", dest="ws_min", type=int, default=DEFAULT_WS_GRID[0])
    p.add_argument("--ws-max", dest="ws_max", type=int, default=DEFAULT_WS_GRID[-1])
    p.add_argument("--ct", default=",".join(str(c) for c in DEFAULT_CT_GRID))
    p.add_argument("--update-mode", dest="update_mode", choices=("single", "window"),
                   default="single")
    p.set_defaults(func=_cmd_tune, subparser=p)

    p = sub.add_parser("run", help="classify a record, optionally learning online")
    p.add_argument("--model", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--mode", choices=("float", "fixed"), default="float")
    p.add_argument("--online", choices=("on", "off"), default="off")
    p.add_argument("--update-mode", dest="update_mode", choices=("single", "window"),
                   default="single")
    p.add_argument("--no-hw-faithful", dest="hw_faithful", action="store_false",
                   default=True)
    p.add_argument("--ct", type=float, default=None)
    p.add_argument("--ws", type=int, default=None)
    p.add_argument("--dump-features", dest="dump_features", action="store_true")
    p.add_argument("--save-model", dest="save_model", action="store_true")
    p.set_defaults(func=_cmd_run, subparser=p)

    p = sub.add_parser("eval", help="score prediction traces against annotations")
    p.add_argument("traces", nargs="+", help="trace CSVs; the first is the baseline")
    p.add_argument("--annotations", required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tolerance", type=float, default=30.0)
    p.add_argument("--fa-merge", dest="fa_merge", type=float, default=30.0)
    p.add_argument("--skip-warmup", dest="skip_warmup", action="store_true")
    p.set_defaults(func=_cmd_eval, subparser=p)

    p = sub.add_parser("verify-filters", help="check a filter bank against the "
                                              ">=20 dB stopband rule")
    p.add_argument("--fs", type=float, default=1000.0)
    p.add_argument("--model")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify_filters, subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args, parser)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
