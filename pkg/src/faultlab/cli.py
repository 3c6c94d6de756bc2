"""Command-line front end.

Subcommands: synth, inject, train, detect, evaluate, sweep. Every command
reads an optional JSON config (--config) with flag overrides for seed,
modality, and output directory; outputs are deterministic for a fixed
config+seed, and every output file carries the resolved config either
embedded (JSON outputs) or as a `<file>.meta.json` sidecar (CSV outputs).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .detect import (LlseModel, NoiseModel, ShortParams, fit_llse_model,
                     llse_detect, load_model, noise_detect, noise_train,
                     save_model, short_detect)
from .detect import DetectionResult
from .errors import ConfigError, DataError, FaultLabError, NumericError
from .inject import InjectionPlan, inject_noise, inject_short, merge_labels, \
    save_labels, load_labels
from .io import (ingest_csv, read_detection_csv, read_events_csv,
                 write_detection_csv, write_events_csv, write_series_csv)
from .metrics import assemble_report, save_report
from .pipeline import (build_synth_config, run_sweep_points, sweep_rows,
                       SWEEP_HEADER)
from .series import GroundTruthLabels, Modality, Series

CONFIG_VERSION = 1


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    if doc.get("version", CONFIG_VERSION) != CONFIG_VERSION:
        raise ConfigError(f"{p}: unsupported config version {doc.get('version')!r}")
    return doc


def resolve_config(args) -> dict:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "modality", None):
        cfg["modality"] = args.modality
    return cfg


def _seed(cfg: dict) -> int:
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return seed


def _modality(cfg: dict, default: str | None = None) -> Modality:
    raw = cfg.get("modality", default)
    if raw is None:
        raise ConfigError("modality is required (--modality or config key)")
    try:
        return Modality(raw)
    except ValueError:
        raise ConfigError(f"unknown modality {raw!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(command: str, cfg: dict) -> dict:
    return {"command": command, "config": cfg}


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_meta(path: Path, command: str, cfg: dict) -> Path:
    meta = path.with_name(path.name + ".meta.json")
    _write_json(meta, _echo(command, cfg))
    return meta


def _say(path: Path) -> None:
    print(f"wrote {path}")


def _pick_series(path: str, node: str | None, modality: Modality | None,
                 allow_split: bool = False) -> list[Series]:
    """Series pieces for one (node, modality) out of a sensor CSV."""
    report = ingest_csv(path)
    nodes = sorted({s.node_id for s in report.series})
    if node is None:
        if len(nodes) != 1:
            raise ConfigError(f"{path} holds nodes {nodes}; pick one with --node")
        node = nodes[0]
    mods = sorted({s.modality for s in report.series if s.node_id == node})
    if modality is None:
        if len(mods) != 1:
            raise ConfigError(f"{path} node {node!r} holds several modalities; "
                              f"pick one with --modality")
        modality = mods[0]
    pieces = report.find(node, modality)
    if not pieces:
        raise DataError(f"{path}: no series for node {node!r} "
                        f"modality {modality.value!r}")
    if len(pieces) > 1 and not allow_split:
        raise DataError(f"{path}: series for node {node!r} is split by long gaps")
    return pieces


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = resolve_config(args)
    seed = _seed(cfg)
    synth_cfg = dict(cfg.get("synth", {}))
    series, events, schedule, _ = build_synth_config(synth_cfg, seed)
    if cfg.get("modality"):
        keep = Modality(cfg["modality"])
        series = [s for s in series if s.modality == keep]
    out = _out_dir(args)

    series_path = out / "series.csv"
    write_series_csv(series_path, series)
    _say(series_path)
    _say(_write_meta(series_path, "synth", cfg))

    events_path = out / "events.csv"
    write_events_csv(events_path, events)
    _say(events_path)
    _say(_write_meta(events_path, "synth", cfg))

    sched_path = out / "schedule.json"
    _write_json(sched_path, _echo("synth", cfg) | {
        "schedule": [{"start": ev.window.start, "end": ev.window.end,
                      "rain_mm": ev.rain_mm} for ev in schedule]})
    _say(sched_path)
    return 0


def cmd_inject(args) -> int:
    cfg = resolve_config(args)
    seed = _seed(cfg)
    inject_cfg = cfg.get("inject", {})
    kind = args.kind or inject_cfg.get("kind")
    if kind not in ("short", "noise", "both"):
        raise ConfigError("inject needs kind short, noise, or both "
                          "(--kind or config inject.kind)")
    modality = Modality(cfg["modality"]) if cfg.get("modality") else None
    s = _pick_series(args.infile, args.node, modality)[0]

    plan_keys = {"short_intensity", "short_fraction", "noise_multiplier",
                 "noise_burst_lengths", "noise_total_fraction"}
    kwargs = {k: v for k, v in inject_cfg.items() if k in plan_keys}
    if "noise_burst_lengths" in kwargs:
        kwargs["noise_burst_lengths"] = tuple(int(x) for x in kwargs["noise_burst_lengths"])
    plan = InjectionPlan(seed=seed, **kwargs)

    labels = GroundTruthLabels()
    if kind in ("noise", "both"):
        base_sigma = inject_cfg.get("base_sigma")
        if base_sigma is None:
            raise ConfigError("noise injection needs config inject.base_sigma")
        s, noise_labels = inject_noise(s, plan, float(base_sigma))
        labels = merge_labels(labels, noise_labels)
    if kind in ("short", "both"):
        s, short_labels = inject_short(s, plan)
        labels = merge_labels(labels, short_labels)

    out = _out_dir(args)
    faulted_path = out / "faulted.csv"
    write_series_csv(faulted_path, [s])
    _say(faulted_path)
    _say(_write_meta(faulted_path, "inject", cfg))
    labels_path = out / "faulted.labels.json"
    save_labels(labels_path, labels, plan)
    _say(labels_path)
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    modality = Modality(cfg["modality"]) if cfg.get("modality") else None
    out = _out_dir(args)
    model_path = out / "model.json"

    if args.detector == "short":
        delta = args.delta if args.delta is not None else cfg.get("delta")
        if delta is None:
            raise ConfigError("short detector needs --delta or config key 'delta'")
        model = ShortParams(float(delta))
    elif args.detector == "noise":
        s = _pick_series(args.infile, args.node, modality)[0]
        window_len = int(cfg.get("noise_window_len", 18))
        model = noise_train(s, window_len)
    elif args.detector == "llse":
        if not args.target:
            raise ConfigError("llse training needs --target <node id>")
        report = ingest_csv(args.infile)
        if modality is None:
            mods = sorted({s.modality for s in report.series})
            if len(mods) != 1:
                raise ConfigError(f"{args.infile} holds several modalities; "
                                  f"pick one with --modality")
            modality = mods[0]
        target_pieces = report.find(args.target, modality)
        if len(target_pieces) != 1:
            raise DataError(f"{args.infile}: need one unbroken series for "
                            f"target {args.target!r}")
        neighbor_ids = sorted({s.node_id for s in report.series
                               if s.modality == modality} - {args.target})
        neighbors = []
        for node in neighbor_ids:
            pieces = report.find(node, modality)
            if len(pieces) != 1:
                raise DataError(f"{args.infile}: neighbor {node!r} is split by long gaps")
            neighbors.append(pieces[0])
        llse_cfg = cfg.get("llse", {})
        model = fit_llse_model(target_pieces[0], neighbors,
                               percentile_p=float(llse_cfg.get("percentile_p", 95.0)),
                               vote_q=int(llse_cfg.get("vote_q", 2)),
                               signed=bool(llse_cfg.get("signed", False)))
    else:
        raise ConfigError(f"unknown detector {args.detector!r}")

    save_model(model_path, model, config_echo=_echo("train", cfg))
    _say(model_path)
    return 0


def _detect_with(args, cfg: dict, s: Series, neighbors: dict[str, Series] | None):
    if args.detector == "short":
        delta = args.delta if args.delta is not None else cfg.get("delta")
        if delta is None and args.model:
            model = load_model(args.model)
            if not isinstance(model, ShortParams):
                raise ConfigError(f"{args.model} is not a short model")
            delta = model.delta
        if delta is None:
            raise ConfigError("short detection needs --delta, config 'delta', or --model")
        return short_detect(s, ShortParams(float(delta)))
    if args.detector == "noise":
        if not args.model:
            raise ConfigError("noise detection needs --model")
        model = load_model(args.model)
        if not isinstance(model, NoiseModel):
            raise ConfigError(f"{args.model} is not a noise model")
        multiplier = args.multiplier if args.multiplier is not None \
            else cfg.get("multiplier")
        if multiplier is None:
            raise ConfigError("noise detection needs --multiplier or config 'multiplier'")
        return noise_detect(s, model, float(multiplier))
    if args.detector == "llse":
        if not args.model:
            raise ConfigError("llse detection needs --model")
        model = load_model(args.model)
        if not isinstance(model, LlseModel):
            raise ConfigError(f"{args.model} is not an llse model")
        return llse_detect(s, neighbors or {}, model)
    raise ConfigError(f"unknown detector {args.detector!r}")


def cmd_detect(args) -> int:
    cfg = resolve_config(args)
    modality = Modality(cfg["modality"]) if cfg.get("modality") else None

    if args.detector == "llse":
        model = load_model(args.model) if args.model else None
        if not isinstance(model, LlseModel):
            raise ConfigError("llse detection needs --model with an llse model")
        report = ingest_csv(args.infile)
        if modality is None:
            mods = sorted({s.modality for s in report.series})
            if len(mods) != 1:
                raise ConfigError(f"{args.infile} holds several modalities; "
                                  f"pick one with --modality")
            modality = mods[0]
        target_pieces = report.find(model.target, modality)
        if len(target_pieces) != 1:
            raise DataError(f"{args.infile}: need one unbroken series for "
                            f"target {model.target!r}")
        s = target_pieces[0]
        neighbors = {}
        for fit in model.neighbors:
            pieces = report.find(fit.node_id, modality)
            if len(pieces) != 1:
                raise DataError(f"{args.infile}: neighbor {fit.node_id!r} is "
                                f"split by long gaps")
            neighbors[fit.node_id] = pieces[0]
        result = _detect_with(args, cfg, s, neighbors)
    else:
        s = _pick_series(args.infile, args.node, modality)[0]
        result = _detect_with(args, cfg, s, None)

    out = _out_dir(args)
    flags_path = out / "flags.csv"
    write_detection_csv(flags_path, result.to_flags())
    _say(flags_path)
    _say(_write_meta(flags_path, "detect", cfg))
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    modality = Modality(cfg["modality"]) if cfg.get("modality") else None
    s = _pick_series(args.infile, args.node, modality)[0]
    events = read_events_csv(args.events)
    by_source = read_detection_csv(args.flags)
    if len(by_source) != 1:
        raise DataError(f"{args.flags}: expected flags from exactly one detector, "
                        f"found {sorted(by_source)}")
    source, indices = next(iter(by_source.items()))
    result = DetectionResult(source, tuple(int(i) for i in indices))

    truth = load_labels(args.labels) if args.labels else None
    report = assemble_report(s, result, events, truth=truth,
                             kind=args.fault_kind,
                             parameters=_echo("evaluate", cfg))
    out = _out_dir(args)
    report_path = out / "report.json"
    save_report(report_path, report)
    _say(report_path)
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    seed = _seed(cfg)
    modality = _modality(cfg, default=Modality.BOX_TEMP.value)
    out = _out_dir(args)
    written: list[Path] = []
    try:
        result = run_sweep_points(cfg, seed, modality)
        sweep_path = out / "sweep.csv"
        with sweep_path.open("w", newline="") as fh:
            fh.write(",".join(SWEEP_HEADER) + "\n")
            for row in sweep_rows(result):
                fh.write(",".join(row) + "\n")
        written.append(sweep_path)
        written.append(_write_meta(sweep_path, "sweep", cfg))
        for i, pt in enumerate(result.points):
            report_path = out / f"report_{i:03d}.json"
            save_report(report_path, pt.report)
            written.append(report_path)
    except FaultLabError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    for path in written:
        _say(path)
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultlab",
        description="Sensor-fault detection, injection, and event-misclassification analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--modality", choices=[m.value for m in Modality],
                       help="sensor channel")

    p = sub.add_parser("synth", help="generate synthetic deployment data")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inject", help="inject faults into a series")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="input series CSV")
    p.add_argument("--node", help="node id (when the file holds several)")
    p.add_argument("--kind", choices=["short", "noise", "both"])
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("train", help="fit a detector model")
    common(p)
    p.add_argument("--in", dest="infile", help="training series CSV")
    p.add_argument("--detector", required=True, choices=["short", "noise", "llse"])
    p.add_argument("--node", help="node id (noise training)")
    p.add_argument("--target", help="target node id (llse training)")
    p.add_argument("--delta", type=float, help="jump threshold (short)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a detector over a series")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="input series CSV")
    p.add_argument("--model", help="model JSON from `train`")
    p.add_argument("--detector", required=True, choices=["short", "noise", "llse"])
    p.add_argument("--node", help="node id (when the file holds several)")
    p.add_argument("--delta", type=float, help="jump threshold (short)")
    p.add_argument("--multiplier", type=float, help="allowed-band multiplier (noise)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score detection flags against events")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="series CSV the flags refer to")
    p.add_argument("--flags", required=True, help="detection CSV from `detect`")
    p.add_argument("--events", required=True, help="event windows CSV")
    p.add_argument("--labels", help="injected-fault labels JSON")
    p.add_argument("--fault-kind", choices=["short", "noise"],
                   help="which labeled kind the FN ratio covers")
    p.add_argument("--node", help="node id (when the file holds several)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a detector over a parameter grid")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train" and args.detector != "short" and not args.infile:
            raise ConfigError("--in is required for noise/llse training")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
