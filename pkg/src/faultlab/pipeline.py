"""Config-driven experiment assembly behind the CLI.

A pipeline run mirrors the study design: build (or load) a sensor record,
pair-smooth it, split a training stretch from the test stretch, inject
faults into the test data, train the detector on the clean training data,
and score a parameter grid against the event windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .detect import NoiseModel, ShortParams, noise_detect, noise_train, short_detect
from .errors import ConfigError, DataError
from .events import FIRST_HALF_HOUR_S  # noqa: F401  (re-exported convenience)
from .inject import InjectionPlan, inject_noise, inject_short, merge_labels
from .io import ingest_csv, read_events_csv
from .metrics import EvalReport, assemble_report
from .preprocess import smooth_pairs
from .series import EventWindow, GroundTruthLabels, Modality, Series
from .synth import (BoxTempProfile, DeploymentSpec, ScheduledEvent,
                    SoilMoistureProfile, gen_deployment, make_event_schedule)

__all__ = [
    "SweepPoint",
    "SweepResult",
    "build_synth_config",
    "materialize",
    "run_sweep_points",
]

SWEEP_HEADER = ("param", "mu", "mu_first_half_hour", "fn_ratio")


@dataclass(frozen=True)
class SweepPoint:
    param: float
    report: EvalReport


@dataclass
class SweepResult:
    detector: str
    points: list[SweepPoint]


def _mk_profile(cls, cfg: dict | None, what: str):
    try:
        return cls(**(cfg or {}))
    except TypeError:
        raise ConfigError(f"unknown keys in {what} profile: {sorted(cfg)}") from None


def profiles_from_config(synth_cfg: dict) -> tuple[BoxTempProfile, SoilMoistureProfile]:
    box = _mk_profile(BoxTempProfile, synth_cfg.get("box"), "box")
    soil = _mk_profile(SoilMoistureProfile, synth_cfg.get("soil"), "soil")
    return box, soil


def nodes_from_config(synth_cfg: dict) -> tuple[tuple[str, ...], tuple[float, ...], tuple[float, ...]]:
    nodes = synth_cfg.get("nodes") or [{"id": "node1"}]
    try:
        ids = tuple(str(nd["id"]) for nd in nodes)
        scales = tuple(float(nd.get("response_scale", 1.0)) for nd in nodes)
        lags = tuple(float(nd.get("lag_s", 0.0)) for nd in nodes)
    except (KeyError, TypeError, ValueError):
        raise ConfigError("each synth node needs an 'id' and optional "
                          "'response_scale'/'lag_s'") from None
    return ids, scales, lags


def schedule_from_config(days: int, n_events: int, seed,
                         sched_cfg: dict | None,
                         span_start_s: float = 0.0) -> tuple[ScheduledEvent, ...]:
    cfg = dict(sched_cfg or {})
    allowed = {"min_duration_s", "max_duration_s", "min_rain_mm", "max_rain_mm"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
    return make_event_schedule(days, n_events, seed, span_start_s=span_start_s, **cfg)


def build_synth_config(synth_cfg: dict, seed: int):
    """Build deployment series and event windows from a synth config block.

    Returns (series list, test event windows, full schedule, train_days).
    Events counted by `train_events` land in the training stretch, the
    `n_events` test events after it; only the latter are returned as the
    evaluation windows.
    """
    train_days = int(synth_cfg.get("train_days", 0))
    test_days = int(synth_cfg.get("test_days", synth_cfg.get("days", 90)))
    interval_s = float(synth_cfg.get("interval_s", 600.0))
    n_events = int(synth_cfg.get("n_events", 21))
    train_events = int(synth_cfg.get("train_events", 0))
    if train_days < 0 or test_days < 1:
        raise ConfigError("synth needs train_days >= 0 and test_days >= 1")

    sched_cfg = synth_cfg.get("schedule")
    train_sched = schedule_from_config(train_days, train_events, [seed, 2], sched_cfg) \
        if train_events else ()
    test_sched = schedule_from_config(test_days, n_events, [seed, 3], sched_cfg,
                                      span_start_s=train_days * 86400.0)
    schedule = tuple(train_sched) + tuple(test_sched)

    ids, scales, lags = nodes_from_config(synth_cfg)
    box, soil = profiles_from_config(synth_cfg)
    spec = DeploymentSpec(node_ids=ids, response_scales=scales, lags_s=lags,
                          schedule=schedule, seed=seed,
                          days=train_days + test_days, interval_s=interval_s)
    series, _ = gen_deployment(spec, box, soil)
    test_windows = [ev.window for ev in test_sched]
    return series, test_windows, schedule, train_days


def _single_series(report_or_list, node_id: str, modality: Modality, origin: str) -> Series:
    if isinstance(report_or_list, list):
        pieces = [s for s in report_or_list
                  if s.node_id == node_id and s.modality == modality]
    else:
        pieces = report_or_list.find(node_id, modality)
    if not pieces:
        raise DataError(f"{origin}: no series for node {node_id!r} "
                        f"modality {modality.value!r}")
    if len(pieces) > 1:
        raise DataError(f"{origin}: series for node {node_id!r} is split by "
                        f"long gaps; repair it before running a sweep")
    return pieces[0]


def split_series(s: Series, split_time: float) -> tuple[Series, Series]:
    """Cut a series at an absolute time into (before, from-then-on)."""
    k = int(round((split_time - s.start_time) / s.sample_interval))
    if not 0 < k < len(s):
        raise DataError(f"split time {split_time} falls outside the series")
    return s.subseries(0, k), s.subseries(k, len(s))


@dataclass
class MaterializedRun:
    train: Series
    test: Series
    events: list[EventWindow]
    labels: GroundTruthLabels | None
    noise_model: NoiseModel | None
    plan: InjectionPlan | None


def _inject_from_config(test: Series, inject_cfg: dict, seed: int,
                        noise_model: NoiseModel | None):
    kind = inject_cfg.get("kind")
    if kind not in ("short", "noise", "both"):
        raise ConfigError(f"inject.kind must be short, noise, or both, got {kind!r}")
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
            if noise_model is None:
                raise ConfigError("noise injection needs inject.base_sigma or a "
                                  "trained noise model to take sigma_train from")
            base_sigma = noise_model.sigma_train
        test, noise_labels = inject_noise(test, plan, float(base_sigma))
        labels = merge_labels(labels, noise_labels)
    if kind in ("short", "both"):
        # Spikes go in second so they land on the already-noised series.
        test, short_labels = inject_short(test, plan)
        labels = merge_labels(labels, short_labels)
    return test, labels, plan


def materialize(config: dict, seed: int, modality: Modality) -> MaterializedRun:
    """Build train/test series, events, labels, and the noise model for a sweep."""
    smooth = bool(config.get("smooth", True))
    window_len = int(config.get("noise_window_len", 18))
    detector = config.get("detector")

    if ("synth" in config) == ("data" in config):
        raise ConfigError("config needs exactly one of 'synth' or 'data'")

    labels: GroundTruthLabels | None = None
    if "synth" in config:
        synth_cfg = config["synth"]
        if int(synth_cfg.get("train_days", 0)) < 1:
            raise ConfigError("synth sweeps need train_days >= 1")
        target = synth_cfg.get("target") or nodes_from_config(synth_cfg)[0][0]
        series, events, _, train_days = build_synth_config(synth_cfg, seed)
        full = _single_series(series, target, modality, "synth")
        if smooth:
            full = smooth_pairs(full)
        train, test = split_series(full, train_days * 86400.0)
    else:
        data_cfg = config["data"]
        try:
            node = str(data_cfg.get("node_id", ""))
            train_rep = ingest_csv(data_cfg["train_csv"])
            test_rep = ingest_csv(data_cfg["test_csv"])
            events = read_events_csv(data_cfg["events_csv"])
        except KeyError as exc:
            raise ConfigError(f"data config needs {exc.args[0]!r}") from None
        if not node:
            raise ConfigError("data config needs node_id")
        train = _single_series(train_rep, node, modality, data_cfg["train_csv"])
        test = _single_series(test_rep, node, modality, data_cfg["test_csv"])
        if smooth:
            train = smooth_pairs(train)
            test = smooth_pairs(test)
        if data_cfg.get("labels_json"):
            from .inject import load_labels
            labels = load_labels(data_cfg["labels_json"])

    noise_model = noise_train(train, window_len) if detector == "noise" else None

    plan = None
    if "inject" in config:
        test, labels, plan = _inject_from_config(test, config["inject"], seed, noise_model)
    return MaterializedRun(train=train, test=test, events=events, labels=labels,
                           noise_model=noise_model, plan=plan)


def run_sweep_points(config: dict, seed: int, modality: Modality) -> SweepResult:
    """Detect and score every grid point of a sweep config."""
    detector = config.get("detector")
    if detector not in ("short", "noise"):
        raise ConfigError(f"sweep detector must be short or noise, got {detector!r}")
    grid = config.get("grid")
    if not isinstance(grid, Sequence) or isinstance(grid, (str, bytes)) or len(grid) == 0:
        raise ConfigError("sweep needs a non-empty numeric 'grid'")
    run = materialize(config, seed, modality)

    points = []
    for raw in grid:
        param = float(raw)
        if detector == "short":
            result = short_detect(run.test, ShortParams(param))
            kind = "short"
        else:
            result = noise_detect(run.test, run.noise_model, param)
            kind = "noise"
        truth = run.labels if run.labels is not None else None
        scored_kind = kind if (truth is not None) else None
        report = assemble_report(
            run.test, result, run.events, truth=truth, kind=scored_kind,
            parameters={"detector": detector, "param": param,
                        "seed": seed, "modality": modality.value})
        points.append(SweepPoint(param=param, report=report))
    return SweepResult(detector=detector, points=points)


def sweep_rows(result: SweepResult) -> list[tuple[str, str, str, str]]:
    """CSV rows (param, mu, mu_first_half_hour, fn_ratio); absent metrics empty."""
    def fmt(x):
        return "" if x is None else repr(float(x))

    rows = []
    for pt in result.points:
        rep = pt.report
        rows.append((repr(pt.param), fmt(rep.mu), fmt(rep.mu_first_half_hour),
                     fmt(rep.false_negative_ratio)))
    return rows
