"""Event-based and sample-based detection metrics.

An annotated event counts as detected when at least one positive label
falls inside [onset, offset + detection_tolerance_s]; its latency is the
time from onset to the first such positive (clamped at zero).  Specificity
is sample-based over samples outside the annotated intervals themselves.
False alarms are clusters of positive samples (gaps up to fa_merge_s
merge) lying wholly outside every event window, normalized per day.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class EvalConfig:
    detection_tolerance_s: float = 30.0
    fa_merge_s: float = 30.0

    def __post_init__(self):
        if self.detection_tolerance_s <= 0 or self.fa_merge_s <= 0:
            raise ValueError("evaluation windows must be positive")


@dataclass
class MetricsReport:
    sensitivity_event: float
    specificity_sample: float
    false_alarms_per_day: float
    median_latency_s: float
    n_events: int
    n_detected: int
    duration_s: float
    cumulative_sensitivity: List[Tuple[float, float]] = field(default_factory=list)
    latencies_s: List[float] = field(default_factory=list)

    def summary(self) -> str:
        lat = f"{self.median_latency_s:.2f}" if self.n_detected else "n/a"
        return (f"sensitivity {self.sensitivity_event:.1f}% "
                f"({self.n_detected}/{self.n_events} events), "
                f"specificity {self.specificity_sample:.2f}%, "
                f"{self.false_alarms_per_day:.2f} FA/day, "
                f"median latency {lat} s")


def _positive_runs(labels: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal runs of positive labels as [start, end) index pairs."""
    pos = np.asarray(labels).astype(bool)
    if not pos.any():
        return []
    edges = np.diff(pos.astype(np.int8))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    ends = list(np.nonzero(edges == -1)[0] + 1)
    if pos[0]:
        starts.insert(0, 0)
    if pos[-1]:
        ends.append(len(pos))
    return list(zip(starts, ends))


def merge_clusters(runs: Sequence[Tuple[int, int]], fs: float,
                   merge_s: float) -> List[Tuple[int, int]]:
    """Merge runs separated by gaps of at most merge_s seconds (idempotent)."""
    if not runs:
        return []
    gap = merge_s * fs
    merged = [list(runs[0])]
    for start, end in runs[1:]:
        if start - merged[-1][1] <= gap:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def evaluate(labels: np.ndarray, fs: float,
             annotations: Sequence[Tuple[float, float]],
             config: EvalConfig = EvalConfig(),
             warmup_samples: int = 0) -> MetricsReport:
    """Score one prediction stream against the annotations.

    ``labels`` must align 1:1 with the record's samples; the first
    ``warmup_samples`` are excluded from sample counting (feature windows
    start zero-filled).
    """
    labels = np.asarray(labels).astype(np.uint8)
    t_len = len(labels)
    duration = t_len / fs
    for i, (onset, offset) in enumerate(annotations):
        if offset > duration + 1e-6:
            raise ValueError(f"annotation {i} ({onset}-{offset}s) extends past the "
                             f"{duration:.1f}s prediction stream; misaligned lengths?")

    # event detection + latency
    detected_flags: List[bool] = []
    latencies: List[float] = []
    cumulative: List[Tuple[float, float]] = []
    hits = 0
    for k, (onset, offset) in enumerate(annotations):
        i0 = max(int(np.floor(onset * fs)), 0)
        i1 = min(int(np.ceil((offset + config.detection_tolerance_s) * fs)), t_len)
        window = labels[i0:i1]
        pos = np.nonzero(window)[0]
        hit = len(pos) > 0
        detected_flags.append(hit)
        if hit:
            hits += 1
            latencies.append(max((i0 + pos[0]) / fs - onset, 0.0))
        cumulative.append((offset, 100.0 * hits / (k + 1)))

    # sample specificity over non-seizure samples
    seiz_mask = np.zeros(t_len, dtype=bool)
    for onset, offset in annotations:
        i0 = max(int(np.floor(onset * fs)), 0)
        i1 = min(int(np.ceil(offset * fs)), t_len)
        seiz_mask[i0:i1] = True
    counted = np.ones(t_len, dtype=bool)
    counted[:min(warmup_samples, t_len)] = False
    nonseiz = counted & ~seiz_mask
    n_nonseiz = int(np.count_nonzero(nonseiz))
    specificity = (100.0 * np.count_nonzero(labels[nonseiz] == 0) / n_nonseiz
                   if n_nonseiz else 100.0)

    # false alarms: merged positive clusters wholly outside event windows
    runs = merge_clusters(_positive_runs(labels), fs, config.fa_merge_s)
    fa = 0
    for start, end in runs:
        t0, t1 = start / fs, end / fs
        overlaps = any(t1 > onset and t0 < offset + config.detection_tolerance_s
                       for onset, offset in annotations)
        if not overlaps:
            fa += 1
    fa_per_day = fa / (duration / 86400.0) if duration > 0 else 0.0

    n_events = len(annotations)
    return MetricsReport(
        sensitivity_event=100.0 * hits / n_events if n_events else 100.0,
        specificity_sample=specificity,
        false_alarms_per_day=fa_per_day,
        median_latency_s=float(np.median(latencies)) if latencies else float("nan"),
        n_events=n_events,
        n_detected=hits,
        duration_s=duration,
        cumulative_sensitivity=cumulative,
        latencies_s=latencies,
    )


def cumulative_sensitivity(labels: np.ndarray, fs: float,
                           annotations: Sequence[Tuple[float, float]],
                           config: EvalConfig = EvalConfig()) -> List[Tuple[float, float]]:
    """Sensitivity over all events seen so far, sampled at each event offset."""
    return evaluate(labels, fs, annotations, config).cumulative_sensitivity


def compare(runs: Dict[str, np.ndarray], fs: float,
            annotations: Sequence[Tuple[float, float]],
            config: EvalConfig = EvalConfig(),
            warmup_samples: int = 0) -> List[dict]:
    """Evaluate several prediction streams; deltas are against the first run.

    All streams must share the sample grid.
    """
    if not runs:
        raise ValueError("no runs to compare")
    lengths = {len(v) for v in runs.values()}
    if len(lengths) != 1:
        raise ValueError(f"prediction streams have mismatched lengths {sorted(lengths)}")
    rows = []
    baseline: Optional[MetricsReport] = None
    for name, labels in runs.items():
        report = evaluate(labels, fs, annotations, config, warmup_samples=warmup_samples)
        if baseline is None:
            baseline = report
        rows.append({
            "run": name,
            "sensitivity": report.sensitivity_event,
            "specificity": report.specificity_sample,
            "far_per_day": report.false_alarms_per_day,
            "median_latency_s": report.median_latency_s,
            "delta_sensitivity": report.sensitivity_event - baseline.sensitivity_event,
            "delta_specificity": report.specificity_sample - baseline.specificity_sample,
            "report": report,
        })
    return rows
