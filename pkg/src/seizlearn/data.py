"""Dataset ingestion, synthetic drifting-EEG generation, model persistence.

Records hold signed 16-bit samples that the fixed-point backend consumes
directly as Q6.10 raws (the float backend divides by 1024).  Readers
validate and reject rather than repair: ragged CSV rows, non-monotone
timestamps, overlapping annotation intervals and discontinuous EDF+D files
are all hard errors.

File formats
------------
Signal CSV        header ``t,ch0,...,ch{C-1}``; ``t`` in seconds with
                  constant spacing, channel values integer raws.
Annotations       one ``onset_s,offset_s`` pair per line, ``#`` comments
                  allowed; intervals must be sorted and non-overlapping.
EDF               continuous EDF/EDF+C with integer signals; physical
                  calibration is applied, then all channels are requantized
                  to int16 with one shared physical unit so inter-channel
                  amplitudes stay comparable.
Model file        versioned JSON; floats serialize as shortest round-trip
                  decimals, fixed-point values as raw integers, so loading
                  reproduces classification bit-exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import fixedpoint as fp
from .classifier import DetectorModel, LogisticLUT
from .dsp import BandDesign
from .features import FeatureScaling
from .online import Hyperparams

MODEL_FORMAT = "seizlearn-model"
MODEL_VERSION = 1


def write_atomic(path, text: str) -> None:
    """Write a text file via a temp-and-rename so readers never see partials."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


@dataclass
class EEGRecord:
    """A multichannel recording with seizure annotation intervals."""

    fs: float
    data: np.ndarray                      # (C, T) int16 raw samples
    channel_names: List[str] = field(default_factory=list)
    annotations: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError("record data must be a (channels, samples) array")
        if self.data.dtype != np.int16:
            if not np.all((self.data >= fp.RAW_MIN) & (self.data <= fp.RAW_MAX)):
                raise ValueError("sample values outside the signed 16-bit range")
            self.data = self.data.astype(np.int16)
        if not self.channel_names:
            self.channel_names = [f"ch{i}" for i in range(self.data.shape[0])]
        if len(self.channel_names) != self.data.shape[0]:
            raise ValueError("channel name count does not match data")
        self.annotations = [(float(a), float(b)) for a, b in self.annotations]
        self.validate()

    def validate(self) -> None:
        if self.fs <= 0:
            raise ValueError(f"invalid sampling rate {self.fs}")
        last_end = 0.0
        for i, (onset, offset) in enumerate(self.annotations):
            if offset <= onset:
                raise ValueError(f"annotation {i} has offset <= onset")
            if onset < last_end:
                raise ValueError("annotations overlap or are unsorted")
            if offset > self.duration_s + 1e-9:
                raise ValueError(f"annotation {i} extends past the record end")
            last_end = offset

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def to_float(self) -> np.ndarray:
        """Samples as real values (raw / 1024)."""
        return self.data.astype(np.float64) / fp.ONE

    def sample_labels(self) -> np.ndarray:
        """Per-sample 0/1 seizure labels from the annotation intervals."""
        labels = np.zeros(self.n_samples, dtype=np.uint8)
        for onset, offset in self.annotations:
            i0 = int(np.ceil(onset * self.fs - 1e-9))
            i1 = min(int(np.ceil(offset * self.fs - 1e-9)), self.n_samples)
            labels[i0:i1] = 1
        return labels

    def slice_samples(self, i0: int, i1: int) -> "EEGRecord":
        """Sub-record covering sample indices [i0, i1); annotations clipped/shifted."""
        i0 = max(0, i0)
        i1 = min(self.n_samples, i1)
        t0, t1 = i0 / self.fs, i1 / self.fs
        anns = []
        for onset, offset in self.annotations:
            lo = max(onset, t0)
            hi = min(offset, t1)
            if hi - lo > 1e-9:
                anns.append((lo - t0, hi - t0))
        return EEGRecord(fs=self.fs, data=self.data[:, i0:i1].copy(),
                         channel_names=list(self.channel_names), annotations=anns)


# ---------------------------------------------------------------------------
# CSV round trip

def write_csv(path, record: EEGRecord) -> None:
    lines = ["t," + ",".join(record.channel_names)]
    inv_fs = 1.0 / record.fs
    for i in range(record.n_samples):
        vals = ",".join(str(int(v)) for v in record.data[:, i])
        lines.append(f"{repr(i * inv_fs)},{vals}")
    write_atomic(path, "\n".join(lines) + "\n")


def read_csv(path) -> EEGRecord:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        cols = header.split(",")
        if len(cols) < 2 or cols[0] != "t":
            raise ValueError(f"{path}: expected header 't,ch0,...', got {header!r}")
        names = cols[1:]
        times: List[float] = []
        rows: List[List[int]] = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(cols):
                raise ValueError(f"{path}:{lineno}: ragged row ({len(parts)} fields, "
                                 f"expected {len(cols)})")
            times.append(float(parts[0]))
            try:
                row = [int(v) for v in parts[1:]]
            except ValueError:
                row = []
                for v in parts[1:]:
                    x = float(v)
                    if x != int(x):
                        raise ValueError(f"{path}:{lineno}: non-integer sample value {v}")
                    row.append(int(x))
            rows.append(row)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    t = np.asarray(times)
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValueError(f"{path}: time column is not strictly increasing")
    if np.max(np.abs(dt - dt[0])) > 1e-6 * dt[0]:
        raise ValueError(f"{path}: sample spacing is not constant")
    fs = 1.0 / dt[0]
    if abs(fs - round(fs)) < 1e-6 * fs:
        fs = float(round(fs))
    data = np.asarray(rows, dtype=np.int64).T
    return EEGRecord(fs=fs, data=data, channel_names=names)


def write_annotations(path, annotations: Sequence[Tuple[float, float]]) -> None:
    lines = [f"{repr(float(a))},{repr(float(b))}" for a, b in annotations]
    write_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


def read_annotations(path) -> List[Tuple[float, float]]:
    intervals: List[Tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'onset_s,offset_s'")
            onset, offset = float(parts[0]), float(parts[1])
            if offset <= onset:
                raise ValueError(f"{path}:{lineno}: offset must exceed onset")
            intervals.append((onset, offset))
    last_end = -np.inf
    for i, (onset, offset) in enumerate(intervals):
        if onset < last_end:
            raise ValueError(f"{path}: intervals are unsorted or overlapping (line {i + 1})")
        last_end = offset
    return intervals


# ---------------------------------------------------------------------------
# EDF (continuous, integer signals)

def read_edf(path, channels: Optional[Sequence] = None) -> EEGRecord:
    """Read a continuous EDF/EDF+C file and requantize to 16-bit raws.

    ``channels`` selects signals by label or index; the default takes every
    non-annotation signal.  All selected signals must share one sampling
    rate.  EDF+D (discontinuous) files are rejected.
    """
    with open(path, "rb") as f:
        head = f.read(256)
        if len(head) < 256:
            raise ValueError(f"{path}: truncated EDF header")
        try:
            n_records = int(head[236:244].decode("ascii").strip())
            record_dur = float(head[244:252].decode("ascii").strip())
            ns = int(head[252:256].decode("ascii").strip())
        except (UnicodeDecodeError, ValueError) as exc:
            raise ValueError(f"{path}: malformed EDF header: {exc}") from None
        reserved = head[192:236].decode("ascii", "replace").strip()
        if reserved.startswith("EDF+D"):
            raise ValueError(f"{path}: discontinuous EDF+D files are not supported")
        if ns <= 0 or record_dur <= 0:
            raise ValueError(f"{path}: malformed EDF header (ns={ns}, duration={record_dur})")

        sig_head = f.read(ns * 256)
        if len(sig_head) < ns * 256:
            raise ValueError(f"{path}: truncated EDF signal headers")

        def sfield(offset, width, idx):
            start = offset * ns + idx * width
            return sig_head[start:start + width].decode("ascii", "replace").strip()

        labels = [sfield(0, 16, i) for i in range(ns)]
        phys_min = [float(sfield(16 + 80 + 8, 8, i)) for i in range(ns)]
        phys_max = [float(sfield(16 + 80 + 8 + 8, 8, i)) for i in range(ns)]
        dig_min = [int(float(sfield(16 + 80 + 8 + 16, 8, i))) for i in range(ns)]
        dig_max = [int(float(sfield(16 + 80 + 8 + 24, 8, i))) for i in range(ns)]
        nsamp = [int(sfield(16 + 80 + 8 + 32 + 80, 8, i)) for i in range(ns)]

        data_idx = [i for i in range(ns) if not labels[i].startswith("EDF Annotations")]
        if channels is not None:
            sel = []
            for ch in channels:
                if isinstance(ch, int):
                    if ch < 0 or ch >= len(data_idx):
                        raise ValueError(f"{path}: channel index {ch} out of range")
                    sel.append(data_idx[ch])
                else:
                    matches = [i for i in data_idx if labels[i] == ch]
                    if not matches:
                        raise ValueError(f"{path}: no signal labelled {ch!r}")
                    sel.append(matches[0])
        else:
            sel = data_idx
        if not sel:
            raise ValueError(f"{path}: no data signals selected")

        rates = {nsamp[i] / record_dur for i in sel}
        if len(rates) > 1:
            raise ValueError(f"{path}: selected signals have mixed sampling rates {sorted(rates)}")
        fs = rates.pop()
        for i in sel:
            if dig_max[i] <= dig_min[i] or phys_max[i] == phys_min[i]:
                raise ValueError(f"{path}: signal {labels[i]!r} has a degenerate calibration")

        rec_words = sum(nsamp)
        payload = f.read()
    if n_records < 0:
        n_records = len(payload) // (2 * rec_words)
    if len(payload) < 2 * rec_words * n_records:
        raise ValueError(f"{path}: data shorter than the header promises")

    raw = np.frombuffer(payload[:2 * rec_words * n_records], dtype="<i2")
    raw = raw.reshape(n_records, rec_words)
    offsets = np.cumsum([0] + nsamp)
    gains = [(phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i]) for i in sel]
    unit = max(max(abs(phys_min[i]), abs(phys_max[i])) for i in sel) / fp.RAW_MAX
    chans = []
    for j, i in enumerate(sel):
        dig = raw[:, offsets[i]:offsets[i + 1]].reshape(-1).astype(np.float64)
        phys = (dig - dig_min[i]) * gains[j] + phys_min[i]
        chans.append(fp.from_real_array(phys / unit / fp.ONE))
    data = np.stack(chans)
    return EEGRecord(fs=float(fs), data=data, channel_names=[labels[i] for i in sel])


# ---------------------------------------------------------------------------
# Synthetic drifting records

@dataclass(frozen=True)
class SynthConfig:
    """Seeded generator config: oscillatory seizure bursts over filtered noise.

    The drift schedules are piecewise-linear multipliers over normalized
    record time [0, 1], applied to each burst's amplitude and carrier
    frequency at its onset.  The defaults leave the first 30% (the
    train+validation span) stationary, then fade burst amplitude to 40%
    and shift the carrier up 20% by the end of the record.
    """

    duration_s: float = 3600.0
    fs: float = 256.0
    channels: int = 8
    seizure_rate_per_hour: float = 24.0
    seizure_duration_s: Tuple[float, float] = (15.0, 25.0)
    seizure_freq_hz: float = 12.0
    seizure_amp: float = 6.0
    seizure_amp_jitter: float = 0.0       # per-event uniform amplitude jitter (+-fraction)
    background_amp: float = 0.5
    amp_drift: Tuple[Tuple[float, float], ...] = ((0.0, 1.0), (0.3, 1.0), (1.0, 0.3))
    freq_drift: Tuple[Tuple[float, float], ...] = ((0.0, 1.0), (0.3, 1.0), (1.0, 1.2))
    drift: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.seizure_amp <= self.background_amp:
            raise ValueError("seizure amplitude must exceed the background level")
        if self.duration_s <= 0 or self.fs <= 0 or self.channels < 1:
            raise ValueError("invalid synth geometry")
        if not 0.0 <= self.seizure_amp_jitter < 1.0:
            raise ValueError("amplitude jitter must lie in [0, 1)")


def _piecewise(schedule, frac: float) -> float:
    xs = np.array([p[0] for p in schedule])
    ys = np.array([p[1] for p in schedule])
    return float(np.interp(frac, xs, ys))


def synth_generate(cfg: SynthConfig) -> EEGRecord:
    """Deterministic synthetic record; annotations are the exact burst spans."""
    rng = np.random.default_rng(cfg.seed)
    t_len = int(round(cfg.duration_s * cfg.fs))
    c = cfg.channels

    # background: white noise through a short smoothing kernel (RMS-preserving)
    noise = rng.standard_normal((c, t_len))
    kern = np.hanning(9)[1:-1]
    kern /= np.sqrt(np.sum(kern * kern))
    x = np.empty_like(noise)
    for ch in range(c):
        x[ch] = np.convolve(noise[ch], kern, mode="same")
    x *= cfg.background_amp

    chan_gain = rng.uniform(0.7, 1.0, size=c)
    chan_phase = rng.uniform(0.0, 2.0 * np.pi, size=c)

    n_events = int(round(cfg.seizure_rate_per_hour * cfg.duration_s / 3600.0))
    annotations: List[Tuple[float, float]] = []
    if n_events > 0:
        d_lo, d_hi = cfg.seizure_duration_s
        durations = rng.uniform(d_lo, d_hi, size=n_events)
        jitter = (rng.uniform(1.0 - cfg.seizure_amp_jitter, 1.0 + cfg.seizure_amp_jitter,
                              size=n_events)
                  if cfg.seizure_amp_jitter else np.ones(n_events))
        margin = d_hi + 10.0
        span = cfg.duration_s - 2 * margin
        if span <= 0 or span / max(n_events, 1) < d_hi + 10.0:
            raise ValueError("record too short for the requested seizure rate")
        slot = span / n_events
        starts = margin + slot * np.arange(n_events) + rng.uniform(0.15, 0.55, n_events) * slot
        for k in range(n_events):
            dur = float(durations[k])
            i0 = int(round(float(starts[k]) * cfg.fs))
            i1 = min(i0 + int(round(dur * cfg.fs)), t_len)
            onset = i0 / cfg.fs
            frac = onset / cfg.duration_s
            amp_mult = _piecewise(cfg.amp_drift, frac) if cfg.drift else 1.0
            freq_mult = _piecewise(cfg.freq_drift, frac) if cfg.drift else 1.0
            tt = np.arange(i0, i1) / cfg.fs - onset
            # abrupt onset and offset (sub-second ramps).  Long ramps inside the
            # annotated span would hand the offline trainer seizure-labelled
            # samples at every intermediate amplitude, anchoring the decision
            # boundary near the background floor, and would feed the online
            # learner long runs of half-faded samples; either way the drift
            # mechanism under study disappears.
            attack = 0.2
            decay = 0.1
            env = np.minimum(1.0, np.minimum(tt / attack, (dur - tt) / decay))
            env = np.clip(env, 0.0, 1.0)
            f_hz = cfg.seizure_freq_hz * freq_mult
            amp = cfg.seizure_amp * amp_mult * float(jitter[k])
            for ch in range(c):
                burst = (amp * chan_gain[ch]
                         * env * np.sin(2.0 * np.pi * f_hz * tt + chan_phase[ch]))
                x[ch, i0:i1] += burst
            annotations.append((onset, i1 / cfg.fs))

    raw = fp.from_real_array(np.clip(x, fp.REAL_MIN + fp.RESOLUTION, fp.REAL_MAX - fp.RESOLUTION))
    return EEGRecord(fs=cfg.fs, data=raw, annotations=annotations)


# ---------------------------------------------------------------------------
# Model persistence

def save_model(model: DetectorModel, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "channels": model.channels,
        "fs": model.fs,
        "mode": model.mode,
        "logistic": model.effective_logistic,
        "use_bias": model.use_bias,
        "weights": [float(w) for w in model.weights],
        "bias": float(model.bias),
        "weights_raw": [int(w) for w in model.weights_raw],
        "bias_raw": int(model.bias_raw),
        "feature_shifts": [int(s) for s in model.scaling.shifts],
        "lut": {
            "z": [float(v) for v in model.lut.z],
            "p": [float(v) for v in model.lut.p],
            "z_raw": [int(v) for v in model.lut.z_raw],
            "p_raw": [int(v) for v in model.lut.p_raw],
        },
        "filters": {
            band: {
                "edges": list(design.edges),
                "ripple_db": design.ripple_db,
                "sections": [[r / fp.ONE for r in sec] for sec in design.sections_raw],
                "sections_raw": [list(sec) for sec in design.sections_raw],
            }
            for band, design in model.designs.items()
        },
        "hyperparams": None if model.hyperparams is None else {
            "ct": model.hyperparams.ct,
            "ws": model.hyperparams.ws,
            "eta_shift": model.hyperparams.eta_shift,
        },
        "provenance": model.provenance,
    }
    write_atomic(path, json.dumps(doc, indent=2) + "\n")


def load_model(path) -> DetectorModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    designs = {
        band: BandDesign(edges=tuple(entry["edges"]), ripple_db=entry["ripple_db"],
                         sections_raw=tuple(tuple(int(v) for v in sec)
                                            for sec in entry["sections_raw"]))
        for band, entry in doc["filters"].items()
    }
    lut = doc["lut"]
    hp = doc.get("hyperparams")
    return DetectorModel(
        channels=doc["channels"],
        fs=doc["fs"],
        designs=designs,
        scaling=FeatureScaling(np.asarray(doc["feature_shifts"], dtype=np.int64)),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        use_bias=bool(doc["use_bias"]),
        mode=doc["mode"],
        logistic_kind=doc["logistic"],
        lut=LogisticLUT(z=np.asarray(lut["z"]), p=np.asarray(lut["p"]),
                        z_raw=np.asarray(lut["z_raw"], dtype=np.int64),
                        p_raw=np.asarray(lut["p_raw"], dtype=np.int64)),
        hyperparams=None if hp is None else Hyperparams(ct=hp["ct"], ws=hp["ws"],
                                                        eta_shift=hp["eta_shift"]),
        provenance=doc.get("provenance", {}),
        weights_raw=np.asarray(doc["weights_raw"], dtype=np.int64),
        bias_raw=int(doc["bias_raw"]),
    )
