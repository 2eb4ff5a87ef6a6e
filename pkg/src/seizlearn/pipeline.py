"""Block engine: runs feature extraction and classification over records.

Fast paths use the jitted kernels from seizlearn._kernels when numba is
importable and fall back to vectorised numpy otherwise.  Both paths
reproduce the per-sample reference classes exactly: bit-for-bit in fixed
mode, and with identical operation order (hence identical floats) for the
float feature path.  The static float scorer uses BLAS matrix products,
which agree with the sequential reference to ~1e-15 relative.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fixedpoint as fp
from .classifier import DetectorModel, logistic_exact
from .data import EEGRecord
from .dsp import BAND_NAMES
from .features import FEATURES_PER_CHANNEL, window_length
from .online import Hyperparams, OnlineClassifier

try:
    from . import _kernels
    HAVE_KERNELS = True
except ImportError:       # numba not installed; numpy fallbacks take over
    _kernels = None
    HAVE_KERNELS = False


@dataclass
class RunResult:
    """Per-sample prediction trace plus the final classifier state."""

    z: np.ndarray
    p: np.ndarray
    label: np.ndarray
    retrained: np.ndarray
    skipped: np.ndarray
    weights: np.ndarray
    bias: float
    weights_raw: np.ndarray
    bias_raw: int
    retrain_count: int
    mode: str
    z_raw: Optional[np.ndarray] = None
    p_raw: Optional[np.ndarray] = None
    elapsed_s: float = field(default=0.0)

    def __len__(self) -> int:
        return len(self.label)


def _sos_arrays(model: DetectorModel):
    sos = np.empty((3, 3, 5), dtype=np.float64)
    sos_raw = np.empty((3, 3, 5), dtype=np.int64)
    for b, band in enumerate(BAND_NAMES):
        design = model.designs[band]
        for s, sec in enumerate(design.sections):
            sos[b, s] = (sec.b0, sec.b1, sec.b2, sec.a1, sec.a2)
            sos_raw[b, s] = sec.raw()
    return sos, sos_raw


def compute_features(model: DetectorModel, record: EEGRecord, mode: Optional[str] = None,
                     scaled: bool = True, prefer_kernel: bool = True) -> np.ndarray:
    """Feature matrix (T, 4C) for a record: float64 or Q6.10 raws (int64).

    ``scaled=False`` skips the per-feature power-of-two scaling (float mode
    only; used when computing the scaling itself at training time).
    """
    mode = mode or model.mode
    if record.n_channels != model.channels:
        raise ValueError(f"record has {record.n_channels} channels, model expects {model.channels}")
    n = window_length(record.fs)
    sos, sos_raw = _sos_arrays(model)
    dim = model.channels * FEATURES_PER_CHANNEL
    t_len = record.n_samples
    if mode == "fixed":
        if not scaled:
            raise ValueError("unscaled features are a float-mode training aid")
        x = record.data.astype(np.int64)
        out = np.empty((t_len, dim), dtype=np.int64)
        shifts = model.scaling.shifts.astype(np.int64)
        if prefer_kernel and HAVE_KERNELS:
            _kernels.fixed_filter_features(x, sos_raw, n, shifts, out)
        else:
            _fixed_features_numpy(x, sos_raw, n, shifts, out)
        return out
    x = record.data.astype(np.float64) / fp.ONE
    mult = model.scaling.multipliers if scaled else np.ones(dim)
    out = np.empty((t_len, dim), dtype=np.float64)
    if prefer_kernel and HAVE_KERNELS:
        _kernels.float_filter_features(x, sos, n, mult, out)
    else:
        _float_features_numpy(x, sos, n, mult, out)
    return out


def _float_features_numpy(x, sos, n, mult, out):
    """Numpy fallback for the float feature path (same op order as kernel)."""
    nch, t_len = x.shape
    nd = n - 1
    # DF1 cascade, vectorised over (channel, band); sequential over samples
    y = np.empty((nch, 3, t_len), dtype=np.float64)
    b0 = sos[:, :, 0]
    b1 = sos[:, :, 1]
    b2 = sos[:, :, 2]
    a1 = sos[:, :, 3]
    a2 = sos[:, :, 4]
    x1 = np.zeros((nch, 3, 3))
    x2 = np.zeros((nch, 3, 3))
    y1 = np.zeros((nch, 3, 3))
    y2 = np.zeros((nch, 3, 3))
    for t in range(t_len):
        v = np.broadcast_to(x[:, t, None], (nch, 3)).copy()
        for s in range(3):
            ys = (b0[:, s] * v + b1[:, s] * x1[:, :, s] + b2[:, s] * x2[:, :, s]
                  - a1[:, s] * y1[:, :, s] - a2[:, s] * y2[:, :, s])
            x2[:, :, s] = x1[:, :, s]
            x1[:, :, s] = v
            y2[:, :, s] = y1[:, :, s]
            y1[:, :, s] = ys
            v = ys
        y[:, :, t] = v
    diffs = np.abs(np.diff(x, axis=1, prepend=0.0))
    sq = y * y
    # fresh left-to-right window sums via time-ordered strided accumulation
    ll = np.zeros((nch, t_len))
    pad_d = np.concatenate([np.zeros((nch, nd - 1)), diffs], axis=1)
    for i in range(nd):
        ll += pad_d[:, i:i + t_len]
    bp = np.zeros((nch, 3, t_len))
    pad_s = np.concatenate([np.zeros((nch, 3, n - 1)), sq], axis=2)
    for i in range(n):
        bp += pad_s[:, :, i:i + t_len]
    for c in range(nch):
        base = FEATURES_PER_CHANNEL * c
        out[:, base] = ll[c] * mult[base]
        for b in range(3):
            out[:, base + 1 + b] = bp[c, b] * mult[base + 1 + b]


def _np_sat(v):
    return np.clip(v, fp.RAW_MIN, fp.RAW_MAX)


def _np_round_shift(v, k: int):
    if k <= 0:
        return v << (-k)
    half = 1 << (k - 1)
    return np.where(v >= 0, (v + half) >> k, -((-v + half) >> k))


def _fixed_features_numpy(x, sos_raw, n, shifts, out):
    """Numpy fallback for the fixed feature path (bit-identical to kernel)."""
    nch, t_len = x.shape
    nd = n - 1
    b0 = sos_raw[:, :, 0]
    b1 = sos_raw[:, :, 1]
    b2 = sos_raw[:, :, 2]
    a1 = sos_raw[:, :, 3]
    a2 = sos_raw[:, :, 4]
    x1 = np.zeros((nch, 3, 3), dtype=np.int64)
    x2 = np.zeros((nch, 3, 3), dtype=np.int64)
    y1 = np.zeros((nch, 3, 3), dtype=np.int64)
    y2 = np.zeros((nch, 3, 3), dtype=np.int64)
    diffs = np.zeros((nch, nd), dtype=np.int64)
    sq = np.zeros((nch, 3, n), dtype=np.int64)
    prev = np.zeros(nch, dtype=np.int64)
    ll_acc = np.zeros(nch, dtype=np.int64)
    bp_acc = np.zeros((nch, 3), dtype=np.int64)
    ll_shift = shifts[0::FEATURES_PER_CHANNEL]
    bp_shift = shifts.reshape(nch, FEATURES_PER_CHANNEL)[:, 1:]
    pos_d = 0
    pos_s = 0
    for t in range(t_len):
        xi = x[:, t]
        d = np.abs(xi - prev)
        prev = xi
        ll_acc += d - diffs[:, pos_d]
        diffs[:, pos_d] = d
        v = np.broadcast_to(xi[:, None], (nch, 3)).copy()
        for s in range(3):
            acc = (b0[:, s] * v + b1[:, s] * x1[:, :, s] + b2[:, s] * x2[:, :, s]
                   - a1[:, s] * y1[:, :, s] - a2[:, s] * y2[:, :, s])
            ys = _np_sat(_np_round_shift(acc, fp.FRAC_BITS))
            x2[:, :, s] = x1[:, :, s]
            x1[:, :, s] = v
            y2[:, :, s] = y1[:, :, s]
            y1[:, :, s] = ys
            v = ys
        term = v * v
        bp_acc += term - sq[:, :, pos_s]
        sq[:, :, pos_s] = term
        for c in range(nch):
            base = FEATURES_PER_CHANNEL * c
            out[t, base] = _np_sat(_np_round_shift(np.int64(ll_acc[c]), int(ll_shift[c])))
            for b in range(3):
                out[t, base + 1 + b] = _np_sat(
                    _np_round_shift(np.int64(bp_acc[c, b]), fp.FRAC_BITS + int(bp_shift[c, b])))
        pos_d = 0 if pos_d == nd - 1 else pos_d + 1
        pos_s = 0 if pos_s == n - 1 else pos_s + 1


def run_static(model: DetectorModel, feats: np.ndarray) -> RunResult:
    """Score every sample with frozen weights (no online updates)."""
    t0 = time.perf_counter()
    t_len = feats.shape[0]
    zero = np.zeros(t_len, dtype=np.uint8)
    if model.mode == "fixed":
        acc = feats.astype(np.int64) @ model.weights_raw
        if model.use_bias:
            acc = acc + int(model.bias_raw) * fp.ONE
        z_raw = _np_sat(_np_round_shift(acc, fp.FRAC_BITS)).astype(np.int64)
        if model.effective_logistic == "lut":
            p_raw = model.lut.eval_raw_array(z_raw)
            p = p_raw / fp.ONE
        else:
            p_raw = None
            p = logistic_exact(z_raw / fp.ONE)
        label = (z_raw >= 0).astype(np.uint8)
        return RunResult(z=z_raw / fp.ONE, p=p, label=label, retrained=zero,
                         skipped=zero.copy(), weights=model.weights.copy(),
                         bias=model.bias, weights_raw=model.weights_raw.copy(),
                         bias_raw=int(model.bias_raw), retrain_count=0, mode="fixed",
                         z_raw=z_raw, p_raw=p_raw,
                         elapsed_s=time.perf_counter() - t0)
    z = feats @ model.weights
    if model.use_bias:
        z = z + model.bias
    p = model.lut.eval(z) if model.effective_logistic == "lut" else logistic_exact(z)
    label = (z >= 0).astype(np.uint8)
    return RunResult(z=z, p=p, label=label, retrained=zero, skipped=zero.copy(),
                     weights=model.weights.copy(), bias=model.bias,
                     weights_raw=model.weights_raw.copy(), bias_raw=int(model.bias_raw),
                     retrain_count=0, mode="float",
                     elapsed_s=time.perf_counter() - t0)


def run_online(model: DetectorModel, feats: np.ndarray,
               hp: Optional[Hyperparams] = None, update_mode: str = "single",
               hw_faithful: bool = True, prefer_kernel: bool = True) -> RunResult:
    """Run the self-training loop over precomputed features."""
    hp = hp if hp is not None else (model.hyperparams or Hyperparams())
    if update_mode not in ("single", "window"):
        raise ValueError(f"unknown update_mode {update_mode!r}")
    t0 = time.perf_counter()
    t_len = feats.shape[0]
    if prefer_kernel and HAVE_KERNELS:
        label = np.empty(t_len, dtype=np.uint8)
        retrained = np.empty(t_len, dtype=np.uint8)
        skipped = np.empty(t_len, dtype=np.uint8)
        if model.mode == "fixed":
            z_raw = np.empty(t_len, dtype=np.int64)
            p_raw = np.empty(t_len, dtype=np.int64)
            w = model.weights_raw.copy()
            bias_raw, count = _kernels.fixed_online(
                feats.astype(np.int64), w, int(model.bias_raw), model.use_bias,
                fp.from_real(hp.ct), fp.from_real(1.0 - hp.ct), hp.ws, hp.eta_shift,
                model.lut.z_raw, model.lut.p_raw,
                update_mode == "single", hw_faithful,
                z_raw, p_raw, label, retrained, skipped)
            return RunResult(z=z_raw / fp.ONE, p=p_raw / fp.ONE, label=label,
                             retrained=retrained, skipped=skipped,
                             weights=w / fp.ONE, bias=bias_raw / fp.ONE,
                             weights_raw=w, bias_raw=int(bias_raw),
                             retrain_count=int(count), mode="fixed",
                             z_raw=z_raw, p_raw=p_raw,
                             elapsed_s=time.perf_counter() - t0)
        z = np.empty(t_len, dtype=np.float64)
        p = np.empty(t_len, dtype=np.float64)
        w = model.weights.copy()
        bias, count = _kernels.float_online(
            feats.astype(np.float64), w, float(model.bias), model.use_bias,
            hp.ct, hp.ws, hp.eta, update_mode == "single", hw_faithful,
            z, p, label, retrained, skipped)
        return RunResult(z=z, p=p, label=label, retrained=retrained, skipped=skipped,
                         weights=w, bias=float(bias),
                         weights_raw=np.array([fp.from_real(v) for v in w], dtype=np.int64),
                         bias_raw=fp.from_real(float(bias)),
                         retrain_count=int(count), mode="float",
                         elapsed_s=time.perf_counter() - t0)
    return _online_python(model, feats, hp, update_mode, hw_faithful, t0)


def _online_python(model, feats, hp, update_mode, hw_faithful, t0) -> RunResult:
    clf = OnlineClassifier(model, hp=hp, update_mode=update_mode, hw_faithful=hw_faithful)
    t_len = feats.shape[0]
    z = np.empty(t_len)
    p = np.empty(t_len)
    label = np.empty(t_len, dtype=np.uint8)
    retrained = np.empty(t_len, dtype=np.uint8)
    skipped = np.empty(t_len, dtype=np.uint8)
    for t in range(t_len):
        pred = clf.step(feats[t])
        z[t] = pred.z
        p[t] = pred.p
        label[t] = pred.label
        retrained[t] = pred.retrained
        skipped[t] = pred.skipped
    if model.mode == "fixed":
        z_raw = fp.from_real_array(z)
        p_raw = fp.from_real_array(p)
    else:
        z_raw = p_raw = None
    return RunResult(z=z, p=p, label=label, retrained=retrained, skipped=skipped,
                     weights=clf.weights, bias=clf.bias,
                     weights_raw=clf.weights_raw, bias_raw=clf.bias_raw,
                     retrain_count=clf.retrain_count, mode=model.mode,
                     z_raw=z_raw, p_raw=p_raw,
                     elapsed_s=time.perf_counter() - t0)


def run_record(model: DetectorModel, record: EEGRecord, online: bool = False,
               hp: Optional[Hyperparams] = None, update_mode: str = "single",
               hw_faithful: bool = True, prefer_kernel: bool = True,
               features: Optional[np.ndarray] = None) -> RunResult:
    """Full pipeline over a record: features, then static or online scoring."""
    if features is None:
        features = compute_features(model, record, prefer_kernel=prefer_kernel)
    if online:
        return run_online(model, features, hp=hp, update_mode=update_mode,
                          hw_faithful=hw_faithful, prefer_kernel=prefer_kernel)
    return run_static(model, features)
