"""Offline phase: causal splitting, balancing, L1-penalized fitting, tuning.

The record is split 15/15/70 into train/validation/test in time order;
nothing after the validation boundary ever influences the fitted weights.
Non-seizure training samples are trimmed to match the seizure count,
keeping the ones nearest seizure onsets/offsets.  Fitting is two-stage:
proximal full-batch gradient descent on cross-entropy plus an L1 penalty
(whose exact zeros perform feature selection), followed by an unpenalized
refit on the surviving features.  Hyperparameter tuning replays the full
online pipeline on the validation segment for every (WS, CT) grid point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .classifier import DetectorModel, logistic_exact
from .data import EEGRecord
from .dsp import default_filter_bank
from .evaluation import EvalConfig, evaluate
from .features import FeatureScaling, window_length
from .online import Hyperparams

DEFAULT_WS_GRID = tuple(range(1, 16))
DEFAULT_CT_GRID = (0.6, 0.7, 0.8, 0.9)
SPECIFICITY_FLOOR = 95.0


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.15
    val_frac: float = 0.15
    test_frac: float = 0.70
    min_train_val_seizures: int = 2

    def __post_init__(self):
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1")


@dataclass
class TrainConfig:
    l1_lambda: float = 0.01
    max_iters: int = 2000
    tol: float = 1e-6
    balance: bool = True
    use_bias: bool = True
    seed: int = 0


def _clear_of_events(t: float, annotations, fs: float) -> float:
    """Push a boundary time past any event it would bisect."""
    for onset, offset in annotations:
        if onset < t < offset:
            return offset + 1.0 / fs
    return t


def split(record: EEGRecord, spec: SplitSpec = SplitSpec()
          ) -> Tuple[EEGRecord, EEGRecord, EEGRecord]:
    """Causal train/val/test partition of one record.

    Segments are contiguous, ordered and non-overlapping; their sample
    arrays concatenate back to the full record.  If the leading
    train+val span holds fewer than ``min_train_val_seizures`` events,
    the val/test boundary extends forward to the end of the Nth event.
    Boundaries never bisect an event.
    """
    anns = record.annotations
    if not anns:
        raise ValueError("cannot split a record with no annotated seizures")
    need = spec.min_train_val_seizures
    if len(anns) < need:
        raise ValueError(f"record has {len(anns)} seizure event(s); "
                         f"need at least {need} for train+validation")
    total = record.duration_s
    tv_end = (spec.train_frac + spec.val_frac) * total
    contained = [a for a in anns if a[1] <= tv_end]
    if len(contained) < need:
        tv_end = anns[need - 1][1] + 1.0 / record.fs
    tv_end = _clear_of_events(tv_end, anns, record.fs)

    train_end = tv_end * spec.train_frac / (spec.train_frac + spec.val_frac)
    if not any(a[1] <= train_end for a in anns):
        # train must hold at least one whole event; val keeps the next one
        train_end = anns[0][1] + 1.0 / record.fs
        if len(anns) > 1:
            train_end = min(train_end, anns[1][0])
    train_end = _clear_of_events(train_end, anns, record.fs)

    i1 = int(round(train_end * record.fs))
    i2 = int(round(tv_end * record.fs))
    if not 0 < i1 < i2 < record.n_samples:
        raise ValueError("degenerate split; record too short for the requested fractions")
    return (record.slice_samples(0, i1),
            record.slice_samples(i1, i2),
            record.slice_samples(i2, record.n_samples))


def balance_mask(labels: np.ndarray, fs: float, annotations: Sequence[Tuple[float, float]],
                 eligible: Optional[np.ndarray] = None) -> np.ndarray:
    """Trim non-seizure samples to the seizure count, keeping those nearest
    seizure onsets/offsets.  Returns a boolean keep-mask over all samples."""
    labels = np.asarray(labels)
    keep = np.zeros(len(labels), dtype=bool)
    if eligible is None:
        eligible = np.ones(len(labels), dtype=bool)
    seiz = (labels == 1) & eligible
    nonseiz = (labels == 0) & eligible
    keep[seiz] = True
    n_target = int(np.count_nonzero(seiz))
    idx = np.nonzero(nonseiz)[0]
    if len(idx) <= n_target:
        keep[idx] = True
        return keep
    t = idx / fs
    edges = np.array([e for a in annotations for e in a])
    if len(edges) == 0:
        raise ValueError("cannot balance without seizure annotations")
    dist = np.min(np.abs(t[:, None] - edges[None, :]), axis=1)
    order = np.argsort(dist, kind="stable")[:n_target]
    keep[idx[order]] = True
    return keep


def _ce_loss_grad(xb: np.ndarray, y: np.ndarray, w: np.ndarray):
    z = xb @ w
    p = logistic_exact(z)
    eps = 1e-12
    loss = -float(np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    grad = xb.T @ (p - y) / len(y)
    return loss, grad


def _soft_threshold(v: np.ndarray, thresh: float, penalized: np.ndarray) -> np.ndarray:
    out = v.copy()
    pen = penalized
    out[pen] = np.sign(v[pen]) * np.maximum(np.abs(v[pen]) - thresh, 0.0)
    return out


def _prox_descent(xb: np.ndarray, y: np.ndarray, w0: np.ndarray, penalized: np.ndarray,
                  lam: float, max_iters: int, tol: float):
    """Proximal gradient descent with backtracking; objective never increases.

    The step re-expands after accepted iterations so the unpenalized refit
    keeps making progress on separable data, where the optimum pushes the
    decision margin toward saturation.
    """
    w = w0.copy()
    step = 1.0
    loss, grad = _ce_loss_grad(xb, y, w)
    history = [loss + lam * float(np.sum(np.abs(w[penalized])))]
    iters = 0
    converged = False
    for iters in range(1, max_iters + 1):
        while True:
            cand = _soft_threshold(w - step * grad, lam * step, penalized)
            delta = cand - w
            cand_loss, cand_grad = _ce_loss_grad(xb, y, cand)
            bound = loss + float(grad @ delta) + float(delta @ delta) / (2 * step)
            if cand_loss <= bound + 1e-15 or step < 1e-12:
                break
            step *= 0.5
        gap = float(np.max(np.abs(delta))) / step
        w, loss, grad = cand, cand_loss, cand_grad
        history.append(loss + lam * float(np.sum(np.abs(w[penalized]))))
        if gap < tol:
            converged = True
            break
        step = min(step * 2.0, 1e6)
    return w, {"iterations": iters, "converged": converged, "loss_history": history}


def fit_offline(features: np.ndarray, labels: np.ndarray,
                config: TrainConfig = TrainConfig()) -> Tuple[np.ndarray, float, dict]:
    """Two-stage fit: L1-penalized selection, then unpenalized refit.

    Returns (feature_weights, bias, info); dropped features keep weight 0.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("features must be (n, d) aligned with labels")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature values")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("training labels contain a single class; cannot fit")

    n, d = x.shape
    cols = [x]
    if config.use_bias:
        cols.append(np.ones((n, 1)))
    xb = np.hstack(cols)
    dim = xb.shape[1]
    penalized = np.zeros(dim, dtype=bool)
    penalized[:d] = True

    w1, info1 = _prox_descent(xb, y, np.zeros(dim), penalized,
                              config.l1_lambda, config.max_iters, config.tol)
    survivors = np.abs(w1[:d]) > 0.0
    info = {"stage1": info1, "survivors": int(np.count_nonzero(survivors)),
            "l1_lambda": config.l1_lambda}
    if not np.any(survivors):
        # penalty zeroed everything; keep the bias-only model
        bias = float(w1[d]) if config.use_bias else 0.0
        info["stage2"] = {"iterations": 0, "converged": True, "loss_history": []}
        return np.zeros(d), bias, info

    keep_cols = np.concatenate([survivors, [True]]) if config.use_bias else survivors
    xb2 = xb[:, keep_cols]
    w2, info2 = _prox_descent(xb2, y, w1[keep_cols], np.zeros(xb2.shape[1], dtype=bool),
                              0.0, config.max_iters, config.tol)
    info["stage2"] = info2
    weights = np.zeros(d)
    weights[survivors] = w2[:int(np.count_nonzero(survivors))]
    bias = float(w2[-1]) if config.use_bias else 0.0
    return weights, bias, info


@dataclass
class TunePoint:
    ws: int
    ct: float
    sensitivity: float
    specificity: float
    far_per_day: float


def tune(model: DetectorModel, val_record: EEGRecord,
         ws_grid: Iterable[int] = DEFAULT_WS_GRID,
         ct_grid: Iterable[float] = DEFAULT_CT_GRID,
         update_mode: str = "single",
         eval_config: EvalConfig = EvalConfig(),
         specificity_floor: float = SPECIFICITY_FLOOR,
         features: Optional[np.ndarray] = None,
         ) -> Tuple[Hyperparams, List[TunePoint]]:
    """Exhaustive (WS, CT) search replaying the online pipeline per point.

    Picks the point with the best event sensitivity subject to sample
    specificity >= the floor; ties break toward higher specificity, then
    smaller WS.  If nothing meets the floor, returns the most specific
    point and warns.
    """
    from .pipeline import compute_features, run_online   # deferred: avoid cycle

    ws_grid = list(ws_grid)
    ct_grid = list(ct_grid)
    if not ws_grid or not ct_grid:
        raise ValueError("empty hyperparameter grid")
    if not val_record.annotations:
        raise ValueError("validation segment has no seizure annotations to tune against")
    if features is None:
        features = compute_features(model, val_record)
    warmup = window_length(val_record.fs)
    rows: List[TunePoint] = []
    for ws in ws_grid:
        for ct in ct_grid:
            hp = Hyperparams(ct=ct, ws=ws, eta_shift=model.hyperparams.eta_shift
                             if model.hyperparams else 6)
            result = run_online(model, features, hp=hp, update_mode=update_mode)
            report = evaluate(result.label, val_record.fs, val_record.annotations,
                              eval_config, warmup_samples=warmup)
            rows.append(TunePoint(ws=ws, ct=ct,
                                  sensitivity=report.sensitivity_event,
                                  specificity=report.specificity_sample,
                                  far_per_day=report.false_alarms_per_day))
    ok = [r for r in rows if r.specificity >= specificity_floor]
    if ok:
        best = max(ok, key=lambda r: (r.sensitivity, r.specificity, -r.ws))
    else:
        warnings.warn(f"no grid point reaches {specificity_floor:.0f}% specificity; "
                      "returning the most specific point")
        best = max(rows, key=lambda r: (r.specificity, r.sensitivity, -r.ws))
    eta_shift = model.hyperparams.eta_shift if model.hyperparams else 6
    return Hyperparams(ct=best.ct, ws=best.ws, eta_shift=eta_shift), rows


def train_model(record: EEGRecord, spec: SplitSpec = SplitSpec(),
                config: TrainConfig = TrainConfig(),
                ) -> Tuple[DetectorModel, Tuple[EEGRecord, EEGRecord, EEGRecord]]:
    """Offline phase end to end: split, scale, balance, fit.

    Returns the fitted float-mode model (with default hyperparameters;
    run :func:`tune` on the validation segment next) and the three
    segments so callers can reuse the exact split.
    """
    from .pipeline import compute_features   # deferred: avoid cycle

    segments = split(record, spec)
    train_seg, val_seg, test_seg = segments
    designs = default_filter_bank(record.fs)
    warmup = window_length(record.fs)

    probe = DetectorModel(
        channels=record.n_channels, fs=record.fs, designs=designs,
        scaling=FeatureScaling.identity(record.n_channels),
        weights=np.zeros(record.n_channels * 4), use_bias=config.use_bias)
    unscaled = compute_features(probe, train_seg, mode="float", scaled=False)
    scaling = FeatureScaling.from_training(unscaled[warmup:])
    feats = scaling.apply_float(unscaled)

    labels = train_seg.sample_labels()
    eligible = np.zeros(len(labels), dtype=bool)
    eligible[warmup:] = True
    if config.balance:
        keep = balance_mask(labels, record.fs, train_seg.annotations, eligible)
    else:
        keep = eligible
    weights, bias, info = fit_offline(feats[keep], labels[keep], config)

    model = DetectorModel(
        channels=record.n_channels, fs=record.fs, designs=designs, scaling=scaling,
        weights=weights, bias=bias, use_bias=config.use_bias, mode="float",
        hyperparams=Hyperparams(),
        provenance={
            "train_end_s": train_seg.duration_s,
            "val_end_s": train_seg.duration_s + val_seg.duration_s,
            "l1_lambda": config.l1_lambda,
            "tol": config.tol,
            "max_iters": config.max_iters,
            "balanced": config.balance,
            "seed": config.seed,
            "warmup_samples": warmup,
            "train_samples_used": int(np.count_nonzero(keep)),
            "survivors": info["survivors"],
        })
    return model, segments
