"""Logistic-regression scoring: weighted dot product plus squashing.

Two squashing paths are provided: the exact logistic and a 10-entry
piecewise-linear look-up table over [-6, 6] that the silicon uses.  The
LUT saturates to 0/1 outside its span, its breakpoint outputs are forced
symmetric (lut(-z) = 1 - lut(z)), and by construction it crosses 0.5 at
z = 0.  The decision label is taken from the sign of z in both variants,
which coincides with thresholding p against 0.5 (ties, p = 0.5, map to
label 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Optional

import numpy as np

from . import fixedpoint as fp
from .dsp import BandDesign
from .features import FEATURES_PER_CHANNEL, FeatureScaling

if TYPE_CHECKING:
    from .online import Hyperparams

LUT_ENTRIES = 10
LUT_SPAN = 6.0


def logistic_exact(z):
    """Numerically stable logistic, scalar or array."""
    if np.isscalar(z):
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        ez = math.exp(z)
        return ez / (1.0 + ez)
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True, eq=False)
class LogisticLUT:
    """10-entry logistic approximation: breakpoints, float and Q6.10 raw."""

    z: np.ndarray
    p: np.ndarray
    z_raw: np.ndarray
    p_raw: np.ndarray

    def eval(self, z):
        """Piecewise-linear interpolation with 0/1 saturation outside the span."""
        zv = np.asarray(z, dtype=np.float64)
        out = np.interp(zv, self.z, self.p)
        out = np.where(zv < -LUT_SPAN, 0.0, out)
        out = np.where(zv > LUT_SPAN, 1.0, out)
        return float(out) if np.isscalar(z) else out

    def eval_raw(self, z_raw: int) -> int:
        """Fixed-point interpolation on raw values (scalar)."""
        zr = self.z_raw
        pr = self.p_raw
        if z_raw < zr[0]:
            return 0
        if z_raw > zr[-1]:
            return fp.ONE
        for i in range(len(zr) - 1):
            if z_raw <= zr[i + 1]:
                t = z_raw - zr[i]
                seg = int(zr[i + 1] - zr[i])
                d = int(pr[i + 1] - pr[i])
                return int(pr[i]) + (2 * t * d + seg) // (2 * seg)
        return int(pr[-1])

    def eval_raw_array(self, z_raw: np.ndarray) -> np.ndarray:
        z_raw = np.asarray(z_raw, dtype=np.int64)
        idx = np.clip(np.searchsorted(self.z_raw, z_raw, side="left") - 1,
                      0, len(self.z_raw) - 2)
        t = z_raw - self.z_raw[idx]
        seg = self.z_raw[idx + 1] - self.z_raw[idx]
        d = self.p_raw[idx + 1] - self.p_raw[idx]
        out = self.p_raw[idx] + (2 * t * d + seg) // (2 * seg)
        out = np.where(z_raw < self.z_raw[0], 0, out)
        out = np.where(z_raw > self.z_raw[-1], fp.ONE, out)
        out = np.where(z_raw == self.z_raw[0], self.p_raw[0], out)
        return out.astype(np.int64)


def build_lut(entries: int = LUT_ENTRIES, span: float = LUT_SPAN) -> LogisticLUT:
    """Uniform breakpoints over [-span, span], symmetric outputs."""
    z = np.linspace(-span, span, entries)
    p = logistic_exact(z)
    half = entries // 2
    p[:half] = 1.0 - p[entries - 1:entries - 1 - half:-1]  # force exact symmetry
    z_raw = np.array([fp.from_real(v) for v in z], dtype=np.int64)
    p_raw = np.empty(entries, dtype=np.int64)
    for i in range(entries - half, entries):
        p_raw[i] = fp.from_real(p[i])
        p_raw[entries - 1 - i] = fp.ONE - p_raw[i]
    if entries % 2 == 1:
        mid = entries // 2
        p_raw[mid] = fp.ONE // 2
    return LogisticLUT(z=z, p=p, z_raw=z_raw, p_raw=p_raw)


@dataclass
class Prediction:
    z: float
    p: float
    label: int
    retrained: bool = False
    skipped: bool = False


def dot(weights: np.ndarray, bias: float, x: np.ndarray) -> float:
    """z = w . x + bias (float reference)."""
    if len(weights) != len(x):
        raise ValueError(f"dimension mismatch: {len(weights)} weights, {len(x)} features")
    return float(np.dot(weights, x) + bias)


def dot_raw(weights_raw: np.ndarray, bias_raw: int, x_raw: np.ndarray,
            use_bias: bool = True) -> int:
    """Fixed-point dot product: exact wide accumulation, one narrowing."""
    if len(weights_raw) != len(x_raw):
        raise ValueError(f"dimension mismatch: {len(weights_raw)} weights, {len(x_raw)} features")
    acc = int(np.dot(np.asarray(weights_raw, dtype=np.int64),
                     np.asarray(x_raw, dtype=np.int64)))
    if use_bias:
        acc += int(bias_raw) * fp.ONE
    return fp.acc_narrow(acc)


@dataclass
class DetectorModel:
    """Everything needed to classify a stream reproducibly.

    Weights are kept in float; the Q6.10 raw twins used by the fixed
    backend are derived deterministically (and serialized explicitly, so a
    saved fixed-mode model reloads bit-exactly).
    """

    channels: int
    fs: float
    designs: Dict[str, BandDesign]
    scaling: FeatureScaling
    weights: np.ndarray
    bias: float = 0.0
    use_bias: bool = True
    mode: str = "float"                    # "float" | "fixed"
    logistic_kind: str = ""                # "" -> exact in float, lut in fixed
    lut: LogisticLUT = field(default_factory=build_lut)
    hyperparams: Optional["Hyperparams"] = None
    provenance: dict = field(default_factory=dict)
    weights_raw: Optional[np.ndarray] = None
    bias_raw: Optional[int] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        expected = self.channels * FEATURES_PER_CHANNEL
        if len(self.weights) != expected:
            raise ValueError(f"model expects {expected} feature weights, got {len(self.weights)}")
        if self.mode not in ("float", "fixed"):
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        if self.weights_raw is None:
            self.weights_raw = np.array([fp.from_real(w) for w in self.weights], dtype=np.int64)
        else:
            self.weights_raw = np.asarray(self.weights_raw, dtype=np.int64)
        if self.bias_raw is None:
            self.bias_raw = fp.from_real(self.bias)

    @property
    def dim(self) -> int:
        return self.channels * FEATURES_PER_CHANNEL

    @property
    def effective_logistic(self) -> str:
        if self.logistic_kind:
            return self.logistic_kind
        return "lut" if self.mode == "fixed" else "exact"

    def clone(self) -> "DetectorModel":
        import copy
        return copy.deepcopy(self)


def classify(model: DetectorModel, x) -> Prediction:
    """Score one (already scaled) feature vector.

    Float mode takes float features; fixed mode takes Q6.10 raw features
    and reports z and p converted back to real values.
    """
    if model.mode == "fixed":
        z_raw = dot_raw(model.weights_raw, model.bias_raw, x, model.use_bias)
        if model.effective_logistic == "lut":
            p_raw = model.lut.eval_raw(z_raw)
            p = fp.to_real(p_raw)
        else:
            p = logistic_exact(fp.to_real(z_raw))
        return Prediction(z=fp.to_real(z_raw), p=p, label=1 if z_raw >= 0 else 0)
    z = dot(model.weights, model.bias if model.use_bias else 0.0, x)
    if model.effective_logistic == "lut":
        p = model.lut.eval(z)
    else:
        p = logistic_exact(z)
    return Prediction(z=z, p=p, label=1 if z >= 0 else 0)
