"""Unsupervised online updates: confidence gating plus bootstrapped SGD.

Every sample is classified; its probability is compared against two
thresholds (CT for seizure, 1 - CT for non-seizure).  A run of consecutive
high-confidence predictions -- WS samples for seizure, 10 * WS for
non-seizure -- triggers a retrain step whose label is the classifier's own
rounded output (1 for the seizure register, 0 for the non-seizure one).
Ground-truth labels are never consulted.

After a trigger both shift registers and the high-confidence buffer clear,
and in hardware-faithful mode the next input sample is consumed without
classification (the retrain reuses the multiplier array for one cycle);
its emitted prediction repeats the previous label and is flagged
``skipped`` so the output stream stays aligned 1:1 with the input.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import fixedpoint as fp
from .classifier import DetectorModel, Prediction, classify

GATE_LOW = 0
GATE_SEIZURE = 1
GATE_NONSEIZURE = 2

NONSEIZURE_WINDOW_FACTOR = 10
DEFAULT_ETA_SHIFT = 6          # eta = 2**-6 = 1/64


@dataclass(frozen=True)
class Hyperparams:
    """Patient-specific online-learning knobs."""

    ct: float = 0.8
    ws: int = 10
    eta_shift: int = DEFAULT_ETA_SHIFT

    def __post_init__(self):
        if not 0.5 < self.ct < 1.0:
            raise ValueError(f"confidence threshold {self.ct} outside (0.5, 1)")
        if self.ws < 1:
            raise ValueError(f"window size {self.ws} must be >= 1")
        if not 0 <= self.eta_shift <= 15:
            raise ValueError(f"eta shift {self.eta_shift} outside [0, 15]")

    @property
    def ws_nonseizure(self) -> int:
        return NONSEIZURE_WINDOW_FACTOR * self.ws

    @property
    def eta(self) -> float:
        return 2.0 ** -self.eta_shift


def gate(p: float, ct: float) -> int:
    """Classify a probability into seizure-confident / nonseizure-confident / low."""
    if p >= ct:
        return GATE_SEIZURE
    if p <= 1.0 - ct:
        return GATE_NONSEIZURE
    return GATE_LOW


def gate_raw(p_raw: int, ct_hi_raw: int, ct_lo_raw: int) -> int:
    if p_raw >= ct_hi_raw:
        return GATE_SEIZURE
    if p_raw <= ct_lo_raw:
        return GATE_NONSEIZURE
    return GATE_LOW


def sgd_update(weights: np.ndarray, bias: float, x: np.ndarray, p: float, y: int,
               eta: float, use_bias: bool = True) -> Tuple[np.ndarray, float]:
    """One bootstrapped step: w' = w + eta * (y - p) * [x; 1]."""
    step = eta * (float(y) - p)
    new_w = weights + step * x
    new_b = bias + step if use_bias else bias
    return new_w, new_b


def sgd_update_raw(weights_raw: np.ndarray, bias_raw: int, x_raw: np.ndarray,
                   p_raw: int, y: int, eta_shift: int = DEFAULT_ETA_SHIFT,
                   use_bias: bool = True) -> Tuple[np.ndarray, int]:
    """Fixed-point step: the learning rate is a right shift of the wide product."""
    diff = (fp.ONE if y else 0) - int(p_raw)
    new_w = weights_raw.copy()
    for k in range(len(weights_raw)):
        delta = fp.sat(fp.round_shift((diff * int(x_raw[k])) >> eta_shift, fp.FRAC_BITS))
        new_w[k] = fp.add(int(weights_raw[k]), delta)
    if use_bias:
        delta = fp.sat(fp.round_shift((diff * fp.ONE) >> eta_shift, fp.FRAC_BITS))
        new_b = fp.add(int(bias_raw), delta)
    else:
        new_b = int(bias_raw)
    return new_w, new_b


class GatingState:
    """The two consecutive-confidence shift registers plus sample buffer.

    The seizure register holds WS bits, the non-seizure register 10 * WS.
    Each step shifts a 1 into at most one register (and a 0 into the
    other); a low-confidence sample shifts 0 into both, or clears both
    outright when ``reset_on_low`` is set (trigger timing is identical
    either way, only the stored bit pattern differs).
    """

    def __init__(self, hp: Hyperparams, reset_on_low: bool = False):
        self.hp = hp
        self.reset_on_low = reset_on_low
        self._seiz_mask = (1 << hp.ws) - 1
        self._nonseiz_mask = (1 << hp.ws_nonseizure) - 1
        self.seiz_reg = 0
        self.nonseiz_reg = 0
        self.buffer: deque = deque(maxlen=hp.ws_nonseizure)

    def reset_registers(self) -> None:
        self.seiz_reg = 0
        self.nonseiz_reg = 0
        self.buffer.clear()

    @property
    def seiz_all_ones(self) -> bool:
        return self.seiz_reg == self._seiz_mask

    @property
    def nonseiz_all_ones(self) -> bool:
        return self.nonseiz_reg == self._nonseiz_mask

    def observe(self, symbol: int, sample=None) -> int:
        """Shift one gate outcome in; return +1/-1 when a retrain fires, else 0.

        ``sample`` is the (features, p) pair buffered for window-mode updates.
        """
        if symbol == GATE_LOW and self.reset_on_low:
            self.seiz_reg = 0
            self.nonseiz_reg = 0
        else:
            s_bit = 1 if symbol == GATE_SEIZURE else 0
            n_bit = 1 if symbol == GATE_NONSEIZURE else 0
            self.seiz_reg = ((self.seiz_reg << 1) | s_bit) & self._seiz_mask
            self.nonseiz_reg = ((self.nonseiz_reg << 1) | n_bit) & self._nonseiz_mask
        if symbol != GATE_LOW and sample is not None:
            self.buffer.append(sample)
        if self.seiz_all_ones:
            return 1
        if self.nonseiz_all_ones:
            return -1
        return 0


class OnlineClassifier:
    """Single-stream online classifier; call :meth:`step` once per sample.

    Works on its own copy of the model weights, so the model object passed
    in is never mutated.  ``update_mode`` selects between one SGD step on
    the triggering sample ('single', the hardware behaviour) and one step
    per buffered high-confidence sample ('window').
    """

    def __init__(self, model: DetectorModel, hp: Optional[Hyperparams] = None,
                 update_mode: str = "single", hw_faithful: bool = True,
                 reset_on_low: bool = False):
        if update_mode not in ("single", "window"):
            raise ValueError(f"unknown update_mode {update_mode!r}")
        self.model = model
        self.hp = hp if hp is not None else (model.hyperparams or Hyperparams())
        self.update_mode = update_mode
        self.hw_faithful = hw_faithful
        self.fixed = model.mode == "fixed"
        self.gating = GatingState(self.hp, reset_on_low=reset_on_low)
        self.weights = model.weights.copy()
        self.bias = float(model.bias)
        self.weights_raw = model.weights_raw.copy()
        self.bias_raw = int(model.bias_raw)
        if self.fixed:
            self._ct_hi = fp.from_real(self.hp.ct)
            self._ct_lo = fp.from_real(1.0 - self.hp.ct)
        self.retrain_count = 0
        self._skip_pending = False
        self._last = Prediction(z=0.0, p=0.5, label=1)
        self._scratch = model.clone()   # carries mutable weights for classify()

    def _classify(self, x) -> Prediction:
        m = self._scratch
        m.weights = self.weights
        m.bias = self.bias
        m.weights_raw = self.weights_raw
        m.bias_raw = self.bias_raw
        return classify(m, x)

    def _apply_updates(self, x, p_value, y: int) -> None:
        window = self.hp.ws if y == 1 else self.hp.ws_nonseizure
        if self.update_mode == "single":
            batch = [(x, p_value)]
        else:
            buffered = list(self.gating.buffer)[-window:]
            batch = buffered if buffered else [(x, p_value)]
        for bx, bp in batch:
            if self.fixed:
                self.weights_raw, self.bias_raw = sgd_update_raw(
                    self.weights_raw, self.bias_raw, bx, bp, y,
                    self.hp.eta_shift, self.model.use_bias)
            else:
                self.weights, self.bias = sgd_update(
                    self.weights, self.bias, bx, bp, y,
                    self.hp.eta, self.model.use_bias)

    def step(self, x) -> Prediction:
        """Advance by one feature vector and return the emitted prediction."""
        if self._skip_pending:
            self._skip_pending = False
            out = Prediction(z=self._last.z, p=self._last.p, label=self._last.label,
                             skipped=True)
            return out
        pred = self._classify(x)
        if self.fixed:
            p_value = fp.from_real(pred.p)   # raw LUT output drives gating/updates
            symbol = gate_raw(p_value, self._ct_hi, self._ct_lo)
        else:
            p_value = pred.p
            symbol = gate(pred.p, self.hp.ct)
        trigger = self.gating.observe(symbol, sample=(x, p_value))
        if trigger != 0:
            y = 1 if trigger > 0 else 0
            self._apply_updates(x, p_value, y)
            self.gating.reset_registers()
            self.retrain_count += 1
            pred.retrained = True
            if self.hw_faithful:
                self._skip_pending = True
        self._last = pred
        return pred
