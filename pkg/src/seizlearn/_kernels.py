"""Jitted block kernels for the streaming pipeline.

Every kernel reproduces the corresponding per-sample reference path
bit-for-bit: integer kernels share the exact saturate/round formulas from
seizlearn.fixedpoint, float kernels use the same operation order as the
reference (left-to-right window sums, left-to-right dot products).
tests/test_pipeline.py asserts the equivalences.

This module requires numba; seizlearn.pipeline falls back to slower
numpy implementations when it is not importable.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

RAW_MIN = -(1 << 15)
RAW_MAX = (1 << 15) - 1
FRAC = 10
ONE = 1 << FRAC


@njit(cache=True, nogil=True)
def _sat(v):
    if v > RAW_MAX:
        return RAW_MAX
    if v < RAW_MIN:
        return RAW_MIN
    return v


@njit(cache=True, nogil=True)
def _round_shift(v, k):
    if k <= 0:
        return v << (-k)
    half = 1 << (k - 1)
    if v >= 0:
        return (v + half) >> k
    return -((-v + half) >> k)


@njit(cache=True, nogil=True)
def float_filter_features(x, sos, n, mult, out):
    """Float path: DF1 cascades + fresh left-to-right window sums.

    x: (C, T) float64 signal; sos: (3 bands, 3 sections, 5) float64;
    n: window length; mult: (4C,) per-feature power-of-two multipliers;
    out: (T, 4C) float64, written in place.
    """
    nch, t_len = x.shape
    nd = n - 1
    state = np.zeros((nch, 3, 3, 4), dtype=np.float64)   # x1 x2 y1 y2
    diffs = np.zeros((nch, nd), dtype=np.float64)
    sq = np.zeros((nch, 3, n), dtype=np.float64)
    prev = np.zeros(nch, dtype=np.float64)
    pos_d = 0
    pos_s = 0
    for t in range(t_len):
        for c in range(nch):
            v0 = x[c, t]
            d = abs(v0 - prev[c])
            prev[c] = v0
            diffs[c, pos_d] = d
            base = 4 * c
            acc = 0.0
            for i in range(nd):
                acc += diffs[c, (pos_d + 1 + i) % nd]
            out[t, base] = acc * mult[base]
            for b in range(3):
                v = v0
                for s in range(3):
                    b0 = sos[b, s, 0]
                    b1 = sos[b, s, 1]
                    b2 = sos[b, s, 2]
                    a1 = sos[b, s, 3]
                    a2 = sos[b, s, 4]
                    y = (b0 * v + b1 * state[c, b, s, 0] + b2 * state[c, b, s, 1]
                         - a1 * state[c, b, s, 2] - a2 * state[c, b, s, 3])
                    state[c, b, s, 1] = state[c, b, s, 0]
                    state[c, b, s, 0] = v
                    state[c, b, s, 3] = state[c, b, s, 2]
                    state[c, b, s, 2] = y
                    v = y
                sq[c, b, pos_s] = v * v
                acc = 0.0
                for i in range(n):
                    acc += sq[c, b, (pos_s + 1 + i) % n]
                out[t, base + 1 + b] = acc * mult[base + 1 + b]
        pos_d += 1
        if pos_d == nd:
            pos_d = 0
        pos_s += 1
        if pos_s == n:
            pos_s = 0


@njit(cache=True, nogil=True)
def fixed_filter_features(x, sos_raw, n, shifts, out):
    """Fixed path: Q6.10 DF1 cascades + exact incremental window accumulators.

    x: (C, T) int64 raw samples; sos_raw: (3, 3, 5) int64 Q6.10 raws;
    shifts: (4C,) int64 feature scaling shifts; out: (T, 4C) int64 raws.
    """
    nch, t_len = x.shape
    nd = n - 1
    state = np.zeros((nch, 3, 3, 4), dtype=np.int64)
    diffs = np.zeros((nch, nd), dtype=np.int64)
    sq = np.zeros((nch, 3, n), dtype=np.int64)
    prev = np.zeros(nch, dtype=np.int64)
    ll_acc = np.zeros(nch, dtype=np.int64)
    bp_acc = np.zeros((nch, 3), dtype=np.int64)
    pos_d = 0
    pos_s = 0
    for t in range(t_len):
        for c in range(nch):
            v0 = x[c, t]
            d = v0 - prev[c]
            if d < 0:
                d = -d
            prev[c] = v0
            ll_acc[c] += d - diffs[c, pos_d]
            diffs[c, pos_d] = d
            base = 4 * c
            out[t, base] = _sat(_round_shift(ll_acc[c], shifts[base]))
            for b in range(3):
                v = v0
                for s in range(3):
                    acc = (sos_raw[b, s, 0] * v
                           + sos_raw[b, s, 1] * state[c, b, s, 0]
                           + sos_raw[b, s, 2] * state[c, b, s, 1]
                           - sos_raw[b, s, 3] * state[c, b, s, 2]
                           - sos_raw[b, s, 4] * state[c, b, s, 3])
                    y = _sat(_round_shift(acc, FRAC))
                    state[c, b, s, 1] = state[c, b, s, 0]
                    state[c, b, s, 0] = v
                    state[c, b, s, 3] = state[c, b, s, 2]
                    state[c, b, s, 2] = y
                    v = y
                term = v * v
                bp_acc[c, b] += term - sq[c, b, pos_s]
                sq[c, b, pos_s] = term
                out[t, base + 1 + b] = _sat(_round_shift(bp_acc[c, b], FRAC + shifts[base + 1 + b]))
        pos_d += 1
        if pos_d == nd:
            pos_d = 0
        pos_s += 1
        if pos_s == n:
            pos_s = 0


@njit(cache=True, nogil=True)
def float_online(feats, w, bias, use_bias, ct, ws, eta, single_mode, hw_faithful,
                 z_out, p_out, label_out, retrained_out, skipped_out):
    """Sequential online loop, float backend.  Mutates w in place; returns
    (final_bias, retrain_count)."""
    t_len, dim = feats.shape
    ws_non = 10 * ws
    count_s = 0
    count_n = 0
    # ring buffer of high-confidence samples for window-mode updates
    buf_idx = np.empty(ws_non, dtype=np.int64)
    buf_p = np.empty(ws_non, dtype=np.float64)
    buf_len = 0
    buf_pos = 0
    retrains = 0
    skip_pending = False
    last_z = 0.0
    last_p = 0.5
    last_label = np.uint8(1)
    for t in range(t_len):
        if skip_pending:
            skip_pending = False
            z_out[t] = last_z
            p_out[t] = last_p
            label_out[t] = last_label
            retrained_out[t] = 0
            skipped_out[t] = 1
            continue
        z = 0.0
        for k in range(dim):
            z += w[k] * feats[t, k]
        if use_bias:
            z += bias
        if z >= 0.0:
            p = 1.0 / (1.0 + math.exp(-z))
            label = np.uint8(1)
        else:
            ez = math.exp(z)
            p = ez / (1.0 + ez)
            label = np.uint8(0)
        # gate + shift registers (consecutive-run counters)
        if p >= ct:
            count_s += 1
            count_n = 0
        elif p <= 1.0 - ct:
            count_n += 1
            count_s = 0
        else:
            count_s = 0
            count_n = 0
        if p >= ct or p <= 1.0 - ct:
            buf_idx[buf_pos] = t
            buf_p[buf_pos] = p
            buf_pos = (buf_pos + 1) % ws_non
            if buf_len < ws_non:
                buf_len += 1
        retrained = np.uint8(0)
        trigger = 0
        if count_s == ws:
            trigger = 1
        elif count_n == ws_non:
            trigger = -1
        if trigger != 0:
            y = 1.0 if trigger > 0 else 0.0
            if single_mode:
                step = eta * (y - p)
                for k in range(dim):
                    w[k] += step * feats[t, k]
                if use_bias:
                    bias += step
            else:
                window = ws if trigger > 0 else ws_non
                take = window if window < buf_len else buf_len
                for j in range(take):
                    slot = (buf_pos - take + j) % ws_non
                    bi = buf_idx[slot]
                    step = eta * (y - buf_p[slot])
                    for k in range(dim):
                        w[k] += step * feats[bi, k]
                    if use_bias:
                        bias += step
            count_s = 0
            count_n = 0
            buf_len = 0
            buf_pos = 0
            retrains += 1
            retrained = np.uint8(1)
            if hw_faithful:
                skip_pending = True
        z_out[t] = z
        p_out[t] = p
        label_out[t] = label
        retrained_out[t] = retrained
        skipped_out[t] = 0
        last_z = z
        last_p = p
        last_label = label
    return bias, retrains


@njit(cache=True, nogil=True)
def fixed_online(feats, w, bias, use_bias, ct_hi, ct_lo, ws, eta_shift,
                 lut_z, lut_p, single_mode, hw_faithful,
                 z_out, p_out, label_out, retrained_out, skipped_out):
    """Sequential online loop, Q6.10 backend.  Mutates w (int64 raws) in
    place; returns (final_bias_raw, retrain_count)."""
    t_len, dim = feats.shape
    ws_non = 10 * ws
    count_s = 0
    count_n = 0
    buf_idx = np.empty(ws_non, dtype=np.int64)
    buf_p = np.empty(ws_non, dtype=np.int64)
    buf_len = 0
    buf_pos = 0
    retrains = 0
    skip_pending = False
    last_z = 0
    last_p = ONE // 2
    last_label = np.uint8(1)
    nseg = len(lut_z) - 1
    for t in range(t_len):
        if skip_pending:
            skip_pending = False
            z_out[t] = last_z
            p_out[t] = last_p
            label_out[t] = last_label
            retrained_out[t] = 0
            skipped_out[t] = 1
            continue
        acc = 0
        for k in range(dim):
            acc += w[k] * feats[t, k]
        if use_bias:
            acc += bias * ONE
        z = _sat(_round_shift(acc, FRAC))
        # 10-entry LUT with 0/1 saturation outside the span
        if z < lut_z[0]:
            p = 0
        elif z > lut_z[nseg]:
            p = ONE
        else:
            p = lut_p[nseg]
            for i in range(nseg):
                if z <= lut_z[i + 1]:
                    tt = z - lut_z[i]
                    seg = lut_z[i + 1] - lut_z[i]
                    d = lut_p[i + 1] - lut_p[i]
                    p = lut_p[i] + (2 * tt * d + seg) // (2 * seg)
                    break
        label = np.uint8(1) if z >= 0 else np.uint8(0)
        if p >= ct_hi:
            count_s += 1
            count_n = 0
        elif p <= ct_lo:
            count_n += 1
            count_s = 0
        else:
            count_s = 0
            count_n = 0
        if p >= ct_hi or p <= ct_lo:
            buf_idx[buf_pos] = t
            buf_p[buf_pos] = p
            buf_pos = (buf_pos + 1) % ws_non
            if buf_len < ws_non:
                buf_len += 1
        retrained = np.uint8(0)
        trigger = 0
        if count_s == ws:
            trigger = 1
        elif count_n == ws_non:
            trigger = -1
        if trigger != 0:
            y_raw = ONE if trigger > 0 else 0
            if single_mode:
                diff = y_raw - p
                for k in range(dim):
                    delta = _sat(_round_shift((diff * feats[t, k]) >> eta_shift, FRAC))
                    w[k] = _sat(w[k] + delta)
                if use_bias:
                    delta = _sat(_round_shift((diff * ONE) >> eta_shift, FRAC))
                    bias = _sat(bias + delta)
            else:
                window = ws if trigger > 0 else ws_non
                take = window if window < buf_len else buf_len
                for j in range(take):
                    slot = (buf_pos - take + j) % ws_non
                    bi = buf_idx[slot]
                    diff = y_raw - buf_p[slot]
                    for k in range(dim):
                        delta = _sat(_round_shift((diff * feats[bi, k]) >> eta_shift, FRAC))
                        w[k] = _sat(w[k] + delta)
                    if use_bias:
                        delta = _sat(_round_shift((diff * ONE) >> eta_shift, FRAC))
                        bias = _sat(bias + delta)
            count_s = 0
            count_n = 0
            buf_len = 0
            buf_pos = 0
            retrains += 1
            retrained = np.uint8(1)
            if hw_faithful:
                skip_pending = True
        z_out[t] = z
        p_out[t] = p
        label_out[t] = label
        retrained_out[t] = retrained
        skipped_out[t] = 0
        last_z = z
        last_p = p
        last_label = label
    return bias, retrains
