"""Saturating 16-bit Q6.10 fixed-point arithmetic.

The hardware datapath stores every sample, feature and weight as a 16-bit
signed integer with 10 fractional bits (value = raw / 1024), covering
[-32.0, 32.0 - 2**-10] at a resolution of 2**-10.  All operations saturate
at the register limits; nothing wraps.

Multi-term sums (filter sections, feature windows, dot products) accumulate
products exactly at 2**-20 scale in a wide register and saturate only once,
when the result is narrowed back to Q6.10.  Rounding is half away from zero
throughout, except for the learning-rate shift which is a plain arithmetic
right shift, as in the silicon.

Raw values are plain Python ints here.  The block engine mirrors these
formulas on integer arrays (see seizlearn.pipeline / seizlearn._kernels);
tests assert bit-equality between the two.
"""

from __future__ import annotations

import math

import numpy as np

FRAC_BITS = 10
ONE = 1 << FRAC_BITS          # 1.0 in raw units
RAW_MIN = -(1 << 15)
RAW_MAX = (1 << 15) - 1
REAL_MIN = RAW_MIN / ONE      # -32.0
REAL_MAX = RAW_MAX / ONE      # 31.9990234375
RESOLUTION = 1.0 / ONE

ACC_FRAC_BITS = 20            # scale of products and wide accumulators


def sat(raw: int) -> int:
    """Clamp a raw value to the 16-bit register range."""
    if raw > RAW_MAX:
        return RAW_MAX
    if raw < RAW_MIN:
        return RAW_MIN
    return raw


def round_shift(v: int, k: int) -> int:
    """Divide a raw integer by 2**k, rounding half away from zero.

    Negative k scales up exactly (left shift).
    """
    if k <= 0:
        return v << -k
    half = 1 << (k - 1)
    if v >= 0:
        return (v + half) >> k
    return -((-v + half) >> k)


def from_real(x: float) -> int:
    """Quantize a real number to the nearest Q6.10 raw value.

    Ties round half away from zero; out-of-range inputs saturate.
    """
    if math.isnan(x):
        raise ValueError("cannot quantize NaN to Q6.10")
    if math.isinf(x):
        return RAW_MAX if x > 0 else RAW_MIN
    if x >= 0:
        raw = int(math.floor(x * ONE + 0.5))
    else:
        raw = -int(math.floor(-x * ONE + 0.5))
    return sat(raw)


def to_real(raw: int) -> float:
    return raw / ONE


def add(a: int, b: int) -> int:
    return sat(a + b)


def sub(a: int, b: int) -> int:
    return sat(a - b)


def mul(a: int, b: int) -> int:
    """Multiply two raws: exact 32-bit product, round to Q6.10, saturate."""
    return sat(round_shift(a * b, ACC_FRAC_BITS - FRAC_BITS))


def shr(a: int, k: int) -> int:
    """Arithmetic right shift of the raw register (truncates toward -inf)."""
    if not 0 <= k <= 15:
        raise ValueError(f"shift count {k} outside [0, 15]")
    return a >> k


def acc_product(a: int, b: int) -> int:
    """Exact product of two Q6.10 raws at accumulator (2**-20) scale."""
    return a * b


def acc_narrow(acc: int, extra_shift: int = 0) -> int:
    """Round a wide accumulator down to a Q6.10 raw, saturating.

    ``extra_shift`` applies an additional power-of-two scaling of
    2**-extra_shift (negative values scale up); feature scaling uses it.
    """
    return sat(round_shift(acc, ACC_FRAC_BITS - FRAC_BITS + extra_shift))


def from_real_array(x) -> np.ndarray:
    """Vectorized :func:`from_real`; returns int64 raws."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)):
        raise ValueError("cannot quantize NaN to Q6.10")
    raw = np.where(x >= 0,
                   np.floor(x * ONE + 0.5),
                   -np.floor(-x * ONE + 0.5))
    return np.clip(raw, RAW_MIN, RAW_MAX).astype(np.int64)
