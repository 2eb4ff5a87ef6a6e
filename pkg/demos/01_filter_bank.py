#!/usr/bin/env python3
"""Walk through the shipped bandpass filter banks.

Shows the alpha/beta/gamma elliptic cascades at both supported sampling
rates, verifies the >=20 dB stopband requirement, and demonstrates that the
reference coefficients already live on the Q6.10 grid (so the fixed-point
backend runs exactly the same numbers as the float one).
"""

import os

import numpy as np

import seizlearn as sl
from seizlearn.dsp import BAND_EDGES_HZ, frequency_response

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

for fs in (1000.0, 256.0):
    bank = sl.default_filter_bank(fs)
    print(f"\n=== filter bank @ fs = {fs:g} Hz ===")
    report = sl.verify_filter_bank(bank, fs)
    print(report.summary())

    # response curves, plot-ready
    freqs = np.linspace(0.5, fs / 2 - 0.5, 800)
    curves = {band: frequency_response(design.sections, freqs, fs)
              for band, design in bank.items()}
    path = os.path.join(OUT, f"response_fs{fs:g}.csv")
    with open(path, "w") as f:
        f.write("freq_hz," + ",".join(curves) + "\n")
        for i, fr in enumerate(freqs):
            f.write(f"{fr:.3f}," + ",".join(f"{curves[b][i]:.3f}" for b in curves) + "\n")
    print(f"wrote {path}")

    # spot checks at interesting frequencies
    for band, design in bank.items():
        lo, hi = BAND_EDGES_HZ[band]
        center = np.sqrt(lo * hi)
        vals = frequency_response(design.sections, [center, 2.0, 50.0], fs)
        print(f"  {band:5s}: center {center:5.1f} Hz -> {vals[0]:+6.2f} dB, "
              f"2 Hz -> {vals[1]:+7.1f} dB, 50 Hz -> {vals[2]:+7.1f} dB")

    # the coefficients are exactly representable in Q6.10
    design = bank["beta"]
    sec = design.sections[0]
    print(f"  beta section 1 raw Q6.10: {sec.raw()} "
          f"(quantization is a no-op: {sec.quantized() == sec})")

print("\nBoth banks pass; stopband attenuation holds after Q6.10 quantization.")
