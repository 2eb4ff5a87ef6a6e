#!/usr/bin/env python3
"""The hardware-faithful backend next to the float reference.

Covers the pieces the fixed-point path changes: Q6.10 arithmetic, the
10-entry logistic look-up table, shift-based learning rate, and the
one-sample retrain stall -- then measures label agreement and throughput.
"""

import time

import numpy as np

import seizlearn as sl
from seizlearn import fixedpoint as fp
from seizlearn import pipeline
from seizlearn.classifier import build_lut, logistic_exact

# --- Q6.10 scalars ---------------------------------------------------------
print("Q6.10: 1.0 ->", fp.from_real(1.0), "raw;",
      "range", (fp.REAL_MIN, round(fp.REAL_MAX, 6)), "resolution", fp.RESOLUTION)
print("saturating add: 31.0 + 5.0 ->", fp.to_real(fp.add(fp.from_real(31.0),
                                                         fp.from_real(5.0))))
print("learning rate is a shift: 1.0 >> 6 ->", fp.to_real(fp.shr(fp.ONE, 6)))

# --- the 10-entry logistic table -------------------------------------------
lut = build_lut()
z = np.linspace(-8, 8, 20001)
err = np.abs(lut.eval(z) - logistic_exact(z))
print(f"\nlogistic LUT: 10 entries over [-6, 6], max |error| {err.max():.4f} "
      f"(worst at z = {z[np.argmax(err)]:+.2f})")
print("breakpoint outputs (raw):", lut.p_raw.tolist())

# --- end-to-end agreement on a synthetic stream ----------------------------
record = sl.synth_generate(sl.SynthConfig(duration_s=900.0, seed=33))
model, (_tr, _va, test_seg) = sl.train_model(record,
                                             config=sl.TrainConfig(use_bias=False))
res = {}
for mode in ("float", "fixed"):
    m = model.clone()
    m.mode = mode
    feats = pipeline.compute_features(m, test_seg)
    res[mode] = pipeline.run_static(m, feats)
agree = np.mean(res["float"].label == res["fixed"].label)
dis = res["float"].label != res["fixed"].label
print(f"\nstatic label agreement fixed vs float: {agree * 100:.3f}% "
      f"({int(dis.sum())} disagreements"
      + (f", all at |z| <= {np.abs(res['float'].z[dis]).max():.3f})" if dis.any()
         else ")"))

# --- throughput of the fixed pipeline ---------------------------------------
rec1k = sl.synth_generate(sl.SynthConfig(duration_s=60.0, fs=1000.0,
                                         seizure_rate_per_hour=60.0,
                                         seizure_duration_s=(5.0, 8.0), seed=13))
m1k = model.clone()
m1k.mode = "fixed"
m1k.fs = 1000.0
m1k.designs = sl.default_filter_bank(1000.0)
hp = sl.Hyperparams(ct=0.8, ws=10)
pipeline.run_online(m1k, pipeline.compute_features(
    m1k, rec1k.slice_samples(0, 2000)), hp=hp)          # warm the kernels
t0 = time.perf_counter()
feats = pipeline.compute_features(m1k, rec1k)
out = pipeline.run_online(m1k, feats, hp=hp)
dt = time.perf_counter() - t0
print(f"\nfixed pipeline, 8ch @ 1 kS/s: {rec1k.duration_s / dt:.0f}x real time "
      f"({dt * 1e6 / rec1k.n_samples:.2f} us/sample; "
      f"{'jitted kernels' if pipeline.HAVE_KERNELS else 'numpy fallback'})")
print(f"retrains: {out.retrain_count}, skipped samples: {int(out.skipped.sum())} "
      "(one input is consumed without classification per retrain cycle)")
