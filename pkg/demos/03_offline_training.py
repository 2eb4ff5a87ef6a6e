#!/usr/bin/env python3
"""The offline phase: causal split, balancing, L1 selection, tuning.

Trains a detector on the first 30% of a synthetic record (time order is
never violated), shows which features survive the L1 selection stage, and
sweeps the online-learning hyperparameters on the validation segment.
"""

import numpy as np

import seizlearn as sl

record = sl.synth_generate(sl.SynthConfig(duration_s=3600.0, seed=21))
print(f"record: {record.duration_s / 60:.0f} min, {len(record.annotations)} events")

model, (train_seg, val_seg, test_seg) = sl.train_model(record)
print(f"split: train {train_seg.duration_s:.0f}s ({len(train_seg.annotations)} ev) | "
      f"val {val_seg.duration_s:.0f}s ({len(val_seg.annotations)} ev) | "
      f"test {test_seg.duration_s:.0f}s ({len(test_seg.annotations)} ev)")
print(f"training used {model.provenance['train_samples_used']} balanced samples; "
      f"{model.provenance['survivors']}/{model.dim} weights survive L1")

kinds = ("line_length", "bp_alpha", "bp_beta", "bp_gamma")
by_kind = model.weights.reshape(model.channels, 4)
print("\nweight mass by feature kind (sum of |w| over channels):")
for k, kind in enumerate(kinds):
    bar = "#" * int(20 * np.abs(by_kind[:, k]).sum() / max(np.abs(by_kind).sum(), 1e-9))
    print(f"  {kind:12s} {np.abs(by_kind[:, k]).sum():6.2f} {bar}")
print(f"  bias         {model.bias:+.3f}")

print("\ntuning WS x CT on the validation segment (sensitivity/specificity):")
best, rows = sl.tune(model, val_seg, ws_grid=(1, 3, 5, 8, 10, 13, 15),
                     ct_grid=(0.6, 0.7, 0.8, 0.9))
cts = sorted({r.ct for r in rows})
print("  ws \\ ct " + "".join(f"{ct:^14}" for ct in cts))
for ws in sorted({r.ws for r in rows}):
    cells = []
    for ct in cts:
        r = next(r for r in rows if r.ws == ws and r.ct == ct)
        cells.append(f"{r.sensitivity:5.1f}/{r.specificity:5.1f}  ")
    print(f"  {ws:5d}   " + "".join(cells))
print(f"\nselected: CT={best.ct:g}, WS={best.ws} "
      f"(best sensitivity subject to specificity >= 95%)")

model.hyperparams = best
sl.save_model(model, "/tmp/seizlearn_demo_model.json")
print("model written to /tmp/seizlearn_demo_model.json")
