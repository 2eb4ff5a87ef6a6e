#!/usr/bin/env python3
"""Offline design of the reference bandpass banks shipped in seizlearn.dsp.

Designs sixth-order elliptic bandpass filters (3 second-order sections) for
the alpha/beta/gamma EEG bands, then searches the Q6.10 quantization
neighborhood of each section's denominator for the flattest stable passband
that keeps the stopband at or below -20 dB.  The chosen coefficients are
already on the Q6.10 grid, so the fixed-point backend runs the exact same
numbers as the float reference.

Run manually when adding a new sampling rate; paste the emitted table into
src/seizlearn/dsp.py.  Requires scipy (a dev-only dependency).
"""

import itertools

import numpy as np
from scipy import signal

Q = 1024.0
BANDS = {"alpha": (8.0, 16.0), "beta": (16.0, 32.0), "gamma": (32.0, 96.0)}
DC_MARGIN_HZ = 0.05
TOPK = 400


def response_db(sos, f, fs):
    z = np.exp(2j * np.pi * np.asarray(f, dtype=float) / fs)
    h = np.ones_like(z, dtype=complex)
    for b0, b1, b2, _, a1, a2 in sos:
        h *= (b0 + b1 / z + b2 / z**2) / (1.0 + a1 / z + a2 / z**2)
    return 20 * np.log10(np.maximum(np.abs(h), 1e-300))


def stable(sos):
    return all(np.all(np.abs(np.roots([1.0, a1, a2])) < 1 - 1e-9) for *_, a1, a2 in sos)


def freq_grids(lo, hi, fs):
    nyq = fs / 2
    sb_lo, sb_hi = 0.5 * lo, min(1.5 * hi, 0.98 * nyq)
    pass_f = np.linspace(lo, hi, 300)
    stop_f = np.concatenate([
        np.linspace(DC_MARGIN_HZ, sb_lo, 120),
        np.linspace(sb_hi, 0.999 * nyq, 150),
    ])
    return pass_f, stop_f


def quantize_search(sos0, lo, hi, fs):
    pass_f, stop_f = freq_grids(lo, hi, fs)
    f = np.concatenate([pass_f, stop_f])
    z = np.exp(2j * np.pi * f / fs)
    npass = len(pass_f)

    # candidate (a1, a2) grid per section: floor-1 .. floor+2 on the Q6.10 grid
    sec_resp, sec_ok, sec_a = [], [], []
    for s in sos0:
        num = s[0] + s[1] / z + s[2] / z**2
        cands = [((np.floor(s[4] * Q) + i) / Q, (np.floor(s[5] * Q) + j) / Q)
                 for i in range(-1, 3) for j in range(-1, 3)]
        resp = np.empty((len(cands), len(f)), dtype=complex)
        ok = np.empty(len(cands), dtype=bool)
        for c, (a1, a2) in enumerate(cands):
            resp[c] = num / (1.0 + a1 / z + a2 / z**2)
            ok[c] = np.all(np.abs(np.roots([1.0, a1, a2])) < 1 - 1e-9)
        sec_resp.append(resp)
        sec_ok.append(ok)
        sec_a.append(cands)

    # combined |H| in dB for every candidate combo, scale-invariant scoring
    h = np.einsum("af,bf,cf->abcf", sec_resp[0], sec_resp[1], sec_resp[2])
    mag = 20 * np.log10(np.maximum(np.abs(h), 1e-300))
    pb, sb = mag[..., :npass], mag[..., npass:]
    pb_mid = np.median(pb, axis=-1)
    flat = np.maximum(pb.max(axis=-1) - pb_mid, pb_mid - pb.min(axis=-1))
    rel_sb = sb.max(axis=-1) - pb_mid
    valid = (sec_ok[0][:, None, None] & sec_ok[1][None, :, None]
             & sec_ok[2][None, None, :] & (rel_sb <= -21.0))
    score = np.where(valid, flat, np.inf)
    order = np.argsort(score, axis=None)[:TOPK]

    best = None
    for idx in order:
        if not np.isfinite(score.flat[idx]):
            break
        i1, i2, i3 = np.unravel_index(idx, score.shape)
        cand = sos0.copy()
        for sec, ci in zip(range(3), (i1, i2, i3)):
            cand[sec, 4], cand[sec, 5] = sec_a[sec][ci]
        probe = [np.sqrt(lo * hi), lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)]
        gain = 10 ** (response_db(cand, probe, fs).mean() / 20)
        for trim in (0.96, 0.98, 1.0, 1.02, 1.04):
            c2 = cand.copy()
            c2[:, :3] *= (trim / gain) ** (1 / 3)
            c2[:, :3] = np.sign(c2[:, :3]) * np.floor(np.abs(c2[:, :3]) * Q + 0.5) / Q
            sbv = response_db(c2, stop_f, fs)
            if sbv.max() > -20.0 or not stable(c2):
                continue
            pbv = response_db(c2, pass_f, fs)
            ripple = max(abs(pbv.max()), abs(pbv.min()))
            if best is None or ripple < best[0]:
                best = (ripple, c2.copy(), sbv.max())
    return best


def design_band(fs, lo, hi):
    nyq = fs / 2
    best = None
    for rp, widen_frac in itertools.product((0.5, 1.0), (0.0, 0.05, 0.10)):
        widen = widen_frac * (hi - lo)
        wlo = max(lo - widen, 0.5) / nyq
        whi = min(hi + widen, 0.985 * nyq) / nyq
        sos0 = signal.ellip(3, rp, 30.0, [wlo, whi], "bandpass", output="sos")
        gains = np.array([np.max(np.abs(s[:3])) for s in sos0])
        target = np.prod(gains) ** (1 / 3)
        for i in range(3):
            sos0[i, :3] *= target / gains[i]
        cand = quantize_search(sos0, lo, hi, fs)
        if cand is not None and (best is None or cand[0] < best[0]):
            best = cand
    return best


def main():
    for fs in (1000.0, 256.0):
        print(f"# fs = {fs:g}")
        for name, (lo, hi) in BANDS.items():
            ripple, sos, sbmax = design_band(fs, lo, hi)
            raw = np.rint(sos * Q).astype(int)
            rows = ",\n            ".join(
                f"({r[0]}, {r[1]}, {r[2]}, {r[4]}, {r[5]})" for r in raw)
            decl = np.ceil(ripple * 10) / 10 + 0.1
            print(f'        "{name}": BandDesign(\n            edges=({lo:g}, {hi:g}),\n            ripple_db={decl:.1f},\n            sections_raw=(\n            {rows},\n        )),')
            print(f"        # measured: ripple {ripple:.2f} dB, worst stopband {sbmax:.1f} dB")
    print("# raw integers are Q6.10 (value = raw / 1024); tuple order b0,b1,b2,a1,a2")


if __name__ == "__main__":
    main()
