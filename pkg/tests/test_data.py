import struct

import numpy as np
import pytest

import seizlearn as sl
from seizlearn import fixedpoint as fp
from seizlearn.data import (EEGRecord, SynthConfig, load_model, read_annotations,
                            read_csv, read_edf, save_model, synth_generate,
                            write_annotations, write_csv)
from seizlearn.pipeline import compute_features, run_static


class TestRecordValidation:
    def test_rejects_overlapping_annotations(self):
        with pytest.raises(ValueError):
            EEGRecord(fs=10.0, data=np.zeros((1, 100), dtype=np.int16),
                      annotations=[(1.0, 5.0), (4.0, 6.0)])

    def test_rejects_annotation_past_record_end(self):
        with pytest.raises(ValueError):
            EEGRecord(fs=10.0, data=np.zeros((1, 100), dtype=np.int16),
                      annotations=[(1.0, 50.0)])

    def test_rejects_out_of_range_samples(self):
        with pytest.raises(ValueError):
            EEGRecord(fs=10.0, data=np.full((1, 10), 40000))

    def test_slice_shifts_and_clips_annotations(self):
        rec = EEGRecord(fs=10.0, data=np.zeros((1, 200), dtype=np.int16),
                        annotations=[(2.0, 5.0), (12.0, 15.0)])
        sub = rec.slice_samples(40, 140)
        assert sub.annotations == [(0.0, 1.0), (8.0, 10.0)]

    def test_sample_labels(self):
        rec = EEGRecord(fs=10.0, data=np.zeros((1, 100), dtype=np.int16),
                        annotations=[(2.0, 4.0)])
        labels = rec.sample_labels()
        assert labels[19] == 0 and labels[20] == 1 and labels[39] == 1 and labels[40] == 0


class TestCsv:
    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        rec = EEGRecord(fs=256.0, data=rng.integers(-3000, 3000, (3, 500)).astype(np.int16))
        path = tmp_path / "rec.csv"
        write_csv(path, rec)
        back = read_csv(path)
        assert back.fs == rec.fs
        assert back.channel_names == rec.channel_names
        assert np.array_equal(back.data, rec.data)

    def test_three_row_handwritten_csv(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("t,ch0,ch1\n0.0,1,-2\n0.5,3,4\n1.0,5,6\n")
        rec = read_csv(path)
        assert rec.fs == 2.0
        assert rec.n_samples == 3
        assert rec.data[:, 2].tolist() == [5, 6]

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("t,ch0,ch1\n0.0,1,2\n0.5,3\n")
        with pytest.raises(ValueError, match="ragged"):
            read_csv(path)

    def test_non_monotone_time_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,ch0\n0.0,1\n0.2,2\n0.1,3\n")
        with pytest.raises(ValueError):
            read_csv(path)

    def test_irregular_spacing_rejected(self, tmp_path):
        path = tmp_path / "jitter.csv"
        path.write_text("t,ch0\n0.0,1\n0.1,2\n0.35,3\n")
        with pytest.raises(ValueError):
            read_csv(path)

    def test_non_integer_samples_rejected(self, tmp_path):
        path = tmp_path / "frac.csv"
        path.write_text("t,ch0\n0.0,1.25\n0.1,2\n")
        with pytest.raises(ValueError):
            read_csv(path)


class TestAnnotations:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "ann.csv"
        intervals = [(1.5, 2.25), (10.0, 11.0)]
        write_annotations(path, intervals)
        assert read_annotations(path) == intervals

    def test_overlap_rejected(self, tmp_path):
        path = tmp_path / "ann.csv"
        path.write_text("1.0,5.0\n4.0,6.0\n")
        with pytest.raises(ValueError):
            read_annotations(path)

    def test_inverted_interval_rejected(self, tmp_path):
        path = tmp_path / "ann.csv"
        path.write_text("5.0,1.0\n")
        with pytest.raises(ValueError):
            read_annotations(path)

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "ann.csv"
        path.write_text("# header comment\n\n1.0,2.0  # trailing\n")
        assert read_annotations(path) == [(1.0, 2.0)]


def build_edf(path, signals, fs=32, record_dur=1.0, n_records=4, reserved=""):
    """Independent minimal EDF writer used as the read_edf oracle.

    signals: list of (label, phys_min, phys_max, dig_min, dig_max, samples).
    """
    ns = len(signals)

    def pad(value, width):
        s = str(value)
        return s[:width].ljust(width).encode("ascii")

    header = b"".join([
        pad(0, 8), pad("test patient", 80), pad("test recording", 80),
        pad("01.01.20", 8), pad("00.00.00", 8), pad(256 + ns * 256, 8),
        pad(reserved, 44), pad(n_records, 8), pad(record_dur, 8), pad(ns, 4),
    ])
    fields = [
        b"".join(pad(s[0], 16) for s in signals),
        b"".join(pad("transducer", 80) for _ in signals),
        b"".join(pad("uV", 8) for _ in signals),
        b"".join(pad(s[1], 8) for s in signals),
        b"".join(pad(s[2], 8) for s in signals),
        b"".join(pad(s[3], 8) for s in signals),
        b"".join(pad(s[4], 8) for s in signals),
        b"".join(pad("none", 80) for _ in signals),
        b"".join(pad(int(fs * record_dur), 8) for _ in signals),
        b"".join(pad("", 32) for _ in signals),
    ]
    payload = b""
    npr = int(fs * record_dur)
    for r in range(n_records):
        for _, _, _, _, _, samples in signals:
            chunk = samples[r * npr:(r + 1) * npr]
            payload += struct.pack(f"<{npr}h", *chunk)
    path.write_bytes(header + b"".join(fields) + payload)


class TestEdf:
    def test_known_samples_recovered(self, tmp_path):
        fs, n = 32, 128
        ramp = np.round(100 * np.sin(2 * np.pi * 4 * np.arange(n) / fs)).astype(int)
        path = tmp_path / "mini.edf"
        build_edf(path, [("EEG C3", -200, 200, -2048, 2047, ramp.tolist())], fs=fs)
        rec = read_edf(path)
        assert rec.fs == fs
        assert rec.n_channels == 1
        assert rec.n_samples == n
        # calibration then requantization: full physical scale -> int16 rails
        phys = (ramp - (-2048)) * (400 / 4095) + (-200)
        expected = fp.from_real_array(phys / (200 / fp.RAW_MAX) / fp.ONE)
        assert np.array_equal(rec.data[0].astype(np.int64), expected)

    def test_header_fields_respected(self, tmp_path):
        fs, n = 16, 64
        a = list(range(n))
        b = list(range(0, -n, -1))
        path = tmp_path / "two.edf"
        build_edf(path, [("sig a", -100, 100, -1000, 1000, a),
                         ("sig b", -100, 100, -1000, 1000, b)], fs=fs)
        rec = read_edf(path)
        assert rec.n_channels == 2
        assert rec.channel_names == ["sig a", "sig b"]
        sel = read_edf(path, channels=["sig b"])
        assert sel.n_channels == 1 and sel.channel_names == ["sig b"]

    def test_discontinuous_edf_rejected(self, tmp_path):
        path = tmp_path / "disc.edf"
        build_edf(path, [("x", -10, 10, -100, 100, [0] * 128)], reserved="EDF+D")
        with pytest.raises(ValueError, match="EDF\\+D"):
            read_edf(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "trunc.edf"
        path.write_bytes(b"0" * 100)
        with pytest.raises(ValueError):
            read_edf(path)

    def test_mixed_rates_rejected(self, tmp_path):
        fs, n = 16, 64
        path = tmp_path / "mixed.edf"
        # second signal advertises twice the samples per record
        ns = 2

        def pad(value, width):
            return str(value)[:width].ljust(width).encode()

        header = b"".join([pad(0, 8), pad("p", 80), pad("r", 80), pad("01.01.20", 8),
                           pad("00.00.00", 8), pad(256 + ns * 256, 8), pad("", 44),
                           pad(2, 8), pad(1.0, 8), pad(ns, 4)])
        fields = [b"".join(pad(v, w) for v in vals) for vals, w in (
            (["a", "b"], 16), (["t", "t"], 80), (["uV", "uV"], 8),
            ([-10, -10], 8), ([10, 10], 8), ([-100, -100], 8), ([100, 100], 8),
            (["", ""], 80), ([16, 32], 8), (["", ""], 32))]
        payload = struct.pack("<16h", *range(16)) + struct.pack("<32h", *range(32))
        path.write_bytes(header + b"".join(fields) + payload * 2)
        with pytest.raises(ValueError, match="mixed sampling"):
            read_edf(path)


class TestSynth:
    def test_same_seed_is_identical(self):
        cfg = SynthConfig(duration_s=240.0, channels=2, seed=5)
        a = synth_generate(cfg)
        b = synth_generate(cfg)
        assert np.array_equal(a.data, b.data)
        assert a.annotations == b.annotations

    def test_different_seed_differs(self):
        a = synth_generate(SynthConfig(duration_s=240.0, channels=2, seed=5))
        b = synth_generate(SynthConfig(duration_s=240.0, channels=2, seed=6))
        assert not np.array_equal(a.data, b.data)

    def test_zero_rate_gives_no_annotations(self):
        rec = synth_generate(SynthConfig(duration_s=120.0, seizure_rate_per_hour=0.0))
        assert rec.annotations == []

    def test_burst_rms_constant_without_drift(self):
        # measure the seizure component alone: same seed with zero background
        cfg = SynthConfig(duration_s=1800.0, channels=4, drift=False,
                          background_amp=1e-9, seed=8)
        rec = synth_generate(cfg)
        assert len(rec.annotations) >= 8
        x = rec.to_float()
        rms = []
        for onset, offset in rec.annotations:
            i0, i1 = int(onset * rec.fs), int(offset * rec.fs)
            rms.append(np.sqrt(np.mean(x[:, i0:i1] ** 2)))
        rms = np.array(rms)
        assert rms.max() / rms.min() - 1.0 < 0.01

    def test_drift_fades_burst_amplitude(self):
        cfg = SynthConfig(duration_s=3600.0, channels=2, background_amp=1e-9, seed=9)
        rec = synth_generate(cfg)
        x = rec.to_float()
        first_on, first_off = rec.annotations[0]
        last_on, last_off = rec.annotations[-1]
        rms_first = np.sqrt(np.mean(x[:, int(first_on * rec.fs):int(first_off * rec.fs)] ** 2))
        rms_last = np.sqrt(np.mean(x[:, int(last_on * rec.fs):int(last_off * rec.fs)] ** 2))
        assert rms_last < 0.5 * rms_first

    def test_annotations_are_sorted_and_disjoint(self):
        rec = synth_generate(SynthConfig(duration_s=3600.0, seed=10))
        for (a0, a1), (b0, b1) in zip(rec.annotations, rec.annotations[1:]):
            assert a1 <= b0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(seizure_amp=0.5, background_amp=1.0)
        with pytest.raises(ValueError):
            SynthConfig(seizure_amp_jitter=1.5)


class TestModelPersistence:
    def test_round_trip_classifies_identically(self, trained_model, small_record,
                                               tmp_path):
        path = tmp_path / "model.json"
        for mode in ("float", "fixed"):
            model = trained_model.clone()
            model.mode = mode
            save_model(model, path)
            back = load_model(path)
            probe = small_record.slice_samples(0, 2000)
            feats_a = compute_features(model, probe)
            feats_b = compute_features(back, probe)
            assert np.array_equal(feats_a, feats_b)
            res_a = run_static(model, feats_a)
            res_b = run_static(back, feats_b)
            if mode == "fixed":
                assert np.array_equal(res_a.z_raw, res_b.z_raw)
            else:
                assert np.array_equal(res_a.z, res_b.z)   # json floats round-trip
            assert np.array_equal(res_a.label, res_b.label)

    def test_hyperparams_and_provenance_survive(self, trained_model, tmp_path):
        model = trained_model.clone()
        model.hyperparams = sl.Hyperparams(ct=0.7, ws=5)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.hyperparams == sl.Hyperparams(ct=0.7, ws=5)
        assert back.provenance == model.provenance
        assert np.array_equal(back.scaling.shifts, model.scaling.shifts)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "nope.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(ValueError):
            load_model(path)
