import numpy as np
import pytest

import seizlearn as sl
from seizlearn import pipeline


@pytest.fixture(scope="session")
def small_record():
    """Short 4-channel record with a handful of strong events (no drift)."""
    cfg = sl.SynthConfig(duration_s=300.0, fs=256.0, channels=4,
                         seizure_rate_per_hour=48.0, seizure_duration_s=(8.0, 12.0),
                         drift=False, seed=11)
    return sl.synth_generate(cfg)


@pytest.fixture(scope="session")
def trained(small_record):
    """(model, (train, val, test)) fitted on the small record."""
    model, segments = sl.train_model(small_record)
    return model, segments


@pytest.fixture(scope="session")
def trained_model(trained):
    return trained[0]


@pytest.fixture(scope="session")
def test_features(trained, small_record):
    model, (_tr, _va, te) = trained
    return pipeline.compute_features(model, te), te


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(small_record):
    """Compile the jitted kernels once so per-test timings stay honest."""
    if not pipeline.HAVE_KERNELS:
        return
    model = sl.DetectorModel(
        channels=small_record.n_channels, fs=small_record.fs,
        designs=sl.default_filter_bank(small_record.fs),
        scaling=sl.FeatureScaling.identity(small_record.n_channels),
        weights=np.zeros(small_record.n_channels * 4))
    stub = small_record.slice_samples(0, 512)
    for mode in ("float", "fixed"):
        m = model.clone()
        m.mode = mode
        feats = pipeline.compute_features(m, stub)
        pipeline.run_online(m, feats, hp=sl.Hyperparams(ct=0.8, ws=2))
