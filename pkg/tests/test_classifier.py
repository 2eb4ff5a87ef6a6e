import numpy as np
import pytest

import seizlearn as sl
from seizlearn import fixedpoint as fp
from seizlearn.classifier import (DetectorModel, build_lut, classify, dot, dot_raw,
                                  logistic_exact)
from seizlearn.features import FeatureScaling


def toy_model(weights, bias=0.0, mode="float", channels=1, use_bias=True):
    return DetectorModel(channels=channels, fs=256.0,
                         designs=sl.default_filter_bank(256.0),
                         scaling=FeatureScaling.identity(channels),
                         weights=np.asarray(weights, dtype=float),
                         bias=bias, use_bias=use_bias, mode=mode)


def test_logistic_exact_examples():
    assert logistic_exact(0.0) == 0.5
    assert logistic_exact(40.0) >= 1.0 - 1e-17
    assert logistic_exact(-40.0) <= 1e-17


def test_logistic_symmetry():
    rng = np.random.default_rng(0)
    z = rng.uniform(-30, 30, size=2000)
    assert np.allclose(logistic_exact(-z), 1.0 - logistic_exact(z), atol=1e-15)


def test_lut_structure():
    lut = build_lut()
    assert len(lut.z) == 10
    assert np.all(np.diff(lut.p) >= 0)                      # monotone
    assert np.all(np.diff(lut.p_raw) >= 0)
    assert np.allclose(lut.p + lut.p[::-1], 1.0)            # symmetric outputs
    assert np.all(lut.p_raw + lut.p_raw[::-1] == fp.ONE)


def test_lut_midpoint_and_clamp():
    lut = build_lut()
    assert lut.eval(0.0) == pytest.approx(0.5, abs=1e-15)
    assert lut.eval(10.0) == 1.0
    assert lut.eval(-10.0) == 0.0
    assert lut.eval_raw(0) == fp.ONE // 2
    assert lut.eval_raw(fp.from_real(10.0)) == fp.ONE
    assert lut.eval_raw(fp.from_real(-10.0)) == 0


def test_lut_symmetry_float():
    lut = build_lut()
    z = np.linspace(-8, 8, 4001)
    assert np.allclose(lut.eval(-z), 1.0 - lut.eval(z), atol=1e-12)


def test_lut_symmetry_fixed_within_one_lsb():
    lut = build_lut()
    for z_raw in range(-7000, 7001, 3):
        a = lut.eval_raw(z_raw)
        b = lut.eval_raw(-z_raw)
        assert abs((a + b) - fp.ONE) <= 1


def test_lut_pointwise_error_bound():
    # dense sweep oracle: the 10-entry table stays within 0.05 of the exact
    # logistic over its span
    lut = build_lut()
    z = np.linspace(-6, 6, 200_001)
    err = np.abs(lut.eval(z) - logistic_exact(z))
    assert err.max() <= 0.05


def test_lut_raw_matches_float_lut():
    lut = build_lut()
    z_raw = np.arange(-7000, 7001, dtype=np.int64)
    raw_vals = lut.eval_raw_array(z_raw) / fp.ONE
    float_vals = lut.eval(z_raw / fp.ONE)
    assert np.abs(raw_vals - float_vals).max() <= 2.0 / fp.ONE


def test_lut_raw_array_matches_scalar():
    lut = build_lut()
    z_raw = np.arange(-7000, 7001, 7, dtype=np.int64)
    arr = lut.eval_raw_array(z_raw)
    for zr, pv in zip(z_raw, arr):
        assert lut.eval_raw(int(zr)) == int(pv)


def test_dot_examples():
    x = np.array([1.5, -2.0, 0.25])
    assert dot(np.zeros(3), 0.0, x) == 0.0
    assert dot(np.array([0.0, 1.0, 0.0]), 0.0, x) == -2.0
    with pytest.raises(ValueError):
        dot(np.zeros(2), 0.0, x)


def test_dot_matches_pairwise_sum_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        w = rng.standard_normal(33)
        x = rng.standard_normal(33)

        def pairwise(v):
            if len(v) == 1:
                return v[0]
            mid = len(v) // 2
            return pairwise(v[:mid]) + pairwise(v[mid:])

        expected = pairwise([wi * xi for wi, xi in zip(w, x)])
        assert dot(w, 0.0, x) == pytest.approx(expected, rel=1e-12)


def test_dot_raw_wide_accumulation():
    w = np.array([fp.from_real(2.0)] * 4, dtype=np.int64)
    x = np.array([fp.from_real(8.0)] * 4, dtype=np.int64)
    # exact sum 64 exceeds the Q6.10 rail only at the final narrowing
    assert dot_raw(w, 0, x, use_bias=False) == fp.RAW_MAX
    assert dot_raw(w[:1], fp.from_real(1.0), x[:1], use_bias=True) == fp.from_real(17.0)


def test_classify_zero_weights_gives_half_and_label_one():
    model = toy_model(np.zeros(4))
    pred = classify(model, np.zeros(4))
    assert pred.p == 0.5 and pred.z == 0.0 and pred.label == 1


def test_classify_separable_toy():
    # weights aligned with the class direction classify both prototypes
    model = toy_model([2.0, 0.0, 0.0, 0.0], bias=-1.0)
    hi = classify(model, np.array([4.0, 0, 0, 0]))
    lo = classify(model, np.array([0.1, 0, 0, 0]))
    assert hi.label == 1 and hi.p > 0.9
    assert lo.label == 0 and lo.p < 0.5


def test_monotonicity_in_positive_weight_coordinate():
    model = toy_model([1.5, -0.5, 0.2, 0.0], bias=0.1)
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 4, size=4)
    p0 = classify(model, x).p
    for bump in (0.5, 1.0, 2.0):
        x2 = x.copy()
        x2[0] += bump
        assert classify(model, x2).p >= p0


def test_label_is_sign_of_z_in_both_variants():
    flt = toy_model([1.0, 0, 0, 0])
    fxd = toy_model([1.0, 0, 0, 0], mode="fixed")
    for val in (-2.0, -0.25, -1.0 / fp.ONE, 0.0, 1.0 / fp.ONE, 0.25, 2.0):
        x = np.array([val, 0, 0, 0])
        x_raw = fp.from_real_array(x)
        pf = classify(flt, x)
        px = classify(fxd, x_raw)
        assert pf.label == (1 if pf.z >= 0 else 0)
        assert px.label == (1 if px.z >= 0 else 0)
        assert pf.label == px.label


def test_fixed_float_label_agreement_on_random_inputs():
    rng = np.random.default_rng(3)
    w = rng.uniform(-2, 2, size=8)
    flt = toy_model(w, bias=0.3, channels=2)
    fxd = toy_model(w, bias=0.3, channels=2, mode="fixed")
    agree = 0
    n = 4000
    for _ in range(n):
        x = rng.uniform(0, 8, size=8)
        if classify(flt, x).label == classify(fxd, fp.from_real_array(x)).label:
            agree += 1
    assert agree / n >= 0.99


def test_model_requires_matching_dimensions():
    with pytest.raises(ValueError):
        toy_model(np.zeros(7), channels=2)
    with pytest.raises(ValueError):
        DetectorModel(channels=1, fs=256.0, designs=sl.default_filter_bank(256.0),
                      scaling=FeatureScaling.identity(1), weights=np.zeros(4),
                      mode="ternary")


def test_weights_raw_derivation():
    model = toy_model([1.0, -0.5, 0.25, 31.999], bias=-1.0)
    assert model.weights_raw.tolist() == [1024, -512, 256, fp.from_real(31.999)]
    assert model.bias_raw == -1024
