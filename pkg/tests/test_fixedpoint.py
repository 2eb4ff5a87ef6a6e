import numpy as np
import pytest

from seizlearn import fixedpoint as fp


def test_scaling_examples():
    assert fp.from_real(1.0) == 1024
    assert fp.from_real(100.0) == 32767          # saturates at the positive rail
    assert fp.from_real(-0.0009765625) == -1     # exactly -2**-10
    assert fp.from_real(-100.0) == fp.RAW_MIN


def test_round_half_away_from_zero():
    assert fp.from_real(0.00048828125) == 1      # half of one LSB rounds up
    assert fp.from_real(-0.00048828125) == -1    # and away from zero going down
    assert fp.from_real(0.0004882) == 0


def test_from_real_rejects_nan():
    with pytest.raises(ValueError):
        fp.from_real(float("nan"))


def test_from_real_saturates_infinity():
    assert fp.from_real(float("inf")) == fp.RAW_MAX
    assert fp.from_real(float("-inf")) == fp.RAW_MIN


def test_round_trip_identity_exhaustive():
    # from_real(to_real(raw)) == raw for every representable register value
    raws = np.arange(fp.RAW_MIN, fp.RAW_MAX + 1, dtype=np.int64)
    back = fp.from_real_array(raws / fp.ONE)
    assert np.array_equal(back, raws)


def test_add_exact_in_range():
    rng = np.random.default_rng(1)
    a = rng.integers(-16000, 16000, size=2000)
    b = rng.integers(-16000, 16000, size=2000)
    for x, y in zip(a, b):
        assert fp.add(int(x), int(y)) == int(x) + int(y)


def test_add_saturates():
    assert fp.add(fp.from_real(31.0), fp.from_real(5.0)) == fp.RAW_MAX
    assert fp.to_real(fp.RAW_MAX) == pytest.approx(31.999023437, abs=1e-9)
    assert fp.add(fp.RAW_MIN, -1) == fp.RAW_MIN


def test_mul_examples():
    assert fp.mul(fp.from_real(0.5), fp.from_real(0.5)) == fp.from_real(0.25)
    assert fp.to_real(fp.mul(fp.from_real(0.5), fp.from_real(0.5))) == 0.25


def test_mul_round_trip_bound():
    # |to_real(mul(a, b)) - a*b| <= 2**-11 whenever the product is in range
    rng = np.random.default_rng(2)
    raws = rng.integers(-5792, 5792, size=(5000, 2))  # products stay in range
    for a, b in raws:
        err = abs(fp.to_real(fp.mul(int(a), int(b))) - fp.to_real(int(a)) * fp.to_real(int(b)))
        assert err <= 2.0 ** -11 + 1e-15


def test_mul_saturates():
    big = fp.from_real(31.0)
    assert fp.mul(big, big) == fp.RAW_MAX
    assert fp.mul(big, -big) == fp.RAW_MIN


def test_shr_is_learning_rate_shift():
    # 1.0 >> 6 = 1/64, the online learning rate
    assert fp.shr(fp.from_real(1.0), 6) == fp.from_real(0.015625)
    assert fp.to_real(fp.shr(1024, 6)) == 1.0 / 64.0


def test_shr_truncates_toward_negative_infinity():
    assert fp.shr(-1, 1) == -1
    assert fp.shr(-1024, 3) == -128


def test_shr_range_check():
    for bad in (-1, 16):
        with pytest.raises(ValueError):
            fp.shr(1024, bad)


def test_accumulator_narrow_matches_direct():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        a = int(rng.integers(fp.RAW_MIN, fp.RAW_MAX))
        b = int(rng.integers(fp.RAW_MIN, fp.RAW_MAX))
        assert fp.acc_narrow(fp.acc_product(a, b)) == fp.mul(a, b)


def test_accumulator_wide_sum_is_exact():
    # a 100-term sum of squares exceeds Q6.10 but accumulates exactly wide
    vals = [fp.from_real(20.0)] * 100
    acc = sum(fp.acc_product(v, v) for v in vals)
    assert acc == 100 * (20 * 1024) ** 2
    assert fp.acc_narrow(acc) == fp.RAW_MAX          # narrows with saturation
    assert fp.acc_narrow(acc, extra_shift=11) == fp.from_real(100 * 400.0 / 2048)


def test_round_shift_negative_scales_up_exactly():
    assert fp.round_shift(3, -2) == 12
    assert fp.round_shift(-5, 0) == -5


def test_vector_quantizer_matches_scalar():
    rng = np.random.default_rng(4)
    xs = rng.uniform(-40, 40, size=3000)
    vec = fp.from_real_array(xs)
    for x, v in zip(xs, vec):
        assert fp.from_real(float(x)) == int(v)
