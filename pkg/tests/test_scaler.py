import pytest
from hypothesis import given, strategies as st

from uavnav.scaler import MODE_FIXED, ScalerConfig, scale_depth

DEFAULT = ScalerConfig()  # s=10, L=10, p=1.8, d_min=0.1

# 10 * (k/10)^1.8 with the d_min floor, evaluated at 50-digit precision.
EXPECTED_DEFAULT = {
    1: 0.1584893192461113485202,
    2: 0.5518918645844859329560,
    3: 1.1450336728854528932957,
    4: 1.9217990943702899731873,
    5: 2.8717458874925875169965,
    6: 3.9872388356938438457354,
    7: 5.2623105265503188431762,
    8: 6.6920931365841486761791,
    9: 8.2724950695610940392428,
    10: 10.0,
}


@pytest.mark.parametrize("label,expected", sorted(EXPECTED_DEFAULT.items()))
def test_adaptive_curve_matches_high_precision_values(label, expected):
    assert scale_depth(DEFAULT, label) == pytest.approx(expected, rel=1e-9)


def test_top_label_returns_scale_exactly():
    assert scale_depth(DEFAULT, 10) == 10.0


def test_floor_binds_for_small_scale():
    cfg = ScalerConfig(s=1.0, num_labels=10, p=1.8, d_min=0.1)
    # 1 * 0.1^1.8 = 0.0158... < 0.1, so the floor applies.
    assert scale_depth(cfg, 1) == 0.1


def test_fixed_mode_ignores_label():
    cfg = ScalerConfig(mode=MODE_FIXED, fixed_step=2.0)
    assert {scale_depth(cfg, k) for k in range(1, 11)} == {2.0}


@pytest.mark.parametrize("label", [0, 11, -3])
def test_out_of_range_label_is_a_bug(label):
    with pytest.raises(ValueError, match="depth label"):
        scale_depth(DEFAULT, label)


def test_non_integer_label_rejected():
    with pytest.raises(ValueError):
        scale_depth(DEFAULT, 2.5)
    with pytest.raises(ValueError):
        scale_depth(DEFAULT, True)


def test_config_validation():
    with pytest.raises(ValueError):
        ScalerConfig(num_labels=0)
    with pytest.raises(ValueError):
        ScalerConfig(p=0.0)
    with pytest.raises(ValueError):
        ScalerConfig(d_min=11.0)  # d_min > s
    with pytest.raises(ValueError):
        ScalerConfig(mode="other")


@given(s=st.floats(min_value=0.5, max_value=50.0),
       num_labels=st.integers(min_value=1, max_value=40),
       p=st.floats(min_value=0.1, max_value=5.0),
       d_min_frac=st.floats(min_value=0.001, max_value=1.0))
def test_monotone_and_bounded(s, num_labels, p, d_min_frac):
    cfg = ScalerConfig(s=s, num_labels=num_labels, p=p, d_min=d_min_frac * s)
    values = [scale_depth(cfg, k) for k in range(1, num_labels + 1)]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo
        if lo > cfg.d_min:  # strictly increasing once the floor stops binding
            assert hi > lo
    assert all(cfg.d_min <= v <= s * (1 + 1e-12) for v in values)
    assert values[-1] == pytest.approx(s, rel=1e-12)
