import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spraysim.control import ControllerConfig, Mode, command, command_frame, on_off, variable_rate
from spraysim.perception import ZoneFeatures

CFG = ControllerConfig()


def zf(a_p, d_c=1.2, i=0):
    return ZoneFeatures(i, a_p, d_c, 0.5, 1 if a_p > 0 else 0)


def variable_oracle(a_p, d_c):
    """Hand-written reference of the variable law under the default constants."""
    if a_p <= 0.10:
        return 0.0
    if d_c <= 0.9:
        return 75.0
    v = 0.8 * (a_p * 100) * d_c + 0.0
    return 75.0 if v < 75 else 100.0 if v > 100 else v


@pytest.mark.parametrize("a_p, duty", [(0.0, 0), (0.05, 0), (0.10, 0), (0.11, 100), (0.5, 100), (1.0, 100)])
def test_on_off_threshold(a_p, duty):
    assert on_off(zf(a_p), CFG).duty == duty


def test_on_off_custom_threshold():
    cfg = ControllerConfig(thres_nozzle=0.3)
    assert on_off(zf(0.3), cfg).duty == 0
    assert on_off(zf(0.31), cfg).duty == 100


@pytest.mark.parametrize("a_p, d_c, duty", [(0.5, 0.8, 75.0), (1.0, 1.6, 100.0), (0.8, 1.3, 83.2)])
def test_variable_law_points(a_p, d_c, duty):
    assert variable_rate(zf(a_p, d_c), CFG).duty == pytest.approx(duty, abs=1e-9)


def test_variable_near_boundary_is_floor():
    assert variable_rate(zf(1.0, 0.9), CFG).duty == 75.0


def test_variable_below_threshold_is_off():
    assert variable_rate(zf(0.08, 1.5), CFG).duty == 0


def test_variable_without_gate_uses_floor():
    cfg = ControllerConfig(variable_gate_by_threshold=False)
    assert variable_rate(zf(0.05, 1.2), cfg).duty == 75.0


def test_variable_non_finite_distance_is_off_with_note():
    c = variable_rate(zf(0.5, math.inf), CFG)
    assert c.duty == 0 and "non-finite" in c.note


def test_mixed_frame():
    cfg = ControllerConfig(mode=Mode.VARIABLE)
    zones = [zf(0.0, math.inf, 0), zf(0.5, 0.8, 1), zf(0.9, 1.2, 2), zf(0.09, 1.1, 3)]
    assert [c.duty for c in command_frame(zones, cfg)] == pytest.approx([0, 75, 86.4, 0])


def test_frame_indices_per_side():
    zones = [zf(0.5, 1.2, i) for i in range(4)]
    assert [c.nozzle_index for c in command_frame(zones, CFG, side=1)] == [4, 5, 6, 7]
    with pytest.raises(ValueError):
        command_frame(zones[:3], CFG)


def test_all_open_ignores_features():
    cfg = ControllerConfig(mode="all")
    assert command(zf(0.0, math.inf), cfg).duty == 100


def test_mode_parse_lists_valid_modes():
    assert Mode.parse("AllOpen") is Mode.ALL_OPEN
    assert Mode.parse("variable_flow") is Mode.VARIABLE
    with pytest.raises(ValueError, match="all, onoff, variable"):
        Mode.parse("bogus")


@pytest.mark.parametrize("kw", [dict(thres_nozzle=1.5), dict(duty_floor=0), dict(duty_floor=100),
                                dict(k_p=0), dict(near_distance=0)])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        ControllerConfig(**kw)


a_ps = st.floats(0, 1, allow_nan=False)
dists = st.floats(0.1, 2.0, allow_nan=False)


@given(a_ps, dists)
def test_variable_matches_oracle_and_range(a_p, d_c):
    duty = variable_rate(zf(a_p, d_c), CFG).duty
    assert duty == pytest.approx(variable_oracle(a_p, d_c), abs=1e-9)
    assert duty == 0 or 75 <= duty <= 100


@given(a_ps, dists)
def test_mode_dominance(a_p, d_c):
    f = zf(a_p, d_c)
    v = command(f, ControllerConfig(mode="variable")).duty
    o = command(f, ControllerConfig(mode="onoff")).duty
    a = command(f, ControllerConfig(mode="all")).duty
    assert v <= o <= a


@given(a_ps, a_ps, dists)
def test_variable_monotone_in_area(a1, a2, d_c):
    lo, hi = sorted((a1, a2))
    assert variable_rate(zf(lo, d_c), CFG).duty <= variable_rate(zf(hi, d_c), CFG).duty
