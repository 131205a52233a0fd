import math

import numpy as np
import pytest

from Components.Config import ControllerConfig, ControllerKind
from Components.FuzzyCore import Defuzzified, RuleBase
from Components.Helm import HelmState, bearing, compute_errors, default_rulebase, step_controller, wrap_angle

T1 = ControllerConfig(kind=ControllerKind.TYPE1)


def _it2(m):
    return ControllerConfig(kind=ControllerKind.INTERVAL_TYPE2, fou_size_m=m)


@pytest.mark.parametrize("angle,expected", [
    (0.0, 0.0), (190.0, -170.0), (-190.0, 170.0), (180.0, 180.0), (-180.0, 180.0), (360.0, 0.0), (725.0, 5.0),
])
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected)


@pytest.mark.parametrize("target,expected", [((0.0, 1.0), 0.0), ((1.0, 0.0), 90.0), ((0.0, -1.0), 180.0),
                                             ((-1.0, 0.0), 270.0)])
def test_bearing_is_compass(target, expected):
    assert bearing((0.0, 0.0), target) == pytest.approx(expected)


def test_compute_errors_on_track():
    error, delta = compute_errors(90.0, (0.0, 0.0), (250.0, 0.0), 0.0)
    assert error == pytest.approx(0.0)
    assert delta == pytest.approx(0.0)


def test_compute_errors_wraps():
    error, delta = compute_errors(80.0, (0.0, 0.0), (250.0, 0.0), 5.0)
    assert error == pytest.approx(10.0)
    assert delta == pytest.approx(5.0)

    # Heading 350 towards a target bearing 10 is a 20 degree starboard correction
    error, _ = compute_errors(350.0, (0.0, 0.0), (0.17364817766693033, 0.984807753012208), 0.0)
    assert error == pytest.approx(20.0)


def test_compute_errors_on_waypoint():
    error, delta = compute_errors(45.0, (10.0, 10.0), (10.0, 10.0), 4.0)
    assert error == 0.0
    assert delta == -4.0


def test_default_rulebase():
    assert default_rulebase() == RuleBase.macvicar_whelan()


@pytest.mark.parametrize("cfg", [T1, _it2(0.0), _it2(10.0)])
def test_zero_error_holds_rudder(cfg):
    change, state = step_controller(cfg, HelmState(0.0, 4.0), 0.0, 0.0)
    assert change == pytest.approx(0.0, abs=1e-9)
    assert state.current_rudder == pytest.approx(4.0)


@pytest.mark.parametrize("cfg", [T1, _it2(0.0), _it2(5.0), _it2(10.0)])
def test_rudder_change_follows_error_sign(cfg):
    for error in np.append(np.arange(5.0, 90.0, 1.5), [90.0, 135.0]):
        change, _ = step_controller(cfg, HelmState(), error, 0.0)
        assert change > 0.0, error
        change, _ = step_controller(cfg, HelmState(), -error, 0.0)
        assert change < 0.0, error


@pytest.mark.parametrize("m", [15.0, 20.0, 25.0])
def test_wide_fou_never_turns_against_error(m):
    for error in np.arange(5.0, 90.5, 1.5):
        change, _ = step_controller(_it2(m), HelmState(), error, 0.0)
        assert change >= -1e-9, error


def test_non_finite_output_holds_rudder(monkeypatch, caplog):
    monkeypatch.setattr("Components.Helm.build_pipeline", lambda cfg: lambda error, delta: Defuzzified(math.nan))
    with caplog.at_level("WARNING"):
        change, state = step_controller(_it2(20.0), HelmState(previous_error=1.0, current_rudder=6.0), 8.0, 7.0)
    assert change == 0.0
    assert state.current_rudder == 6.0
    assert state.previous_error == 8.0
    assert "Non-finite fuzzy output" in caplog.text


def test_rudder_is_clamped():
    _, state = step_controller(T1, HelmState(previous_error=0.0, current_rudder=29.0), 90.0, 30.0)
    assert state.current_rudder == 30.0
    _, state = step_controller(T1, HelmState(previous_error=0.0, current_rudder=-29.0), -90.0, -30.0)
    assert state.current_rudder == -30.0


def test_step_records_previous_error():
    _, state = step_controller(T1, HelmState(previous_error=3.0), 12.5, 9.5)
    assert state.previous_error == 12.5


def test_rudder_limit_is_configurable():
    cfg = ControllerConfig(rudder_limit=10.0)
    _, state = step_controller(cfg, HelmState(current_rudder=9.0), 90.0, 30.0)
    assert state.current_rudder == 10.0
