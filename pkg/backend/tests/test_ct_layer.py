import pytest

from app.errors import ModelFault
from app.services.ct_layer import PIControllerState, need_index, pi_update, update_setpoint


def controller(integral=5.0, setpoint=0.5, **kw):
    params = dict(kp=2.0, ki=0.5, integral=integral, setpoint=setpoint, tracking_gain=0.2, sample_period=0.5)
    params.update(kw)
    return PIControllerState(**params)


def test_unsaturated_update():
    ctrl, allocated, desired = pi_update(controller(), measured_r=0.7, cu_maxavail=10)
    # e = 0.2: u = 2 * 0.2 + 5
    assert desired == pytest.approx(5.4)
    assert allocated == pytest.approx(5.4)
    assert ctrl.integral == pytest.approx(5.0 + 0.5 * 0.5 * 0.2)


def test_saturated_update_applies_back_calculation():
    ctrl, allocated, desired = pi_update(controller(integral=9.0), measured_r=2.5, cu_maxavail=10)
    # e = 2.0: u_raw = 13, clipped to 10
    assert desired == pytest.approx(13.0)
    assert allocated == 10.0
    assert ctrl.integral == pytest.approx(9.0 + 0.5 * 0.5 * 2.0 + 0.2 * 0.5 * (10.0 - 13.0))
    assert ctrl.last_cu_allocated == 10.0
    assert ctrl.last_cu_desired == pytest.approx(13.0)


def test_allocation_is_never_negative():
    _, allocated, desired = pi_update(controller(integral=0.1), measured_r=0.0, cu_maxavail=10)
    assert desired < 0
    assert allocated == 0.0


def test_integrator_stays_bounded_under_long_saturation():
    ctrl = controller(integral=10.0)
    for _ in range(2000):
        ctrl, allocated, _ = pi_update(ctrl, measured_r=3.0, cu_maxavail=10)
        assert allocated == 10.0
    # fixed point of the back-calculated integrator: I = cu_max + (ki / k_t - kp) * e
    assert ctrl.integral == pytest.approx(10.0 + (0.5 / 0.2 - 2.0) * 2.5, rel=1e-6)


def test_need_index_examples():
    assert need_index(12.0, 10).value == pytest.approx(0.2)
    assert need_index(4.0, 8).value == pytest.approx(-0.5)
    assert need_index(10.0, 10).value == 0.0


def test_need_index_rejects_empty_tier():
    with pytest.raises(ModelFault) as info:
        need_index(3.0, 0)
    assert info.value.field == "cu_maxavail"


def test_pi_update_rejects_bad_inputs():
    with pytest.raises(ModelFault):
        pi_update(controller(), float("nan"), 10)
    with pytest.raises(ModelFault):
        pi_update(controller(), 0.5, 0)


def test_setpoint_change_is_bumpless():
    ctrl = controller(integral=6.3)
    moved = update_setpoint(ctrl, 0.25)
    assert moved.setpoint == 0.25
    assert moved.integral == ctrl.integral
    assert update_setpoint(ctrl, ctrl.setpoint) is ctrl


@pytest.mark.parametrize("value", [0.0, -0.1, float("inf")])
def test_setpoint_must_be_positive(value):
    with pytest.raises(ModelFault):
        update_setpoint(controller(), value)


def test_constructor_rejects_non_positive_gains():
    with pytest.raises(ModelFault):
        controller(kp=0.0)


def test_reference_update():
    ctrl = controller(integral=0.0, setpoint=0.5)
    ctrl, allocated, desired = pi_update(ctrl, measured_r=1.0, cu_maxavail=10)
    assert desired == pytest.approx(1.0)
    assert allocated == pytest.approx(1.0)
    assert ctrl.integral == pytest.approx(0.125)


def test_zero_error_keeps_integral():
    ctrl = controller(integral=4.0, setpoint=0.5)
    new, allocated, desired = pi_update(ctrl, measured_r=0.5, cu_maxavail=10)
    assert desired == allocated == pytest.approx(4.0)
    assert new.integral == pytest.approx(4.0)
