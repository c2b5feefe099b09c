import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistgrip import presets
from twistgrip.mechanism import GripperGeometry, PreloadSpec
from twistgrip.plant import Direction, Mode, MotorModel, ObjectModel, Plant, TorqueSensor, plant_observe

DT = 0.005


def run(plant, steps, direction=Direction.FORWARD, state=None):
    state = state or plant.initial_state()
    out = []
    for _ in range(steps):
        state = plant.step(state, direction, DT)
        out.append(state)
    return out


@pytest.fixture
def plant(geom, medium, obj):
    return Plant(geom, medium, obj, MotorModel())


def test_modes_follow_a_b_c(plant):
    states = run(plant, 400)
    modes = [s.mode for s in states]
    first_b = modes.index(Mode.B)
    first_c = modes.index(Mode.C)
    assert all(m is Mode.A for m in modes[:first_b])
    assert all(m is Mode.B for m in modes[first_b:first_c])
    assert all(m is Mode.C for m in modes[first_c:])
    assert all(s.tau_m_true == 0.0 for s in states[:first_b])
    # B is entered within one step of the contact angle
    assert states[first_b].theta_m == pytest.approx(presets.REFERENCE_CONTACT_ANGLE, abs=DT + 1e-12)


def test_b_torque_never_exceeds_threshold(plant):
    states = run(plant, 400)
    b = [s.tau_m_true for s in states if s.mode is Mode.B]
    assert max(b) <= plant.tau_th
    assert np.all(np.diff(b) > 0)


def test_twisting_kinematics(plant, geom):
    states = run(plant, 400)
    c = [s for s in states if s.mode is Mode.C]
    for a, b in zip(c, c[1:]):
        assert b.theta_w - a.theta_w == pytest.approx(geom.g_wrist * plant.motor.omega * DT, rel=1e-12)
        assert b.theta_f == a.theta_f
        assert b.aperture == a.aperture
        assert b.tau_m_true == pytest.approx(plant.tau_const, abs=1e-12)
        assert b.f_tip == pytest.approx(plant.f_twist, rel=1e-12)
    assert all(s.theta_w == 0.0 for s in states if s.mode is not Mode.C)


def test_wrap_tracks_wrist_rotation(plant):
    states = run(plant, 400)
    last = states[-1]
    assert last.wrap_angle == pytest.approx(last.theta_w, rel=1e-12)


def test_empty_gripper_closes_on_itself(geom, medium):
    plant = Plant(geom, medium, None, MotorModel())
    states = run(plant, 600)
    assert states[-1].mode is Mode.C
    # rotating with nothing between the fingers winds nothing up
    assert states[-1].wrap_angle == 0.0
    assert min(s.aperture for s in states) == 0.0


def test_stall_when_motor_is_too_weak(geom, medium, obj):
    plant = Plant(geom, medium, obj, MotorModel(tau_max=0.5))
    states = run(plant, 300)
    stalled = [s for s in states if s.stalled]
    assert stalled
    s = stalled[0]
    assert s.tau_m_true == 0.5
    assert all(x.theta_m == s.theta_m for x in stalled)
    assert all(x.mode is Mode.B for x in states[-5:])


def test_reverse_unwinds_before_opening(plant):
    fwd = run(plant, 500)
    hold = fwd[-1]
    back = run(plant, 600, Direction.REVERSE, hold)
    for s in back:
        if s.aperture > hold.aperture:
            assert s.wrap_angle == 0.0
    assert back[-1].theta_m == pytest.approx(0.0, abs=1e-9) or back[-1].theta_m < 0
    assert any(s.aperture > hold.aperture for s in back)


def test_reverse_torque_sign(plant):
    hold = run(plant, 500)[-1]
    s = plant.step(hold, Direction.REVERSE, DT)
    assert s.mode is Mode.C
    assert s.tau_m_true == pytest.approx(-plant.tau_const)


def test_reverse_from_grasp_opens_with_falling_force(plant):
    hold = run(plant, 220)[-1]
    assert hold.mode is Mode.B
    back = run(plant, 40, Direction.REVERSE, hold)
    forces = [s.f_tip for s in back]
    assert all(b <= a for a, b in zip(forces, forces[1:]))
    assert back[-1].mode is Mode.A


def test_zero_contact_angle_loads_immediately(geom, medium):
    plant = Plant(geom, medium, ObjectModel(0.0, 100.0), MotorModel())
    s = plant.step(plant.initial_state(), Direction.FORWARD, DT)
    assert s.mode is Mode.B
    assert s.f_tip == pytest.approx(100.0 * DT)


def test_zero_preload_twists_at_contact(geom, obj):
    plant = Plant(geom, PreloadSpec(0.0, 0.0), obj, MotorModel())
    states = run(plant, 300)
    assert Mode.B not in {s.mode for s in states}
    c = [s for s in states if s.mode is Mode.C]
    assert c and all(s.tau_m_true == 0.0 for s in c)


@pytest.mark.parametrize("kwargs", [
    {"stiffness": -1.0}, {"stiffness": 0.0}, {"contact_angle": -0.1}, {"mu": 1.2}, {"weight": -1.0},
])
def test_object_validation(kwargs):
    args = {"contact_angle": 1.0, "stiffness": 100.0} | kwargs
    with pytest.raises(ValueError):
        ObjectModel(**args)


def test_motor_validation():
    with pytest.raises(ValueError):
        MotorModel(omega=0)
    with pytest.raises(ValueError):
        MotorModel(torque_noise_sigma=-1)


def test_step_rejects_bad_dt(plant):
    with pytest.raises(ValueError):
        plant.step(plant.initial_state(), Direction.FORWARD, 0.0)


@given(st.integers(min_value=1, max_value=800))
@settings(max_examples=30, deadline=None)
def test_motor_angle_bookkeeping(n):
    plant = Plant(GripperGeometry(), presets.preload_for_level("medium"),
                  ObjectModel(presets.REFERENCE_CONTACT_ANGLE, presets.REFERENCE_STIFFNESS), MotorModel())
    s = run(plant, n)[-1]
    # every motor radian goes either to the fingers or to the wrist
    assert s.theta_m == pytest.approx(s.theta_f + s.theta_w / plant.geom.g_wrist, abs=1e-9)
    assert s.t == pytest.approx(n * DT)


def test_noise_is_seeded(plant):
    state = run(plant, 200)[-1]
    motor = MotorModel(torque_noise_sigma=0.02, seed=7)
    a = [TorqueSensor(motor) for _ in range(2)]
    ra = [a[0].read(state).tau_m_meas for _ in range(5000)]
    rb = [plant_observe(state, a[1]).tau_m_meas for _ in range(5000)]
    assert ra == rb
    other = TorqueSensor(MotorModel(torque_noise_sigma=0.02, seed=8))
    assert other.read(state).tau_m_meas != ra[0]


def test_noise_statistics(plant):
    state = run(plant, 200)[-1]
    sensor = TorqueSensor(MotorModel(torque_noise_sigma=0.02, seed=3))
    errs = np.array([sensor.read(state).tau_m_meas - state.tau_m_true for _ in range(20000)])
    assert abs(errs.mean()) < 4 * 0.02 / math.sqrt(errs.size)
    assert errs.std(ddof=1) == pytest.approx(0.02, rel=0.03)


def test_telemetry_hides_mode(plant):
    tel = TorqueSensor(plant.motor).read(plant.initial_state())
    assert "mode" not in repr(tel)
    assert tel.tau_m_meas == 0.0
