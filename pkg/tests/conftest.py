import math

import pytest

from twistgrip import presets
from twistgrip.controller import ControllerConfig, GripperController
from twistgrip.mechanism import GripperGeometry
from twistgrip.plant import MotorModel, ObjectModel, Plant

DEG = math.pi / 180.0


@pytest.fixture
def geom():
    return GripperGeometry()


@pytest.fixture
def medium(geom):
    return presets.preload_for_level("medium", geom)


@pytest.fixture
def obj():
    return ObjectModel(presets.REFERENCE_CONTACT_ANGLE, presets.REFERENCE_STIFFNESS)


def make_controller(level="medium", sigma=0.0, seed=0, obj=None, tau_g=0.5, omega=1.0, **cfg):
    geom = GripperGeometry()
    preload = presets.preload_for_level(level, geom)
    if obj is None:
        obj = ObjectModel(presets.REFERENCE_CONTACT_ANGLE, presets.REFERENCE_STIFFNESS)
    motor = MotorModel(omega=omega, torque_noise_sigma=sigma, seed=seed)
    plant = Plant(geom, preload, obj, motor)
    ctrl_cfg = ControllerConfig(tau_detect=presets.detect_threshold(level), tau_g_target=tau_g, **cfg)
    return GripperController(plant, ctrl_cfg)


# -- acceptance summary ------------------------------------------------------

_CRITERIA: dict[str, tuple[int, str]] = {}
_OUTCOMES: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = mark.args


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.nodeid in _CRITERIA and (rep.when == "call" or rep.failed):
        number, _ = _CRITERIA[item.nodeid]
        _OUTCOMES.setdefault(number, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    titles = {n: t for n, t in _CRITERIA.values()}
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        ok = all(_OUTCOMES[number])
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {titles[number]}")
