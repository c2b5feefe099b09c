"""Scenario execution: build the plant and controller from a config, run the
requested experiment, and fill a :class:`~twistgrip.report.Report`."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import presets
from .capstan import TwistGraspQuery, amplification, twist_payload
from .config import ScenarioConfig
from .controller import (
    ControllerConfig,
    ControllerError,
    GripperController,
    TargetExceedsThreshold,
    TraceRecord,
    lift_speed,
)
from .mechanism import PreloadLevel, PreloadSpec, alpha1, twist_const_torque, twist_threshold_torque
from .plant import Direction, Mode, MotorModel, Plant, TorqueSensor
from .report import Report, emit_report, emit_trace

DEG = math.pi / 180.0


@dataclass
class ScenarioResult:
    trace: list[TraceRecord]
    report: Report

    @property
    def passed(self) -> bool:
        return self.report.passed


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    report = Report(cfg.scenario_id, cfg.kind, config_provenance=dict(cfg.provenance))
    derived_th = [
        lvl for lvl in _levels_used(cfg)
        if presets.TAU_TH_PROVENANCE.get(PreloadLevel(lvl)) == presets.DERIVED
    ]
    if derived_th:
        report.notes.append(
            "twist threshold for " + ", ".join(derived_th)
            + " preload is scaled from the medium value by payload ratio, not measured"
        )
    trace = _RUNNERS[cfg.kind](cfg, report)
    return ScenarioResult(trace=trace, report=report)


def write_outputs(result: ScenarioResult, cfg: ScenarioConfig, out_dir: str | Path, fmt: str = "structured") -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    if cfg.kind != "payload_table":
        written.append(emit_trace(result.trace, out_dir / cfg.trace_path))
    report_path = out_dir / cfg.report_path
    if fmt == "csv" and report_path.suffix == ".json":
        report_path = report_path.with_suffix(".csv")
    written.append(emit_report(result.report, report_path, fmt))
    return written


# -- helpers ---------------------------------------------------------------


def _levels_used(cfg: ScenarioConfig) -> list[str]:
    if cfg.kind in ("payload_table", "tip_force_sweep") and cfg.preload.level is not PreloadLevel.CUSTOM:
        return list(cfg.run.levels)
    if cfg.preload.level is PreloadLevel.CUSTOM:
        return []
    return [cfg.preload.level.value]


def _setup_for_level(cfg: ScenarioConfig, level: str) -> tuple[PreloadSpec, ControllerConfig]:
    """Preload and controller thresholds for one reference level."""
    if level == cfg.preload.level.value or cfg.preload.level is PreloadLevel.CUSTOM:
        return cfg.preload, cfg.controller
    preload = presets.preload_for_level(level, cfg.geom, cfg.kinetic_ratio)
    detect = twist_threshold_torque(cfg.geom, preload) - presets.DETECT_MARGIN
    ctrl = replace(cfg.controller, tau_detect=detect, tau_g_target=min(cfg.controller.tau_g_target, 0.5 * detect))
    return preload, ctrl


def _stiffness(cfg: ScenarioConfig) -> float:
    return cfg.obj.stiffness if cfg.obj is not None else cfg.geom.tip_stiffness


def _make(cfg: ScenarioConfig, preload=None, ctrl=None, motor=None) -> GripperController:
    plant = Plant(cfg.geom, preload or cfg.preload, cfg.obj, motor or cfg.motor)
    return GripperController(plant, ctrl or cfg.controller)


def _force_tol(cfg: ScenarioConfig, motor: MotorModel) -> float:
    """Stop-rule quantisation plus noise, in newtons."""
    a1 = alpha1(cfg.geom)
    return _stiffness(cfg) * motor.omega * cfg.controller.dt + 3.0 * motor.torque_noise_sigma / a1


def _fault_row(report: Report, name: str, exc: Exception) -> None:
    report.add(name, type(exc).__name__, expected="no fault", check="equal", note=str(exc))


def _release_rows(report: Report, ctrl: GripperController, start: int, theta_w0: float, aperture0: float) -> None:
    """Check the unwind-before-open ordering on the release part of the trace."""
    part = ctrl.trace[start:]
    before = ctrl.trace[start - 1] if start > 0 else None
    ap_hold = before.aperture if before else aperture0
    tol = 1e-9
    # every sample where the fingers have opened must already be unwound
    ordered = all(abs(r.theta_w - theta_w0) <= tol for r in part if r.aperture > ap_hold + tol)
    report.add("release unwinds before opening", ordered, expected=True, check="equal", provenance=presets.PAPER)
    s = ctrl.state
    report.add("final motor angle", s.theta_m, expected=0.0, tol=1e-9, check="abs", unit="rad")
    report.add("final aperture", s.aperture, expected=aperture0, tol=1e-9, check="abs", unit="rad")
    report.add("final mode", s.mode.value, expected="A", check="equal")


# -- scenario kinds --------------------------------------------------------


def _run_grasp(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    ctrl = _make(cfg)
    a1 = alpha1(cfg.geom)
    f_target = cfg.controller.tau_g_target / a1
    aperture0 = ctrl.state.aperture
    try:
        state, _ = ctrl.grasp_to_force(f_target)
    except ControllerError as exc:
        _fault_row(report, "grasp", exc)
        return ctrl.trace
    report.add("tip force", state.f_tip, expected=f_target, tol=_force_tol(cfg, cfg.motor), check="abs",
               provenance=presets.DERIVED, unit="N")
    report.add("grasp torque", state.tau_m_true, expected=cfg.controller.tau_g_target, unit="N*m")
    report.add("twisting entered", any(r.mode == "C" for r in ctrl.trace), expected=False, check="equal")
    if cfg.run.release:
        start = len(ctrl.trace)
        try:
            ctrl.release()
        except ControllerError as exc:
            _fault_row(report, "release", exc)
            return ctrl.trace
        _release_rows(report, ctrl, start, 0.0, aperture0)
    return ctrl.trace


def _twist_bound(cfg: ScenarioConfig, preload: PreloadSpec, ctrl_cfg: ControllerConfig, motor: MotorModel) -> float:
    """Largest expected undershoot of a twist: step size plus early detection."""
    g = cfg.geom.g_wrist
    slope = _stiffness(cfg) * alpha1(cfg.geom)
    gap = max(0.0, twist_threshold_torque(cfg.geom, preload) - ctrl_cfg.tau_detect)
    return g * (motor.omega * ctrl_cfg.dt + gap / slope)


def _run_twist_grasp(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    ctrl = _make(cfg)
    a1 = alpha1(cfg.geom)
    aperture0 = ctrl.state.aperture
    target = cfg.controller.theta_tw_target
    stage = {"travel": 0.0, "speed": 0.0}

    def follow(tel, v):
        stage["speed"] = v
        stage["travel"] += v * cfg.controller.dt

    try:
        ctrl.grasp_to_force(cfg.controller.tau_g_target / a1)
        theta_w0 = ctrl.state.theta_w
        _, rec = ctrl.twist_to_angle(target, on_step=follow)
    except ControllerError as exc:
        _fault_row(report, "twist grasp", exc)
        return ctrl.trace

    if cfg.motor.torque_noise_sigma == 0:
        lo = target - _twist_bound(cfg, cfg.preload, cfg.controller, cfg.motor)
        report.add("twist angle", rec.delta_theta_obj / DEG, expected=(lo / DEG, target / DEG), tol=1e-9,
                   check="range", provenance=presets.DERIVED, unit="deg")
    else:
        report.add("twist angle", rec.delta_theta_obj / DEG, expected=target / DEG, tol=1.0, check="abs",
                   provenance=presets.DERIVED, unit="deg")
    report.add("twist onset time", rec.t_c, unit="s")
    report.add("twist stop time", rec.t_d, unit="s")
    report.add("stage speed while twisting", stage["speed"], expected=lift_speed(cfg.geom, cfg.motor.omega),
               tol=1e-12, check="abs", provenance=presets.PAPER, unit="m/s")
    report.add("stage travel while twisting", stage["travel"], unit="m")

    wraps = ctrl.state.wrap_angle / (2 * math.pi)
    report.add("wraps", wraps)
    if wraps > 0:
        f_obj = twist_payload(TwistGraspQuery(cfg.f_g, cfg.mu, wraps)).f_obj
        report.add("predicted payload", f_obj, unit="N", provenance=presets.PAPER)
        if cfg.obj is not None and cfg.obj.weight > 0:
            report.add("payload holds weight", f_obj >= cfg.obj.weight, expected=True, check="equal")

    if cfg.run.release:
        start = len(ctrl.trace)
        try:
            ctrl.release()
        except ControllerError as exc:
            _fault_row(report, "release", exc)
            return ctrl.trace
        _release_rows(report, ctrl, start, theta_w0, aperture0)
    return ctrl.trace


def _run_calibrate(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    ctrl = _make(cfg)
    try:
        result = ctrl.calibrate_preload(window=cfg.run.window, settle=cfg.run.settle)
    except ControllerError as exc:
        _fault_row(report, "calibration", exc)
        return ctrl.trace
    sigma = cfg.motor.torque_noise_sigma
    tau_const = twist_const_torque(cfg.geom, cfg.preload)
    if sigma == 0:
        report.add("kinetic preload", result.preload.tau_pl_kf, expected=cfg.preload.tau_pl_kf, tol=1e-9,
                   check="rel", unit="N*m")
        report.add("twisting torque", result.tau_const, expected=tau_const, tol=1e-9, check="rel", unit="N*m")
    else:
        tol = 3 * sigma / math.sqrt(result.n_samples)
        scale = cfg.preload.tau_pl_kf / tau_const if tau_const else 0.0
        report.add("kinetic preload", result.preload.tau_pl_kf, expected=cfg.preload.tau_pl_kf, tol=tol * scale,
                   check="abs", provenance=presets.DERIVED, unit="N*m")
        report.add("twisting torque", result.tau_const, expected=tau_const, tol=tol, check="abs",
                   provenance=presets.DERIVED, unit="N*m")
    report.add("tip force while twisting", result.f_tip_twist, unit="N")
    report.add("static preload (momentary peak)", result.preload.tau_pl_max_sf, unit="N*m")
    report.add("samples averaged", result.n_samples)
    return ctrl.trace


def _run_payload_table(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    for n in cfg.run.wraps:
        amp = amplification(cfg.mu, n)
        if n in presets.TABLE4_AMPLIFICATION and cfg.mu == presets.REFERENCE_MU:
            report.add(f"amplification n={n:g}", amp, expected=presets.TABLE4_AMPLIFICATION[n],
                       tol=presets.TABLE4_AMPLIFICATION_TOL[n], check="abs", provenance=presets.PAPER)
        else:
            report.add(f"amplification n={n:g}", amp)
    if cfg.preload.level is PreloadLevel.CUSTOM:
        payloads = [("custom", cfg.f_g)]
    else:
        payloads = [(lvl, presets.TABLE3_F_G[PreloadLevel(lvl)]) for lvl in cfg.run.levels]
    for lvl, f_g in payloads:
        for n in cfg.run.wraps:
            f_obj = twist_payload(TwistGraspQuery(f_g, cfg.mu, n)).f_obj
            table = presets.TABLE4_F_OBJ.get(PreloadLevel(lvl), {}) if lvl != "custom" else {}
            name = f"payload {lvl} n={n:g}"
            if n in table and cfg.mu == presets.REFERENCE_MU:
                report.add(name, f_obj, expected=table[n], tol=presets.TABLE4_F_OBJ_RTOL, check="rel",
                           provenance=presets.PAPER, unit="N")
            else:
                report.add(name, f_obj, unit="N")
    return []


def _sweep_grid(cfg: ScenarioConfig) -> list[float]:
    r = cfg.run
    count = int(math.floor((r.tau_stop - r.tau_start) / r.tau_step + 1e-9)) + 1
    return [round(r.tau_start + i * r.tau_step, 12) for i in range(count)]


def _run_tip_force_sweep(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    a1 = alpha1(cfg.geom)
    tol = _force_tol(cfg, cfg.motor)
    levels = [cfg.preload.level.value] if cfg.preload.level is PreloadLevel.CUSTOM else list(cfg.run.levels)
    trace: list[TraceRecord] = []
    for lvl in levels:
        preload, ctrl_cfg = _setup_for_level(cfg, lvl)
        tau_th = twist_threshold_torque(cfg.geom, preload)
        for tau in _sweep_grid(cfg):
            ctrl = _make(cfg, preload, ctrl_cfg)
            name = f"{lvl} tau_g={tau:.2f}"
            try:
                state, _ = ctrl.grasp_to_force(tau / a1)
            except TargetExceedsThreshold:
                report.add(f"{name} rejected", True, expected=True, check="equal",
                           note=f"target at or above detection threshold {ctrl_cfg.tau_detect:.4g} N*m")
                continue
            except ControllerError as exc:
                _fault_row(report, name, exc)
                continue
            if tau >= tau_th:
                report.add(f"{name} rejected", False, expected=True, check="equal", provenance=presets.PAPER)
                continue
            report.add(f"{name} tip force", state.f_tip, expected=tau / a1, tol=tol, check="abs",
                       provenance=presets.PAPER, unit="N")
            report.add(f"{name} stayed grasping", any(r.mode == "C" for r in ctrl.trace), expected=False,
                       check="equal")
            trace = ctrl.trace
    return trace


def run_constant_speed(plant: Plant, dt: float, hold_angle: float, budget: float, sensor: TorqueSensor | None = None):
    """Open-loop forward run at constant motor speed.

    Stops once the plant has been twisting for ``hold_angle`` of motor angle,
    or after ``budget`` of motor angle in total.
    """
    sensor = sensor or TorqueSensor(plant.motor)
    state = plant.initial_state()
    trace: list[TraceRecord] = []
    twist_start = None
    while state.theta_m < budget:
        state = plant.step(state, Direction.FORWARD, dt)
        tel = sensor.read(state)
        trace.append(TraceRecord(
            t=state.t, theta_m=state.theta_m, omega=0.0 if state.stalled else plant.motor.omega,
            tau_m_true=state.tau_m_true, tau_m_meas=tel.tau_m_meas, mode=state.mode.value,
            theta_w=state.theta_w, aperture=state.aperture, f_tip=state.f_tip, controller_phase="-",
        ))
        if state.stalled:
            break
        if state.mode is Mode.C and twist_start is None:
            twist_start = state.theta_m
        if twist_start is not None and state.theta_m - twist_start >= hold_angle - 1e-12:
            break
    return trace


def _run_torque_profile(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    plant = Plant(cfg.geom, cfg.preload, cfg.obj, cfg.motor)
    dt = cfg.controller.dt
    trace = run_constant_speed(plant, dt, cfg.run.hold_angle, cfg.controller.angle_budget)
    seq = [trace[0].mode]
    for r in trace[1:]:
        if r.mode != seq[-1]:
            seq.append(r.mode)
    report.add("state sequence", ">".join(seq), expected="A>B>C", check="equal", provenance=presets.PAPER)
    sigma = cfg.motor.torque_noise_sigma
    in_a = [r.tau_m_true for r in trace if r.mode == "A"]
    if in_a:
        report.add("peak torque in A", max(abs(x) for x in in_a), expected=0.0, tol=0.0, check="abs", unit="N*m")
    in_c = [r.tau_m_true for r in trace if r.mode == "C"]
    tau_const = plant.tau_const
    if in_c:
        worst = max(abs(x - tau_const) for x in in_c)
        report.add("torque in C minus tau_const", worst, expected=0.0, tol=1e-9, check="abs", unit="N*m")
        report.add("tau_const", tau_const, unit="N*m")
        last_b = next((r for r in reversed(trace) if r.mode == "B"), None)
        step_tau = _stiffness(cfg) * plant.alpha1 * cfg.motor.omega * dt
        if last_b is not None:
            report.add("torque at B->C switch", last_b.tau_m_meas, expected=plant.tau_th,
                       tol=step_tau + 3 * sigma, check="abs", provenance=presets.PAPER, unit="N*m")
        contact = plant.obj.contact_angle
        first_b = next((r for r in trace if r.mode == "B"), None)
        if first_b is not None:
            report.add("contact motor angle", first_b.theta_m / DEG, expected=contact / DEG,
                       tol=cfg.motor.omega * dt / DEG + 1e-9, check="abs", unit="deg")
        wrist = [r.theta_w for r in trace if r.mode == "C"]
        report.add("wrist travel while twisting", (wrist[-1] - 0.0) / DEG, unit="deg")
    return trace


def _posture_run(cfg: ScenarioConfig, target: float, motor: MotorModel) -> tuple[float, GripperController]:
    ctrl = _make(cfg, motor=motor)
    ctrl.grasp_to_force(cfg.controller.tau_g_target / alpha1(cfg.geom))
    _, rec = ctrl.twist_to_angle(target)
    return rec.delta_theta_obj, ctrl


def _run_posture_table(cfg: ScenarioConfig, report: Report) -> list[TraceRecord]:
    q = cfg.geom.g_wrist * cfg.motor.omega * cfg.controller.dt
    trace: list[TraceRecord] = []
    noiseless = replace(cfg.motor, torque_noise_sigma=0.0)
    for target in cfg.run.targets:
        deg = target / DEG
        label = f"{deg:g} deg"
        try:
            achieved, ctrl = _posture_run(cfg, target, noiseless)
        except ControllerError as exc:
            _fault_row(report, f"twist {label} noiseless", exc)
            continue
        if not trace:
            trace = ctrl.trace
        report.add(f"twist {label} noiseless", achieved / DEG, expected=((target - q) / DEG, deg), tol=1e-9,
                   check="range", provenance=presets.DERIVED, unit="deg")
        if cfg.run.ensemble <= 0:
            continue
        results = []
        for i in range(cfg.run.ensemble):
            motor = replace(cfg.motor, torque_noise_sigma=cfg.run.ensemble_sigma, seed=cfg.seed + i)
            try:
                results.append(_posture_run(cfg, target, motor)[0] / DEG)
            except ControllerError as exc:
                _fault_row(report, f"twist {label} seed {cfg.seed + i}", exc)
        if not results:
            continue
        mean = float(np.mean(results))
        std = float(np.std(results, ddof=1)) if len(results) > 1 else 0.0
        report.add(f"twist {label} ensemble mean", mean, expected=deg, tol=1.0, check="abs",
                   provenance=presets.DERIVED, unit="deg", note=f"{len(results)} seeded runs")
        measured = presets.TABLE1_POSTURE.get(round(deg, 9))
        if measured is not None:
            report.add(f"twist {label} ensemble mean vs measured", mean, expected=measured[0], tol=1.0, check="abs",
                       provenance=presets.PAPER, unit="deg")
            report.add(f"twist {label} ensemble std", std, expected=measured[1], unit="deg", provenance=presets.PAPER)
    return trace


_RUNNERS = {
    "grasp": _run_grasp,
    "twist_grasp": _run_twist_grasp,
    "calibrate": _run_calibrate,
    "payload_table": _run_payload_table,
    "tip_force_sweep": _run_tip_force_sweep,
    "torque_profile": _run_torque_profile,
    "posture_table": _run_posture_table,
}
