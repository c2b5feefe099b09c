"""Scenario configuration files.

A config is an INI-style text file whose physical quantities carry explicit
units::

    [scenario]
    id = medium-twist
    kind = twist_grasp

    [gripper]
    l_tip = 50 mm

    [preload]
    level = medium

Every key that is not given is filled from :mod:`twistgrip.presets`, and the
origin of each resolved value (published, derived, package default or config file) is kept in
``ScenarioConfig.provenance``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import presets
from .capstan import antipodal_payload
from .controller import ControllerConfig
from .mechanism import (
    GripperGeometry,
    PreloadLevel,
    PreloadSpec,
    preload_for_threshold,
    threshold_tip_force,
    twist_threshold_torque,
)
from .plant import MotorModel, ObjectModel
from .units import UnitError, format_quantity, parse_list, parse_quantity

KINDS = (
    "grasp",
    "twist_grasp",
    "calibrate",
    "payload_table",
    "tip_force_sweep",
    "torque_profile",
    "posture_table",
)

CONFIG = "config"

# (type, dimension) per key. Types: q quantity, ql quantity list, f float,
# fl float list, i int, b bool, s string, sl string list.
SCHEMA: dict[str, dict[str, tuple[str, str | None]]] = {
    "scenario": {"id": ("s", None), "kind": ("s", None), "seed": ("i", None)},
    "gripper": {
        "l_tip": ("q", "length"),
        "l_2a": ("q", "length"),
        "l_2b": ("q", "length"),
        "l_2c": ("q", "length"),
        "r_2in": ("q", "length"),
        "r_2out": ("q", "length"),
        "r_4": ("q", "length"),
        "r_f": ("q", "length"),
        "g_finger": ("f", None),
        "g_wrist": ("f", None),
        "theta_close": ("q", "angle"),
        "tip_stiffness": ("q", "stiffness"),
    },
    "preload": {
        "level": ("s", None),
        "tau_th": ("q", "torque"),
        "tau_pl_max_sf": ("q", "torque"),
        "tau_pl_kf": ("q", "torque"),
        "kinetic_ratio": ("f", None),
    },
    "object": {
        "present": ("b", None),
        "contact_angle": ("q", "angle"),
        "stiffness": ("q", "stiffness"),
        "mu": ("f", None),
        "mu_tip": ("f", None),
        "weight": ("q", "force"),
    },
    "motor": {
        "omega": ("q", "angular_velocity"),
        "tau_max": ("q", "torque"),
        "noise_sigma": ("q", "torque"),
    },
    "controller": {
        "tau_detect": ("q", "torque"),
        "tau_g_target": ("q", "torque"),
        "theta_tw_target": ("q", "angle"),
        "dt": ("q", "time"),
        "debounce": ("i", None),
        "angle_budget": ("q", "angle"),
    },
    "payload": {"f_g": ("q", "force"), "mu": ("f", None)},
    "run": {
        "release": ("b", None),
        "targets": ("ql", "angle"),
        "ensemble": ("i", None),
        "ensemble_sigma": ("q", "torque"),
        "levels": ("sl", None),
        "wraps": ("fl", None),
        "tau_start": ("q", "torque"),
        "tau_stop": ("q", "torque"),
        "tau_step": ("q", "torque"),
        "window": ("i", None),
        "settle": ("i", None),
        "hold_angle": ("q", "angle"),
    },
    "output": {"trace": ("s", None), "report": ("s", None)},
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str], source: str = "<config>"):
        self.problems = list(problems)
        self.source = source
        super().__init__(f"{source}: " + "; ".join(self.problems))


@dataclass(frozen=True)
class RunOptions:
    release: bool = True
    targets: tuple[float, ...] = tuple(math.radians(d) for d in (90.0, 180.0, 270.0, 360.0))
    ensemble: int = 30
    ensemble_sigma: float = presets.REFERENCE_NOISE_SIGMA
    levels: tuple[str, ...] = ("low", "medium", "high")
    wraps: tuple[float, ...] = (0.5, 1.0, 2.0, 3.0)
    tau_start: float = 0.04
    tau_stop: float = 1.60
    tau_step: float = 0.17
    window: int = 500
    settle: int = 20
    hold_angle: float = math.radians(90.0)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    kind: str
    seed: int
    geom: GripperGeometry
    preload: PreloadSpec
    kinetic_ratio: float
    obj: ObjectModel | None
    motor: MotorModel
    controller: ControllerConfig
    f_g: float
    mu: float
    run: RunOptions
    trace_path: str
    report_path: str
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def tau_th(self) -> float:
        return twist_threshold_torque(self.geom, self.preload)


class _Reader:
    """Pulls typed values out of a parsed file while collecting every problem."""

    def __init__(self, parser: configparser.ConfigParser, overrides: dict[str, str]):
        self.parser = parser
        self.overrides = overrides
        self.problems: list[str] = []
        self.provenance: dict[str, str] = {}

    def raw(self, section: str, key: str) -> str | None:
        name = f"{section}.{key}"
        if name in self.overrides:
            return self.overrides[name]
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return None

    def get(self, section: str, key: str, default=None, origin: str = presets.DEFAULT):
        name = f"{section}.{key}"
        text = self.raw(section, key)
        if text is None:
            if default is not None:
                self.provenance[name] = origin
            return default
        kind, dim = SCHEMA[section][key]
        try:
            value = _convert(text, kind, dim)
        except (ValueError, UnitError) as exc:
            self.problems.append(f"{name}: {exc}")
            return default
        self.provenance[name] = CONFIG
        return value

    def require(self, section: str, key: str):
        value = self.get(section, key)
        if value is None and f"{section}.{key}" not in self.provenance:
            self.problems.append(f"{section}.{key}: required key is missing")
        return value


def _convert(text: str, kind: str, dim: str | None):
    text = text.strip()
    if kind == "q":
        return parse_quantity(text, dim)
    if kind == "ql":
        return tuple(parse_list(text, dim))
    if kind == "f":
        return float(text)
    if kind == "fl":
        return tuple(parse_list(text, None))
    if kind == "i":
        return int(text)
    if kind == "b":
        low = text.lower()
        if low in ("yes", "true", "on", "1"):
            return True
        if low in ("no", "false", "off", "0"):
            return False
        raise ValueError(f"expected yes/no, got {text!r}")
    if kind == "sl":
        return tuple(text.replace(",", " ").split())
    return text


def _parse_text(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([str(exc).replace("\n", " ")], source) from None
    return parser


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc.strerror}"], str(path)) from None
    return parse_config(text, source=str(path), default_id=path.stem, overrides=overrides)


def parse_config(
    text: str,
    source: str = "<config>",
    default_id: str = "scenario",
    overrides: dict[str, str] | None = None,
) -> ScenarioConfig:
    parser = _parse_text(text, source)
    overrides = dict(overrides or {})
    problems: list[str] = []
    for section in parser.sections():
        if section not in SCHEMA:
            problems.append(f"[{section}]: unknown section")
            continue
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                problems.append(f"{section}.{key}: unknown key")
    for name in overrides:
        section, _, key = name.partition(".")
        if key not in SCHEMA.get(section, {}):
            problems.append(f"{name}: unknown key")

    r = _Reader(parser, overrides)
    r.problems = problems
    P, DER = presets.PAPER, presets.DERIVED

    scenario_id = r.get("scenario", "id", default_id)
    kind = r.require("scenario", "kind")
    if kind is not None and kind not in KINDS:
        r.problems.append(f"scenario.kind: {kind!r} is not one of {', '.join(KINDS)}")
    seed = r.get("scenario", "seed", 0)

    # gripper
    base = GripperGeometry()
    geom_kw = {}
    for f in fields(GripperGeometry):
        geom_kw[f.name] = r.get("gripper", f.name, getattr(base, f.name), presets.GEOMETRY_PROVENANCE[f.name])
    geom = None
    try:
        geom = GripperGeometry(**geom_kw)
    except ValueError as exc:
        r.problems.append(f"gripper: {exc}")

    # preload
    level_text = r.get("preload", "level", "medium")
    level = None
    try:
        level = PreloadLevel(level_text.lower())
    except ValueError:
        r.problems.append(f"preload.level: {level_text!r} is not one of low, medium, high, custom")
    ratio = r.get("preload", "kinetic_ratio", presets.KINETIC_RATIO)
    tau_th = r.get("preload", "tau_th")
    max_sf = r.get("preload", "tau_pl_max_sf")
    kf = r.get("preload", "tau_pl_kf")
    preload = None
    if level is not None and geom is not None:
        if level is not PreloadLevel.CUSTOM:
            for key, val in (("tau_th", tau_th), ("tau_pl_max_sf", max_sf), ("tau_pl_kf", kf)):
                if val is not None:
                    r.problems.append(f"preload.{key}: only allowed with level = custom")
            tau_th = presets.TAU_TH[level]
            r.provenance["preload.tau_th"] = presets.TAU_TH_PROVENANCE[level]
            max_sf = preload_for_threshold(geom, tau_th)
            kf = ratio * max_sf
            r.provenance["preload.tau_pl_max_sf"] = DER
            r.provenance["preload.tau_pl_kf"] = DER
        elif max_sf is None and tau_th is None:
            r.problems.append("preload: custom level needs tau_pl_max_sf (with tau_pl_kf) or tau_th")
        else:
            if max_sf is None:
                max_sf = preload_for_threshold(geom, tau_th)
                r.provenance["preload.tau_pl_max_sf"] = DER
            if kf is None:
                kf = ratio * max_sf
                r.provenance["preload.tau_pl_kf"] = DER
        if max_sf is not None and kf is not None:
            try:
                preload = PreloadSpec(tau_pl_max_sf=max_sf, tau_pl_kf=kf, level=level)
            except ValueError as exc:
                r.problems.append(f"preload: {exc}")

    # object
    obj = None
    present = r.get("object", "present", True)
    if present:
        contact = r.require("object", "contact_angle")
        stiffness = r.require("object", "stiffness")
        mu_obj = r.get("object", "mu", presets.REFERENCE_MU, P)
        mu_tip = r.get("object", "mu_tip", 0.133, DER)
        weight = r.get("object", "weight", 0.0)
        try:
            # placeholders keep the other fields checked when a required one is missing
            candidate = ObjectModel(
                contact if contact is not None else 0.0,
                stiffness if stiffness is not None else 1.0,
                mu_obj, mu_tip, weight,
            )
            if contact is not None and stiffness is not None:
                obj = candidate
        except ValueError as exc:
            r.problems.append(f"object: {exc}")
    else:
        for key in ("contact_angle", "stiffness", "mu", "mu_tip", "weight"):
            if r.raw("object", key) is not None:
                r.problems.append(f"object.{key}: not allowed with present = no")

    # motor
    motor = None
    try:
        motor = MotorModel(
            omega=r.get("motor", "omega", 1.0),
            tau_max=r.get("motor", "tau_max", 2.0),
            torque_noise_sigma=r.get("motor", "noise_sigma", 0.0),
            seed=seed if seed is not None else 0,
        )
    except (ValueError, TypeError) as exc:
        r.problems.append(f"motor: {exc}")

    # controller
    controller = None
    th = twist_threshold_torque(geom, preload) if (geom and preload) else None
    detect_default = th - presets.DETECT_MARGIN if th is not None else None
    tau_detect = r.get("controller", "tau_detect", detect_default, DER)
    tau_g = r.get("controller", "tau_g_target", 0.5 * tau_detect if tau_detect else None)
    try:
        controller = ControllerConfig(
            tau_detect=tau_detect,
            tau_g_target=tau_g,
            theta_tw_target=r.get("controller", "theta_tw_target", math.radians(90.0)),
            dt=r.get("controller", "dt", 0.005),
            debounce=r.get("controller", "debounce", 3),
            angle_budget=r.get("controller", "angle_budget", 4 * math.pi),
        )
    except (ValueError, TypeError) as exc:
        r.problems.append(f"controller: {exc}")
    if controller is not None and th is not None and controller.tau_detect > th + 1e-12:
        r.problems.append(
            f"controller.tau_detect: {controller.tau_detect!r} N*m is above the twist threshold {th!r} N*m"
        )

    # payload
    if level is not None and level is not PreloadLevel.CUSTOM:
        f_g = r.get("payload", "f_g", presets.TABLE3_F_G[level], P)
    else:
        fallback = None
        if geom is not None and preload is not None and obj is not None:
            fallback = antipodal_payload(threshold_tip_force(geom, preload), obj.mu_tip)
        f_g = r.get("payload", "f_g", fallback, DER)
        if f_g is None:
            r.problems.append("payload.f_g: required without an object model or a preset level")
    mu = r.get("payload", "mu", presets.REFERENCE_MU, P)

    # run options
    defaults = RunOptions()
    run_kw = {f.name: r.get("run", f.name, getattr(defaults, f.name)) for f in fields(RunOptions)}
    run = RunOptions(**run_kw)
    for lvl in run.levels:
        if lvl not in ("low", "medium", "high"):
            r.problems.append(f"run.levels: {lvl!r} is not low, medium or high")
    if run.ensemble < 0 or run.window < 1 or run.settle < 0:
        r.problems.append("run: ensemble and settle must be >= 0 and window >= 1")
    if not run.tau_step > 0:
        r.problems.append("run.tau_step: must be > 0")

    trace_path = r.get("output", "trace", f"{scenario_id}.trace.csv")
    report_path = r.get("output", "report", f"{scenario_id}.report.json")

    if r.problems:
        raise ConfigError(r.problems, source)
    return ScenarioConfig(
        scenario_id=scenario_id,
        kind=kind,
        seed=seed,
        geom=geom,
        preload=preload,
        kinetic_ratio=ratio,
        obj=obj,
        motor=motor,
        controller=controller,
        f_g=f_g,
        mu=mu,
        run=run,
        trace_path=trace_path,
        report_path=report_path,
        provenance=dict(sorted(r.provenance.items())),
    )


def dump_config(cfg: ScenarioConfig) -> str:
    """Write a resolved config back out with every value explicit, in SI."""
    out: list[str] = []

    def put(section: str, key: str, value) -> None:
        kind, dim = SCHEMA[section][key]
        if kind == "q":
            text = format_quantity(value, dim)
        elif kind == "ql":
            text = " ".join(repr(float(v)) for v in value) + f" {format_quantity(0, dim).split()[-1]}"
        elif kind == "fl":
            text = " ".join(repr(float(v)) for v in value)
        elif kind == "sl":
            text = " ".join(value)
        elif kind == "b":
            text = "yes" if value else "no"
        elif kind == "f":
            text = repr(float(value))
        else:
            text = str(value)
        out.append(f"{key} = {text}")

    out.append("[scenario]")
    put("scenario", "id", cfg.scenario_id)
    put("scenario", "kind", cfg.kind)
    put("scenario", "seed", cfg.seed)

    out.append("\n[gripper]")
    for f in fields(GripperGeometry):
        put("gripper", f.name, getattr(cfg.geom, f.name))

    out.append("\n[preload]")
    put("preload", "level", cfg.preload.level.value)
    put("preload", "kinetic_ratio", cfg.kinetic_ratio)
    if cfg.preload.level is PreloadLevel.CUSTOM:
        put("preload", "tau_pl_max_sf", cfg.preload.tau_pl_max_sf)
        put("preload", "tau_pl_kf", cfg.preload.tau_pl_kf)

    out.append("\n[object]")
    put("object", "present", cfg.obj is not None)
    if cfg.obj is not None:
        put("object", "contact_angle", cfg.obj.contact_angle)
        put("object", "stiffness", cfg.obj.stiffness)
        put("object", "mu", cfg.obj.mu)
        put("object", "mu_tip", cfg.obj.mu_tip)
        put("object", "weight", cfg.obj.weight)

    out.append("\n[motor]")
    put("motor", "omega", cfg.motor.omega)
    put("motor", "tau_max", cfg.motor.tau_max)
    put("motor", "noise_sigma", cfg.motor.torque_noise_sigma)

    out.append("\n[controller]")
    c = cfg.controller
    for key in ("tau_detect", "tau_g_target", "theta_tw_target", "dt", "debounce", "angle_budget"):
        put("controller", key, getattr(c, key))

    out.append("\n[payload]")
    put("payload", "f_g", cfg.f_g)
    put("payload", "mu", cfg.mu)

    out.append("\n[run]")
    for f in fields(RunOptions):
        put("run", f.name, getattr(cfg.run, f.name))

    out.append("\n[output]")
    put("output", "trace", cfg.trace_path)
    put("output", "report", cfg.report_path)
    return "\n".join(out) + "\n"


def reference_config_path(level: str = "medium") -> Path:
    return Path(__file__).parent / "configs" / f"{level}.cfg"
