"""Parsing of unit-suffixed quantities such as ``50 mm`` or ``1.1 N*m``."""

from __future__ import annotations

import math
import re

G = 9.80665

# dimension -> {suffix: factor to SI}
UNITS: dict[str, dict[str, float]] = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "force": {"N": 1.0, "kgf": G},
    "torque": {"N*m": 1.0, "Nm": 1.0, "N.m": 1.0, "mN*m": 1e-3},
    "stiffness": {"N/rad": 1.0, "N/deg": 180.0 / math.pi},
    "angular_velocity": {"rad/s": 1.0, "deg/s": math.pi / 180.0, "rpm": 2.0 * math.pi / 60.0},
    "time": {"s": 1.0, "ms": 1e-3},
}

# unit written back out for each dimension
SI_UNIT = {
    "length": "m",
    "angle": "rad",
    "force": "N",
    "torque": "N*m",
    "stiffness": "N/rad",
    "angular_velocity": "rad/s",
    "time": "s",
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([^\s\d].*?)?\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text: str, dimension: str) -> float:
    """Convert ``text`` to SI. A unit is mandatory for every dimension."""
    m = _QUANTITY.match(text)
    if not m:
        raise UnitError(f"cannot read {text!r} as a number with a unit")
    value, unit = float(m.group(1)), (m.group(2) or "").replace("·", "*").replace(" ", "")
    table = UNITS[dimension]
    if not unit:
        raise UnitError(f"{text!r} needs a {dimension} unit ({', '.join(table)})")
    if unit not in table:
        raise UnitError(f"unknown {dimension} unit {unit!r} (expected one of {', '.join(table)})")
    return value * table[unit]


def parse_list(text: str, dimension: str | None) -> list[float]:
    """Read ``90 180 270 deg`` style lists; the unit, if any, comes last."""
    parts = text.replace(",", " ").split()
    if not parts:
        raise UnitError("empty list")
    if dimension is None:
        return [float(p) for p in parts]
    unit = parts[-1]
    return [parse_quantity(f"{p} {unit}", dimension) for p in parts[:-1]] if len(parts) > 1 else [
        parse_quantity(parts[0], dimension)
    ]


def format_quantity(value: float, dimension: str | None) -> str:
    if dimension is None:
        return repr(float(value))
    return f"{float(value)!r} {SI_UNIT[dimension]}"
