"""Closed-form statics of the differential gear train.

Everything here is a pure function of the geometry and the applied load.
Lengths are in meters, forces in newtons and torques in newton-meters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields


class PreloadLevel(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GripperGeometry:
    """Lever arms and pitch radii of the drive train.

    ``l_2a``, ``l_2b`` and ``l_2c`` are measured from the gear-1 axis to the
    points where the input, output and gearbox forces act on gear 2.
    ``g_finger`` and ``g_wrist`` are lumped ratios (gear-4 angle per motor
    angle while grasping, rotation-unit angle per motor angle while twisting).
    ``theta_close`` and ``tip_stiffness`` describe the empty gripper closing
    onto its own fingertips.
    """

    l_tip: float = 0.050
    l_2a: float = 0.010
    l_2b: float = 0.018
    l_2c: float = 0.014
    r_2in: float = 0.012
    r_2out: float = 0.010
    r_4: float = 0.010
    r_f: float = 0.010
    g_finger: float = 1.0
    g_wrist: float = 1.0
    theta_close: float = math.radians(90.0)
    tip_stiffness: float = 400.0 / 3.0

    def __post_init__(self):
        bad = [f.name for f in fields(self) if not getattr(self, f.name) > 0]
        if bad:
            raise ValueError(f"geometry values must be strictly positive: {', '.join(bad)}")


@dataclass(frozen=True)
class PreloadSpec:
    """Friction torques the preloader applies to the gearbox."""

    tau_pl_max_sf: float
    tau_pl_kf: float
    level: PreloadLevel = PreloadLevel.CUSTOM

    def __post_init__(self):
        if not 0.0 <= self.tau_pl_kf <= self.tau_pl_max_sf:
            raise ValueError(
                f"need 0 <= tau_pl_kf <= tau_pl_max_sf, got kf={self.tau_pl_kf!r}, "
                f"max_sf={self.tau_pl_max_sf!r}"
            )


@dataclass(frozen=True)
class Gear2Forces:
    f_2in: float
    f_2out: float
    f_gb: float

    def residuals(self, geom: GripperGeometry) -> tuple[float, float]:
        """Both rows of the gear-2 moment balance; zero when in equilibrium."""
        row1 = geom.l_2a * self.f_2in + geom.l_2b * self.f_2out - geom.l_2c * self.f_gb
        row2 = geom.r_2in * self.f_2in - geom.r_2out * self.f_2out
        return row1, row2


def alpha1(geom: GripperGeometry) -> float:
    """Motor torque per unit tip force, in meters."""
    return (geom.l_tip * geom.l_2b * geom.r_2out) / (geom.r_2in * geom.r_4)


def alpha2(geom: GripperGeometry) -> float:
    """Gearbox force on gear 2 per unit tip force (dimensionless)."""
    num = geom.l_tip * (geom.l_2a * geom.r_2out + geom.l_2b * geom.r_2in)
    return num / (geom.l_2c * geom.r_2in * geom.r_4)


def solve_gear2(geom: GripperGeometry, f_tip: float) -> Gear2Forces:
    if f_tip < 0:
        raise ValueError(f"f_tip must be non-negative, got {f_tip!r}")
    f_2out = geom.l_tip * f_tip / geom.r_4
    f_2in = geom.r_2out / geom.r_2in * f_2out
    f_gb = (geom.l_2a * f_2in + geom.l_2b * f_2out) / geom.l_2c
    return Gear2Forces(f_2in, f_2out, f_gb)


def motor_torque_from_tip_force(geom: GripperGeometry, f_tip: float) -> float:
    if f_tip < 0:
        raise ValueError(f"f_tip must be non-negative, got {f_tip!r}")
    return alpha1(geom) * f_tip


def tip_force_from_motor_torque(geom: GripperGeometry, tau_m: float) -> float:
    if tau_m < 0:
        raise ValueError(f"tau_m must be non-negative, got {tau_m!r}")
    return tau_m / alpha1(geom)


def gearbox_ratio(geom: GripperGeometry) -> float:
    """Gearbox torque per unit tip force. Both gear-2 pairs push on the box."""
    return 2.0 * geom.l_2c * alpha2(geom)


def gearbox_torque(geom: GripperGeometry, f_tip: float) -> float:
    if f_tip < 0:
        raise ValueError(f"f_tip must be non-negative, got {f_tip!r}")
    return gearbox_ratio(geom) * f_tip


def threshold_tip_force(geom: GripperGeometry, preload: PreloadSpec) -> float:
    """Tip force above which static friction on the gearbox lets go."""
    return preload.tau_pl_max_sf / gearbox_ratio(geom)


def twisting_tip_force(geom: GripperGeometry, preload: PreloadSpec) -> float:
    """Tip force held while the rotation unit slides against kinetic friction."""
    return preload.tau_pl_kf / gearbox_ratio(geom)


def twist_threshold_torque(geom: GripperGeometry, preload: PreloadSpec) -> float:
    """Motor torque at which twisting activates (tau_th)."""
    return alpha1(geom) / gearbox_ratio(geom) * preload.tau_pl_max_sf


def twist_const_torque(geom: GripperGeometry, preload: PreloadSpec) -> float:
    """Motor torque while twisting with no external wrist load (tau_const)."""
    return alpha1(geom) * preload.tau_pl_kf / gearbox_ratio(geom)


def preload_for_threshold(geom: GripperGeometry, tau_th: float) -> float:
    """Static friction torque that puts the twist threshold at ``tau_th``."""
    return tau_th * gearbox_ratio(geom) / alpha1(geom)


def available_twist_torque(tau_m_max: float, tau_const: float) -> float:
    """External torque the wrist can still exert while twisting (tau_tw)."""
    if tau_m_max < tau_const:
        raise ValueError(
            f"motor limit {tau_m_max!r} N*m cannot sustain twisting at {tau_const!r} N*m"
        )
    return tau_m_max - tau_const
