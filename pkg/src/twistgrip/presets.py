"""Reference parameter values and where each one comes from.

``PAPER`` values are published measurements or settings, ``DERIVED`` values
are computed from published ones, and ``DEFAULT`` values are choices made
for this package where nothing was published.
"""

from __future__ import annotations

import math

from .mechanism import GripperGeometry, PreloadLevel, PreloadSpec, preload_for_threshold

PAPER = "paper"
DERIVED = "derived"
DEFAULT = "default"

GEOMETRY_PROVENANCE = {
    "l_tip": PAPER,
    "l_2b": PAPER,
    "r_2out": PAPER,
    "r_2in": PAPER,
    "r_4": PAPER,
    "l_2a": DEFAULT,
    "l_2c": DEFAULT,
    "r_f": DEFAULT,
    "g_finger": DEFAULT,
    "g_wrist": DEFAULT,
    "theta_close": DEFAULT,
    "tip_stiffness": DEFAULT,
}

# Antipodal payload at each preload level, newtons.
TABLE3_F_G = {
    PreloadLevel.LOW: 2.2,
    PreloadLevel.MEDIUM: 3.9,
    PreloadLevel.HIGH: 5.7,
}

# Twist-activation motor torque per level. Only the medium value is published;
# low and high are scaled from it by the payload ratios 2.2 : 3.9 : 5.7.
TAU_TH = {
    PreloadLevel.LOW: 0.62,
    PreloadLevel.MEDIUM: 1.1,
    PreloadLevel.HIGH: 1.61,
}
TAU_TH_PROVENANCE = {
    PreloadLevel.LOW: DERIVED,
    PreloadLevel.MEDIUM: PAPER,
    PreloadLevel.HIGH: DERIVED,
}

# Kinetic over static friction on the gearbox; gives the small torque drop
# when twisting starts.
KINETIC_RATIO = 0.97

# Detection threshold sits this far below tau_th. It has to be more than one
# step's torque increment (10 N*m/rad * 0.005 rad) and less than two.
DETECT_MARGIN = 0.06

REFERENCE_MU = 0.3
REFERENCE_NOISE_SIGMA = 0.02


def reference_geometry() -> GripperGeometry:
    return GripperGeometry()


def preload_for_level(
    level: PreloadLevel | str,
    geom: GripperGeometry | None = None,
    kinetic_ratio: float = KINETIC_RATIO,
) -> PreloadSpec:
    """Preload whose twist threshold matches the reference value for ``level``."""
    level = PreloadLevel(level)
    if level is PreloadLevel.CUSTOM:
        raise ValueError("a custom preload has no reference values")
    geom = geom if geom is not None else reference_geometry()
    max_sf = preload_for_threshold(geom, TAU_TH[level])
    return PreloadSpec(tau_pl_max_sf=max_sf, tau_pl_kf=kinetic_ratio * max_sf, level=level)


def detect_threshold(level: PreloadLevel | str) -> float:
    return TAU_TH[PreloadLevel(level)] - DETECT_MARGIN


REFERENCE_CONTACT_ANGLE = math.radians(60.0)
REFERENCE_STIFFNESS = 400.0 / 3.0  # N/rad, so the torque rises 10 N*m per motor radian

# Published payload estimates at mu = 0.3: amplification per wrap count, its
# printed rounding, and the payload in newtons for each preload level.
TABLE4_AMPLIFICATION = {0.5: 1.6, 1.0: 4.1, 2.0: 27.1, 3.0: 178.0}
TABLE4_AMPLIFICATION_TOL = {0.5: 0.05, 1.0: 0.05, 2.0: 0.05, 3.0: 0.5}
TABLE4_F_OBJ = {
    PreloadLevel.LOW: {0.5: 3.5, 1.0: 9.0, 2.0: 59.6, 3.0: 392.0},
    PreloadLevel.MEDIUM: {0.5: 6.3, 1.0: 16.0, 2.0: 105.0, 3.0: 695.0},
    PreloadLevel.HIGH: {0.5: 9.2, 1.0: 23.6, 2.0: 155.0, 3.0: 1022.0},
}
TABLE4_F_OBJ_RTOL = 0.015

# Measured posturing accuracy: target twist (deg) -> (mean, std) in degrees.
TABLE1_POSTURE = {90.0: (89.5, 0.2), 180.0: (179.6, 0.3), 270.0: (269.9, 0.6), 360.0: (359.7, 0.3)}
