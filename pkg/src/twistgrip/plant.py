"""Quasi-static simulation of the single-motor gripper.

The plant advances the motor angle and splits the motion between the finger
side and the rotation unit according to which of the three states it is in:

* ``A``  fingers close freely, no load on the motor;
* ``B``  fingertips loaded, torque rises with the contact spring, wrist fixed;
* ``C``  static friction on the gearbox has let go, the wrist turns and the
  motor holds the constant kinetic-friction torque.

Only :class:`Telemetry` (time, motor angle, noisy torque) is meant to be seen
by a controller.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .mechanism import (
    GripperGeometry,
    PreloadSpec,
    alpha1,
    gearbox_ratio,
    threshold_tip_force,
    twist_const_torque,
    twist_threshold_torque,
    twisting_tip_force,
)


# motor-angle slack below which leftover motion is rounding noise
_EPS = 1e-12


class Mode(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"


class Direction(enum.IntEnum):
    FORWARD = 1
    REVERSE = -1


@dataclass(frozen=True)
class ObjectModel:
    """Grasped object, linearised in motor-angle space.

    ``contact_angle`` is the motor angle at which the fingertips first touch
    the object and ``stiffness`` the tip force gained per radian of motor
    angle beyond it. ``wraps`` is False for the empty gripper closing onto its
    own fingertips, in which case twisting winds nothing up.
    """

    contact_angle: float
    stiffness: float
    mu: float = 0.3
    mu_tip: float = 0.133
    weight: float = 0.0
    wraps: bool = True

    def __post_init__(self):
        problems = []
        if not self.contact_angle >= 0:
            problems.append(f"contact_angle must be >= 0, got {self.contact_angle!r}")
        if not self.stiffness > 0:
            problems.append(f"stiffness must be > 0, got {self.stiffness!r}")
        if not 0 < self.mu < 1:
            problems.append(f"mu must lie in (0, 1), got {self.mu!r}")
        if not self.mu_tip > 0:
            problems.append(f"mu_tip must be > 0, got {self.mu_tip!r}")
        if not self.weight >= 0:
            problems.append(f"weight must be >= 0, got {self.weight!r}")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def fingertips(cls, geom: GripperGeometry) -> "ObjectModel":
        """The empty gripper: fingertips pressing on each other."""
        return cls(contact_angle=geom.theta_close, stiffness=geom.tip_stiffness, wraps=False)


@dataclass(frozen=True)
class MotorModel:
    omega: float = 1.0
    tau_max: float = 2.0
    torque_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        problems = []
        if not self.omega > 0:
            problems.append(f"omega must be > 0, got {self.omega!r}")
        if not self.tau_max > 0:
            problems.append(f"tau_max must be > 0, got {self.tau_max!r}")
        if not self.torque_noise_sigma >= 0:
            problems.append(f"torque_noise_sigma must be >= 0, got {self.torque_noise_sigma!r}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class PlantState:
    t: float
    theta_m: float
    theta_f: float  # motor angle spent on the finger side
    theta_w: float
    wrap_angle: float
    f_tip: float
    tau_m_true: float
    mode: Mode
    aperture: float  # gear-4 opening angle left before fingertip self-contact
    stalled: bool = False
    step: int = 0


@dataclass(frozen=True)
class Telemetry:
    t: float
    theta_m: float
    tau_m_meas: float
    mode_opaque: Mode = field(repr=False, compare=False)


class Plant:
    """Static configuration of one simulated gripper plus its transition rule."""

    def __init__(
        self,
        geom: GripperGeometry,
        preload: PreloadSpec,
        obj: ObjectModel | None,
        motor: MotorModel,
    ):
        self.geom = geom
        self.preload = preload
        self.obj = obj if obj is not None else ObjectModel.fingertips(geom)
        self.motor = motor

        self.alpha1 = alpha1(geom)
        self.gb_ratio = gearbox_ratio(geom)
        self.f_threshold = threshold_tip_force(geom, preload)
        self.f_twist = twisting_tip_force(geom, preload)
        self.tau_th = twist_threshold_torque(geom, preload)
        self.tau_const = twist_const_torque(geom, preload)

    def initial_state(self) -> PlantState:
        return PlantState(
            t=0.0,
            theta_m=0.0,
            theta_f=0.0,
            theta_w=0.0,
            wrap_angle=0.0,
            f_tip=0.0,
            tau_m_true=0.0,
            mode=Mode.A,
            aperture=self._aperture(0.0),
        )

    def _aperture(self, theta_f: float) -> float:
        return max(0.0, self.geom.g_finger * (self.geom.theta_close - theta_f))

    def _spring(self, theta_f: float) -> float:
        return self.obj.stiffness * max(0.0, theta_f - self.obj.contact_angle)

    def step(self, state: PlantState, direction: Direction, dt: float) -> PlantState:
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        direction = Direction(direction)
        dtheta = self.motor.omega * dt
        if direction is Direction.FORWARD:
            nxt = self._forward(state, dtheta)
        else:
            nxt = self._reverse(state, dtheta)
        nxt = replace(nxt, t=state.t + dt, step=state.step + 1)
        if abs(nxt.tau_m_true) > self.motor.tau_max:
            # the motor cannot produce the torque: it holds position at its limit
            return replace(
                state,
                t=state.t + dt,
                step=state.step + 1,
                tau_m_true=self.motor.tau_max * (1 if nxt.tau_m_true > 0 else -1),
                stalled=True,
            )
        return nxt

    def _twisting(self, state: PlantState, dtheta: float, sign: int) -> PlantState:
        dw = self.geom.g_wrist * dtheta
        wrap = state.wrap_angle + dw if (sign > 0 and self.obj.wraps) else state.wrap_angle
        return replace(
            state,
            theta_m=state.theta_m + sign * dtheta,
            theta_w=state.theta_w + sign * dw,
            wrap_angle=wrap,
            f_tip=self.f_twist if sign > 0 else state.f_tip,
            tau_m_true=sign * self.tau_const,
            mode=Mode.C,
            stalled=False,
        )

    def _forward(self, state: PlantState, dtheta: float) -> PlantState:
        if state.mode is Mode.C:
            return self._twisting(state, dtheta, +1)
        theta_f = state.theta_f + dtheta
        if theta_f < self.obj.contact_angle:
            return replace(
                state,
                theta_m=state.theta_m + dtheta,
                theta_f=theta_f,
                f_tip=0.0,
                tau_m_true=0.0,
                mode=Mode.A,
                aperture=self._aperture(theta_f),
                stalled=False,
            )
        f_tip = self._spring(theta_f)
        if self.gb_ratio * f_tip > self.preload.tau_pl_max_sf:
            # static friction lets go; the fingers stay where they were
            return self._twisting(state, dtheta, +1)
        return replace(
            state,
            theta_m=state.theta_m + dtheta,
            theta_f=theta_f,
            f_tip=f_tip,
            tau_m_true=self.alpha1 * f_tip,
            mode=Mode.B,
            aperture=self._aperture(theta_f),
            stalled=False,
        )

    def _reverse(self, state: PlantState, dtheta: float) -> PlantState:
        g = self.geom.g_wrist
        if state.wrap_angle > 0:
            # a wrapped object locks the fingers, so the wrist unwinds first
            unwind = min(dtheta, state.wrap_angle / g)
            wrap = state.wrap_angle - g * unwind
            state = replace(self._twisting(state, unwind, -1), wrap_angle=wrap if wrap > g * _EPS else 0.0)
            dtheta -= unwind
            if dtheta <= _EPS:
                return state
        opening = min(dtheta, state.theta_f)
        theta_f = state.theta_f - opening
        f_tip = min(self._spring(theta_f), state.f_tip)
        state = replace(
            state,
            theta_m=state.theta_m - opening,
            theta_f=theta_f,
            f_tip=f_tip,
            tau_m_true=self.alpha1 * f_tip,
            mode=Mode.B if (f_tip > 0 or theta_f == self.obj.contact_angle) else Mode.A,
            aperture=self._aperture(theta_f),
            stalled=False,
        )
        if dtheta - opening > _EPS:
            # fingers against the open stop: the rest of the motion turns the wrist back
            state = self._twisting(state, dtheta - opening, -1)
        return state


class TorqueSensor:
    """Simulated torque sensing: ground truth plus seeded Gaussian noise.

    Draws are taken from one generator in blocks so a given seed always yields
    the same noise sequence for the same sequence of reads.
    """

    _BLOCK = 4096

    def __init__(self, motor: MotorModel):
        self.sigma = motor.torque_noise_sigma
        self._rng = np.random.default_rng(motor.seed)
        self._buf = np.empty(0)
        self._pos = 0

    def _noise(self) -> float:
        if self.sigma == 0:
            return 0.0
        if self._pos >= self._buf.size:
            self._buf = self._rng.standard_normal(self._BLOCK) * self.sigma
            self._pos = 0
        e = float(self._buf[self._pos])
        self._pos += 1
        return e

    def read(self, state: PlantState) -> Telemetry:
        return Telemetry(
            t=state.t,
            theta_m=state.theta_m,
            tau_m_meas=state.tau_m_true + self._noise(),
            mode_opaque=state.mode,
        )


def plant_observe(state: PlantState, sensor: TorqueSensor) -> Telemetry:
    return sensor.read(state)
