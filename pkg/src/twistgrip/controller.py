"""Torque-monitoring control of the gripper.

The controller sees the plant only through :class:`~twistgrip.plant.Telemetry`
(time, motor angle, measured torque). It grasps by stopping the motor at a
target torque, twists by detecting the torque plateau that marks the start of
wrist rotation and then counting motor angle, and releases by running the
motor backwards to its starting angle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

from .mechanism import GripperGeometry, PreloadLevel, PreloadSpec, alpha1, gearbox_ratio
from .plant import Direction, Plant, PlantState, Telemetry, TorqueSensor


class ControllerError(RuntimeError):
    """Base class for faults raised by the controller."""


class TargetExceedsThreshold(ControllerError):
    pass


class SensingFault(ControllerError):
    pass


class StallFault(ControllerError):
    pass


class NeverActivated(ControllerError):
    pass


class InsufficientSamples(ControllerError):
    pass


class PhaseFault(ControllerError):
    pass


class ControllerPhase(str, enum.Enum):
    CLOSING = "Closing"
    GRASP_HOLD = "GraspHold"
    AWAIT_TWIST = "AwaitTwist"
    TWISTING = "Twisting"
    TWIST_DONE = "TwistDone"
    UNWINDING = "Unwinding"
    OPENING = "Opening"
    DONE = "Done"
    FAULT = "Fault"


_P = ControllerPhase
TRANSITIONS = {
    _P.DONE: {_P.CLOSING},
    _P.CLOSING: {_P.GRASP_HOLD, _P.AWAIT_TWIST},
    _P.GRASP_HOLD: {_P.AWAIT_TWIST, _P.OPENING},
    _P.AWAIT_TWIST: {_P.TWISTING},
    _P.TWISTING: {_P.TWIST_DONE},
    _P.TWIST_DONE: {_P.UNWINDING, _P.OPENING, _P.AWAIT_TWIST},
    _P.UNWINDING: {_P.OPENING},
    _P.OPENING: {_P.DONE},
    _P.FAULT: set(),
}


@dataclass(frozen=True)
class ControllerConfig:
    """Thresholds and targets for one run.

    ``tau_detect`` should sit just below the plant's twist threshold so the
    start of twisting is always caught. ``debounce`` is the number of
    consecutive samples above it needed to confirm the onset.
    ``angle_budget`` bounds how far the motor may turn while searching for
    contact or twist onset.
    """

    tau_detect: float
    tau_g_target: float
    theta_tw_target: float = 0.0
    dt: float = 0.005
    debounce: int = 3
    angle_budget: float = 4 * math.pi

    def __post_init__(self):
        problems = []
        if not 0 < self.tau_g_target < self.tau_detect:
            problems.append(
                f"need 0 < tau_g_target < tau_detect, got {self.tau_g_target!r} and {self.tau_detect!r}"
            )
        if not self.theta_tw_target >= 0:
            problems.append(f"theta_tw_target must be >= 0, got {self.theta_tw_target!r}")
        if not self.dt > 0:
            problems.append(f"dt must be > 0, got {self.dt!r}")
        if self.debounce < 1:
            problems.append(f"debounce must be >= 1, got {self.debounce!r}")
        if not self.angle_budget > 0:
            problems.append(f"angle_budget must be > 0, got {self.angle_budget!r}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class TwistRecord:
    t_c: float
    t_d: float
    theta_m_at_tc: float
    theta_m_at_td: float
    delta_theta_obj: float


@dataclass(frozen=True)
class CalibrationResult:
    preload: PreloadSpec
    tau_const: float
    f_tip_twist: float
    n_samples: int


@dataclass(frozen=True)
class TraceRecord:
    t: float
    theta_m: float
    omega: float
    tau_m_true: float
    tau_m_meas: float
    mode: str
    theta_w: float
    aperture: float
    f_tip: float
    controller_phase: str


TRACE_COLUMNS = (
    "t",
    "theta_m",
    "omega",
    "tau_m_true",
    "tau_m_meas",
    "mode",
    "theta_w",
    "aperture",
    "f_tip",
    "controller_phase",
)


def lift_speed(geom: GripperGeometry, omega_m: float) -> float:
    """Stage speed that keeps pace with the wrap while twisting."""
    if omega_m < 0:
        raise ValueError(f"omega_m must be non-negative, got {omega_m!r}")
    return geom.r_f * omega_m


_ANGLE_EPS = 1e-12

StepCallback = Callable[[Telemetry, float], None]


class GripperController:
    """Runs the grasp / twist / release methodology against one plant.

    Every plant step is logged to :attr:`trace` (ground truth and telemetry
    side by side) and :attr:`telemetry` (what the controller saw).
    """

    def __init__(self, plant: Plant, cfg: ControllerConfig, sensor: TorqueSensor | None = None):
        self.plant = plant
        self.cfg = cfg
        self.sensor = sensor if sensor is not None else TorqueSensor(plant.motor)
        self.state: PlantState = plant.initial_state()
        self.phase = ControllerPhase.DONE
        self.trace: list[TraceRecord] = []
        self.telemetry: list[Telemetry] = []
        # controller-side geometry knowledge; it never reads plant.preload
        self._alpha1 = alpha1(plant.geom)
        self._gb_ratio = gearbox_ratio(plant.geom)
        self._g_wrist = plant.geom.g_wrist
        self._omega = plant.motor.omega
        self._twist_motor_angle = 0.0

    # -- plumbing ---------------------------------------------------------

    def _enter(self, phase: ControllerPhase) -> None:
        if phase is self.phase:
            return
        if phase not in TRANSITIONS[self.phase]:
            prev = self.phase
            self.phase = ControllerPhase.FAULT
            raise PhaseFault(f"illegal phase transition {prev.value} -> {phase.value}")
        self.phase = phase

    def _fail(self, exc: ControllerError) -> ControllerError:
        self.phase = ControllerPhase.FAULT
        return exc

    def _advance(self, direction: Direction, dt: float | None = None) -> Telemetry:
        dt = self.cfg.dt if dt is None else dt
        prev = self.state
        self.state = self.plant.step(prev, direction, dt)
        tel = self.sensor.read(self.state)
        self.telemetry.append(tel)
        s = self.state
        self.trace.append(
            TraceRecord(
                t=s.t,
                theta_m=s.theta_m,
                omega=0.0 if s.stalled else int(direction) * self._omega,
                tau_m_true=s.tau_m_true,
                tau_m_meas=tel.tau_m_meas,
                mode=s.mode.value,
                theta_w=s.theta_w,
                aperture=s.aperture,
                f_tip=s.f_tip,
                controller_phase=self.phase.value,
            )
        )
        if tel.theta_m == prev.theta_m:
            raise self._fail(StallFault(f"motor stopped turning at t={tel.t:.6g} s"))
        return tel

    # -- methodology ------------------------------------------------------

    def grasp_to_force(self, f_tip_target: float) -> tuple[PlantState, ControllerPhase]:
        """Close until the measured torque reaches the torque for ``f_tip_target``."""
        tau_target = self._alpha1 * f_tip_target
        if not f_tip_target > 0:
            raise ValueError(f"f_tip_target must be > 0, got {f_tip_target!r}")
        if tau_target >= self.cfg.tau_detect:
            raise TargetExceedsThreshold(
                f"target torque {tau_target:.4g} N*m is not below the detection "
                f"threshold {self.cfg.tau_detect:.4g} N*m; the wrist would twist"
            )
        if self.phase is not ControllerPhase.CLOSING:
            self._enter(ControllerPhase.CLOSING)
        start = self.state.theta_m
        while True:
            tel = self._advance(Direction.FORWARD)
            if tel.tau_m_meas >= tau_target:
                break
            if tel.theta_m - start > self.cfg.angle_budget:
                raise self._fail(SensingFault("torque never rose; no contact within the angle budget"))
        self._enter(ControllerPhase.GRASP_HOLD)
        return self.state, self.phase

    def _await_onset(self) -> Telemetry:
        """Drive forward until the torque stays above ``tau_detect``.

        Returns the first sample of the confirming run, which is taken as the
        onset of twisting.
        """
        start = self.state.theta_m
        run: list[Telemetry] = []
        while True:
            tel = self._advance(Direction.FORWARD)
            if tel.tau_m_meas > self.cfg.tau_detect:
                run.append(tel)
                if len(run) >= self.cfg.debounce:
                    return run[0]
            else:
                run.clear()
            if tel.theta_m - start > self.cfg.angle_budget:
                raise self._fail(NeverActivated("twisting never started within the angle budget"))

    def twist_to_angle(
        self,
        theta_tw_target: float | None = None,
        on_step: StepCallback | None = None,
    ) -> tuple[PlantState, TwistRecord]:
        """Twist the wrist by ``theta_tw_target`` (defaults to the config value).

        Motor angle is counted from the detected onset; the motor stops on the
        last step that does not overshoot the target.
        """
        target = self.cfg.theta_tw_target if theta_tw_target is None else theta_tw_target
        if not target >= 0:
            raise ValueError(f"theta_tw_target must be >= 0, got {target!r}")
        if self.phase is ControllerPhase.DONE:
            self._enter(ControllerPhase.CLOSING)
        theta_w_before = self.state.theta_w
        self._enter(ControllerPhase.AWAIT_TWIST)
        onset = self._await_onset()
        self._enter(ControllerPhase.TWISTING)

        motor_goal = target / self._g_wrist
        step = self._omega * self.cfg.dt
        eps = 1e-9 * max(1.0, motor_goal)
        v = lift_speed(self.plant.geom, self._omega)
        tel = self.telemetry[-1]
        while tel.theta_m + step - onset.theta_m <= motor_goal + eps:
            tel = self._advance(Direction.FORWARD)
            if on_step is not None:
                on_step(tel, v)
        self._enter(ControllerPhase.TWIST_DONE)
        self._twist_motor_angle += tel.theta_m - onset.theta_m
        record = TwistRecord(
            t_c=onset.t,
            t_d=tel.t,
            theta_m_at_tc=onset.theta_m,
            theta_m_at_td=tel.theta_m,
            delta_theta_obj=self.state.theta_w - theta_w_before,
        )
        return self.state, record

    def calibrate_preload(self, window: int = 500, settle: int = 20) -> CalibrationResult:
        """Estimate the gearbox preload from the torque plateau while twisting.

        The plateau is averaged over ``window`` samples taken ``settle``
        samples after the onset is confirmed. If no onset is seen within the
        angle budget, the trailing window is used instead, provided it is
        flat; a flat zero torque reads as zero preload.
        """
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window!r}")
        if self.phase is ControllerPhase.DONE:
            self._enter(ControllerPhase.CLOSING)
        self._enter(ControllerPhase.AWAIT_TWIST)
        start = self.state.theta_m
        first = len(self.telemetry)
        run = 0
        samples: list[float] | None = None
        while True:
            tel = self._advance(Direction.FORWARD)
            if tel.tau_m_meas > self.cfg.tau_detect:
                run += 1
            else:
                run = 0
            if run >= self.cfg.debounce:
                self._enter(ControllerPhase.TWISTING)
                for _ in range(settle + window):
                    self._advance(Direction.FORWARD)
                samples = [x.tau_m_meas for x in self.telemetry[-window:]]
                break
            if tel.theta_m - start > self.cfg.angle_budget:
                samples = self._flat_tail(first, window)
                break
        tau_const = math.fsum(samples) / len(samples)
        peak = max(x.tau_m_meas for x in self.telemetry[first:])
        kf = max(0.0, self._gb_ratio * tau_const / self._alpha1)
        max_sf = max(kf, self._gb_ratio * peak / self._alpha1)
        if self.phase is ControllerPhase.TWISTING:
            self._enter(ControllerPhase.TWIST_DONE)
            self._twist_motor_angle += self.state.theta_m - start
        return CalibrationResult(
            preload=PreloadSpec(tau_pl_max_sf=max_sf, tau_pl_kf=kf, level=PreloadLevel.CUSTOM),
            tau_const=tau_const,
            f_tip_twist=max(0.0, tau_const) / self._alpha1,
            n_samples=len(samples),
        )

    def _flat_tail(self, first: int, window: int) -> list[float]:
        tail = [x.tau_m_meas for x in self.telemetry[first:][-window:]]
        if len(tail) < max(window, 2):
            raise self._fail(InsufficientSamples(f"only {len(tail)} samples, need {window}"))
        half = len(tail) // 2
        m1 = math.fsum(tail[:half]) / half
        m2 = math.fsum(tail[half:]) / (len(tail) - half)
        mean = math.fsum(tail) / len(tail)
        spread = math.sqrt(math.fsum((x - mean) ** 2 for x in tail) / (len(tail) - 1))
        if abs(m2 - m1) > 8.0 * spread / math.sqrt(len(tail)) + 1e-12:
            raise self._fail(InsufficientSamples("torque still changing; twisting never reached"))
        return tail

    def release(self) -> PlantState:
        """Run the motor backwards to its starting angle.

        A wrapped object unwinds before the fingers can open; the phase
        switches from Unwinding to Opening once the motor has reversed by the
        angle it spent twisting.
        """
        if self.state.theta_m <= 0 and self.phase in (ControllerPhase.DONE, ControllerPhase.CLOSING):
            self.phase = ControllerPhase.DONE
            return self.state
        if self._twist_motor_angle > 0:
            self._enter(ControllerPhase.UNWINDING)
        else:
            self._enter(ControllerPhase.OPENING)
        unwind_until = self.state.theta_m - self._twist_motor_angle
        while self.state.theta_m > _ANGLE_EPS:
            # shorten the step that ends the unwind so it lands on a sample
            stop = unwind_until if self.phase is ControllerPhase.UNWINDING else 0.0
            dt = min(self.cfg.dt, (self.state.theta_m - stop) / self._omega)
            tel = self._advance(Direction.REVERSE, dt)
            if self.phase is ControllerPhase.UNWINDING and tel.theta_m <= unwind_until + 1e-12:
                self._enter(ControllerPhase.OPENING)
        self._enter(ControllerPhase.OPENING)
        self._enter(ControllerPhase.DONE)
        self._twist_motor_angle = 0.0
        return self.state
