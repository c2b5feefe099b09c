"""Payload of twist grasping: a thin object wound n times around the fingers.

Tension grows along the wrap like a capstan. In the fully wound model the
wrap splits into an inner section A, pressed on both faces, and an outer
section B, pressed on its inner face only. Both obey ``df/dtheta = mu * f``,
so the payload is ``f_g * exp(-mu*pi/2) * exp(2*mu*pi*n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp


@dataclass(frozen=True)
class TwistGraspQuery:
    f_g: float
    mu: float
    n: float

    def __post_init__(self):
        if not self.f_g > 0:
            raise ValueError(f"f_g must be > 0, got {self.f_g!r}")
        _check_domain(self.mu, self.n)


@dataclass(frozen=True)
class TwistGraspResult:
    beta1: float
    beta2: float
    amplification: float
    f_b: float | None  # only defined for n >= 2
    f_obj: float


@dataclass(frozen=True)
class TensionProfile:
    theta: np.ndarray
    f_t: np.ndarray
    section: tuple[str, ...]
    boundary: float  # wrap angle where section A ends
    f_b: float


def _check_domain(mu: float, n: float) -> None:
    if not 0 < mu < 1:
        raise ValueError(f"mu must lie in (0, 1), got {mu!r}")
    if not n >= 0:
        raise ValueError(f"wrap count must be >= 0, got {n!r}")


def beta1(mu: float) -> float:
    return math.exp(-0.5 * mu * math.pi)


def beta2(mu: float) -> float:
    return math.exp(2.0 * mu * math.pi)


def amplification(mu: float, n: float) -> float:
    """Payload over antipodal payload after ``n`` wraps.

    ``n == 0`` is the plain antipodal grasp and returns 1. Note the jump: the
    closed form is below 1 for ``0 < n < 1/4``.
    """
    _check_domain(mu, n)
    if n == 0:
        return 1.0
    return math.exp(mu * math.pi * (2.0 * n - 0.5))


def section_boundary(n: float) -> tuple[float, float]:
    """Wrap angles where section A ends and where section B ends."""
    return 2 * (n - 2) * math.pi + 1.5 * math.pi, 2 * (n - 1) * math.pi + 1.5 * math.pi


def twist_payload(q: TwistGraspQuery) -> TwistGraspResult:
    amp = amplification(q.mu, q.n)
    f_b = math.exp(2 * q.mu * (q.n - 1.25) * math.pi) * q.f_g if q.n >= 2 else None
    return TwistGraspResult(
        beta1=beta1(q.mu),
        beta2=beta2(q.mu),
        amplification=amp,
        f_b=f_b,
        f_obj=amp * q.f_g,
    )


def _section_a_rate(theta, f, mu):
    # radial balance: f_is - f_os = 2 f sin(dtheta/2) -> f per unit angle
    net_normal = f
    return mu * net_normal


def _section_b_rate(theta, f, mu):
    # only the inner face is pressed: f_is = f per unit angle
    f_is = f
    return mu * f_is


def tension_profile(q: TwistGraspQuery, samples: int = 200, rtol: float = 1e-10) -> TensionProfile:
    """Integrate the tension along the wrap numerically, section by section.

    This does not use the closed form, so its endpoint is an independent
    check of :func:`twist_payload`.
    """
    if q.n < 2:
        raise ValueError(f"sectioned wrap is defined for n >= 2, got {q.n!r}")
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples!r}")
    a_end, b_end = section_boundary(q.n)
    theta = np.linspace(0.0, b_end, samples)
    in_a = theta < a_end
    atol = 1e-14 * q.f_g

    # n >= 2 puts the A/B boundary at 3*pi/2 or beyond
    sol_a = solve_ivp(
        _section_a_rate, (0.0, a_end), [q.f_g], args=(q.mu,),
        t_eval=np.append(theta[in_a], a_end), rtol=rtol, atol=atol, method="DOP853",
    )
    f_b = float(sol_a.y[0, -1])
    sol_b = solve_ivp(
        _section_b_rate, (a_end, b_end), [f_b], args=(q.mu,),
        t_eval=theta[~in_a], rtol=rtol, atol=atol, method="DOP853",
    )
    f_t = np.concatenate([sol_a.y[0, :-1], sol_b.y[0]])
    labels = tuple("A" if a else "B" for a in in_a)
    return TensionProfile(theta=theta, f_t=f_t, section=labels, boundary=a_end, f_b=f_b)


def wraps_required(f_obj_target: float, f_g: float, mu: float, step: float = 0.5) -> float:
    """Smallest wrap count on the grid ``0, step, 2*step, ...`` that holds the target."""
    if not f_obj_target > 0:
        raise ValueError(f"f_obj_target must be > 0, got {f_obj_target!r}")
    if not f_g > 0:
        raise ValueError(f"f_g must be > 0, got {f_g!r}")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step!r}")
    k = 0
    while amplification(mu, k * step) * f_g < f_obj_target:
        k += 1
    return k * step


def antipodal_payload(f_tip: float, mu_tip: float, contacts: int = 2) -> float:
    """Slip load of a plain pinch; a fitted stand-in for measured f_g."""
    if f_tip < 0:
        raise ValueError(f"f_tip must be non-negative, got {f_tip!r}")
    if contacts not in (1, 2):
        raise ValueError(f"contacts must be 1 or 2, got {contacts!r}")
    return contacts * mu_tip * f_tip
