"""Floating point flows and section maps.

Nothing here is rigorous. The routines produce orbits, crossing points and
derivatives that the validated layers then have to confirm.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.integrate import solve_ivp

from fhnwave.dynamics import FhnParams, PolynomialField, SlowFastField
from fhnwave.errors import NoCrossing, StepUnderflow
from fhnwave.integrator import as_field

if TYPE_CHECKING:
    from fhnwave.integrator import FieldLike
    from fhnwave.poincare import AffineSection
    from fhnwave.typing import Direction, FloatArray

logger = logging.getLogger(__name__)

FloatRhs = Callable[[float, "FloatArray"], "FloatArray"]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """Sampled float trajectory: times ``t`` of shape ``(m,)`` and states ``(m, n)``."""

    t: FloatArray
    x: FloatArray

    @property
    def end(self) -> FloatArray:
        return self.x[-1]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])


@dataclass(frozen=True)
class FloatCrossing:
    """A float section crossing with optional derivative in section coordinates."""

    state: FloatArray
    point: FloatArray
    time: float
    derivative: FloatArray | None = None


def float_rhs(field: FieldLike | FloatRhs, direction: Direction = "forward") -> FloatRhs:
    """A ``solve_ivp`` right-hand side for a field, evaluated at coefficient midpoints."""
    if isinstance(field, FhnParams | PolynomialField | SlowFastField):
        poly = as_field(field)

        def rhs(t: float, x: FloatArray) -> FloatArray:
            del t
            return poly.eval_float(x)

    else:
        rhs = field

    if direction == "backward":
        return lambda t, x: -rhs(t, x)
    return rhs


def _variational_rhs(field: FieldLike, direction: Direction) -> FloatRhs:
    poly = as_field(field)
    sign = -1.0 if direction == "backward" else 1.0
    n = poly.dim

    def rhs(t: float, y: FloatArray) -> FloatArray:
        del t
        x, phi = y[:n], y[n:].reshape(n, n)
        dx = sign * poly.eval_float(x)
        dphi = sign * poly.jacobian_float(x) @ phi
        return np.concatenate([dx, dphi.reshape(-1)])

    return rhs


def _solve(rhs: FloatRhs, x0: FloatArray, t_end: float, tol: float, **kwargs: Any) -> Any:
    sol = solve_ivp(rhs, (0.0, t_end), x0, method="DOP853", rtol=tol, atol=tol, **kwargs)
    if sol.status < 0:
        raise StepUnderflow(f"float integration failed: {sol.message}")
    return sol


def rk_orbit(
    x0: Any,
    field: FieldLike | FloatRhs,
    t_end: float,
    tol: float = DEFAULT_TOL,
    *,
    direction: Direction = "forward",
    max_step: float = np.inf,
    samples: int | None = None,
) -> Trajectory:
    """Integrate with the embedded 8(5,3) Runge-Kutta pair of Dormand and Prince.

    Args:
        x0: Initial state.
        field: A supported field object or a plain ``f(t, x)`` callable.
        t_end: Final time, positive.
        tol: Relative and absolute local tolerance.
        direction: ``"backward"`` integrates the negated field.
        max_step: Upper bound of the step size.
        samples: Evaluate the dense output on this many equidistant times
            instead of returning the accepted steps.

    Raises:
        StepUnderflow: The solver gave up, typically in a stiff region.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    kwargs: dict[str, Any] = {"max_step": max_step}
    if samples is not None:
        kwargs["t_eval"] = np.linspace(0.0, t_end, samples)
    sol = _solve(float_rhs(field, direction), x0, t_end, tol, **kwargs)
    logger.debug("float orbit over t=%g in %d samples (%d rhs calls)", t_end, sol.t.size, sol.nfev)
    return Trajectory(sol.t, sol.y.T.copy())


def _section_event(section: AffineSection, x0: FloatArray, n: int) -> Callable[..., float]:
    normal = np.asarray(section.normal, dtype=np.float64)
    origin = np.asarray(section.origin, dtype=np.float64)
    sign = float(section.crossing_sign)
    # a start on (or past) the section is disarmed at t = 0 so it is not reported
    armed = sign * float(normal @ (x0[:n] - origin)) < 0

    def event(t: float, y: FloatArray) -> float:
        value = sign * float(normal @ (y[:n] - origin))
        if t == 0.0 and not armed:
            return 1.0
        return value

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = 1.0  # type: ignore[attr-defined]
    return event


def float_section_map(
    x0: Any,
    field: FieldLike,
    section: AffineSection,
    *,
    t_max: float = 1e4,
    tol: float = DEFAULT_TOL,
    direction: Direction = "forward",
    tangent: FloatArray | None = None,
) -> FloatCrossing:
    """First crossing of ``section`` in its crossing direction.

    With ``tangent`` (columns of source directions) the variational equation
    is integrated along and the derivative of the section map is returned in
    destination section coordinates::

        DP = proj (I - F g^T / <g, F>) Phi tangent

    Raises:
        NoCrossing: No crossing before ``t_max``.
        StepUnderflow: The solver gave up.
    """
    if section.batch_shape:
        raise ValueError("float section maps take a single section")
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[-1]
    dst = section.reversed() if direction == "backward" else section
    if tangent is None:
        rhs = float_rhs(field, direction)
        y0 = x0
    else:
        rhs = _variational_rhs(field, direction)
        y0 = np.concatenate([x0, np.eye(n).reshape(-1)])
    sol = _solve(rhs, y0, t_max, tol, events=_section_event(dst, x0, n))
    if sol.status != 1 or not sol.t_events[0].size:
        raise NoCrossing(f"no float crossing before t={t_max:g}")
    y = sol.y_events[0][0]
    time = float(sol.t_events[0][0])
    state = y[:n]
    projection = np.linalg.inv(np.concatenate([section.frame, section.normal[:, None]], axis=-1))
    point = projection[:-1] @ (state - section.origin)
    derivative = None
    if tangent is not None:
        phi = y[n:].reshape(n, n)
        f = rhs(time, y)[:n]
        g = projection[-1]
        flux = float(g @ f)
        if flux == 0.0:
            raise NoCrossing("float crossing is tangential")
        derivative = projection[:-1] @ (np.eye(n) - np.outer(f, g) / flux) @ phi @ tangent
    return FloatCrossing(state, point, time, derivative)


__all__ = [
    "DEFAULT_TOL",
    "FloatCrossing",
    "FloatRhs",
    "Trajectory",
    "float_rhs",
    "float_section_map",
    "rk_orbit",
]
