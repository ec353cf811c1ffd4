"""The singular skeleton of the traveling-wave system.

At ``eps = 0`` a wave is a loop of fast fronts between the outer branches of
the cubic ``w = u (u - a)(1 - u)`` and slow drifts along those branches. The
fronts exist only for special ``w`` (and ``theta``); they are located by
shooting from the linearized saddle manifolds to the line ``u = u_mid`` and
bisecting the gap between the two arrival speeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import bisect

from fhnwave.dynamics import fast_eigenframe, fast_eigenvalues, fhn_rhs
from fhnwave.dynamics.fhn import A_FLOAT
from fhnwave.errors import NoSignChange

if TYPE_CHECKING:
    from collections.abc import Callable

    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)

SHOOT_OFFSET = 1e-6
SHOOT_TOL = 1e-12
SHOOT_T_MAX = 500.0
BISECTION_TOL = 1e-8
SCAN_POINTS = 48
THETA_SEARCH = (0.5, 2.5)
CORNERS = ("DL", "UL", "UR", "DR")


def fold_values(a: float = A_FLOAT) -> tuple[float, float]:
    """``w`` at the two folds of the cubic, where the outer branches end."""
    roots = np.sort(np.roots([-3.0, 2.0 * (1.0 + a), -a]).real)
    values = roots * (roots - a) * (1.0 - roots)
    return float(values[0]), float(values[1])


def branches(w: float, a: float = A_FLOAT) -> tuple[float, float, float]:
    """Lower, middle and upper fast equilibria ``u`` at ``w``."""
    roots = np.roots([-1.0, 1.0 + a, -a, -w])
    real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    if real.size != 3:
        raise ValueError(f"w={w:g} lies outside the folds of the cubic")
    return float(real[0]), float(real[1]), float(real[2])


@dataclass(frozen=True)
class FrontShot:
    """Arrival of one shot at ``u = u_mid``: ``progress`` is ``|v|`` there, or minus
    the distance still missing when the shot turned back first."""

    progress: float
    state: FloatArray


def _shoot(
    start: FloatArray, theta: float, u_mid: float, u_dir: float, time_sign: float
) -> FrontShot:
    def rhs(t: float, x: FloatArray) -> FloatArray:
        del t
        return time_sign * fhn_rhs(x, theta, 0.0)

    def arrive(t: float, x: FloatArray) -> float:
        del t
        return u_dir * (x[0] - u_mid)

    def turn(t: float, x: FloatArray) -> float:
        del t
        return time_sign * u_dir * x[1]

    arrive.terminal = True  # type: ignore[attr-defined]
    arrive.direction = 1.0  # type: ignore[attr-defined]
    turn.terminal = True  # type: ignore[attr-defined]
    turn.direction = -1.0  # type: ignore[attr-defined]
    sol = solve_ivp(
        rhs,
        (0.0, SHOOT_T_MAX),
        start,
        method="DOP853",
        rtol=SHOOT_TOL,
        atol=SHOOT_TOL,
        events=(arrive, turn),
    )
    if sol.t_events[0].size:
        state = sol.y_events[0][0]
        return FrontShot(abs(float(state[1])), state)
    end = sol.y_events[1][0] if sol.t_events[1].size else sol.y[:, -1]
    return FrontShot(-abs(u_mid - float(end[0])), end)


@dataclass(frozen=True)
class FrontGap:
    gap: float
    u_mid: float
    crossing: FloatArray


def front_gap(w: float, theta: float, *, up: bool) -> FrontGap:
    """Mismatch of the fast manifolds spanning a front at ``w``.

    ``up`` selects the front from the lower to the upper branch. The gap is the
    arrival speed of the unstable manifold of the departure saddle minus that of
    the stable manifold of the arrival saddle.
    """
    low, _, high = branches(w)
    p, q = (low, high) if up else (high, low)
    u_dir = 1.0 if up else -1.0
    u_mid = 0.5 * (low + high)
    lu_p, _ = fast_eigenvalues(p, theta)
    _, ls_q = fast_eigenvalues(q, theta)
    unstable = np.array([1.0, lu_p]) / np.hypot(1.0, lu_p)
    stable = np.array([1.0, ls_q]) / np.hypot(1.0, ls_q)
    start_u = np.array([p, 0.0, w]) + u_dir * SHOOT_OFFSET * np.append(unstable, 0.0)
    start_s = np.array([q, 0.0, w]) - u_dir * SHOOT_OFFSET * np.append(stable, 0.0)
    forward = _shoot(start_u, theta, u_mid, u_dir, 1.0)
    backward = _shoot(start_s, theta, u_mid, -u_dir, -1.0)
    return FrontGap(forward.progress - backward.progress, u_mid, forward.state)


def _root(fn: Callable[[float], float], lo: float, hi: float, what: str) -> float:
    grid = np.linspace(lo, hi, SCAN_POINTS)
    values = [fn(float(x)) for x in grid]
    for x0, x1, f0, f1 in zip(grid, grid[1:], values, values[1:], strict=False):
        if f0 == 0.0:
            return float(x0)
        if np.sign(f0) != np.sign(f1):
            return float(bisect(fn, float(x0), float(x1), xtol=BISECTION_TOL))
    raise NoSignChange(f"no sign change of the {what} gap on [{lo:g}, {hi:g}]")


def front_level(theta: float, *, up: bool) -> float:
    """The ``w`` of the front between the outer branches, for fixed ``theta``."""
    w_lo, w_hi = fold_values()
    pad = 1e-3 * (w_hi - w_lo)
    what = "up-front" if up else "down-front"
    return _root(lambda w: front_gap(w, theta, up=up).gap, w_lo + pad, w_hi - pad, what)


def front_speed(w: float = 0.0, bracket: tuple[float, float] = THETA_SEARCH) -> float:
    """The ``theta`` for which an up front exists at the fixed level ``w``."""
    return _root(lambda th: front_gap(w, th, up=True).gap, *bracket, "wave-speed")


@dataclass(frozen=True)
class SingularSkeleton:
    """Corner points, fast eigenframes and front crossings of the singular loop.

    ``w_lower`` is the level of the up front (``w_*``) and ``w_upper`` the level of
    the down front (``w^*``). ``left_crossing`` and ``right_crossing`` are the
    points where the up and the down front pass ``u = u_mid``. In homoclinic
    mode ``theta_c`` is the wave speed found by shooting at ``w_* = 0``.
    """

    theta: float
    w_lower: float
    w_upper: float
    corners: dict[str, FloatArray]
    frames: dict[str, FloatArray]
    left_crossing: FloatArray
    right_crossing: FloatArray
    theta_c: float | None = None
    residuals: dict[str, float] = field(default_factory=dict)

    def corner(self, name: str) -> FloatArray:
        return self.corners[name]

    def frame(self, name: str) -> FloatArray:
        return self.frames[name]


def _corners(w_lower: float, w_upper: float) -> dict[str, FloatArray]:
    dl, _, ul = branches(w_lower)
    dr, _, ur = branches(w_upper)
    return {
        "DL": np.array([dl, 0.0, w_lower]),
        "UL": np.array([ul, 0.0, w_lower]),
        "UR": np.array([ur, 0.0, w_upper]),
        "DR": np.array([dr, 0.0, w_upper]),
    }


def shoot_skeleton(theta: float | None = None) -> SingularSkeleton:
    """Locate the singular loop.

    With ``theta`` given (periodic mode) both front levels are bisected in
    ``w``. Without it (homoclinic mode) the up front is pinned to ``w = 0``, the
    speed ``theta`` is bisected first and the down front level afterwards.

    Raises:
        NoSignChange: A gap function does not change sign on its bracket.
    """
    theta_c: float | None = None
    if theta is None:
        theta_c = front_speed(0.0)
        theta = theta_c
        w_lower = 0.0
        logger.info("wave speed theta_c = %.10f", theta_c)
    else:
        w_lower = front_level(theta, up=True)
    w_upper = front_level(theta, up=False)
    corners = _corners(w_lower, w_upper)
    frames = {name: fast_eigenframe(float(x[0]), theta) for name, x in corners.items()}
    residuals = {
        name: abs(float(x[0] * (x[0] - A_FLOAT) * (1.0 - x[0]) - x[2]))
        for name, x in corners.items()
    }
    left = front_gap(w_lower, theta, up=True)
    right = front_gap(w_upper, theta, up=False)
    logger.info(
        "skeleton at theta=%.8f: w_* = %.9f, w^* = %.9f, front gaps %.1e / %.1e",
        theta,
        w_lower,
        w_upper,
        left.gap,
        right.gap,
    )
    return SingularSkeleton(
        theta, w_lower, w_upper, corners, frames, left.crossing, right.crossing, theta_c, residuals
    )


__all__ = [
    "CORNERS",
    "FrontGap",
    "FrontShot",
    "SingularSkeleton",
    "branches",
    "fold_values",
    "front_gap",
    "front_level",
    "front_speed",
    "shoot_skeleton",
]
