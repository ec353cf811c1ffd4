"""Approximate periodic orbits through a cyclic chain of sections.

An :class:`OrbitGuess` is a loop of anchors with one section per anchor. The
section normals are the normalized differences of consecutive anchors. The
guess is refined by float Newton on the cyclic system of section maps, its
frames are aligned with the stabilized exit and entry directions and its
anchors are respaced by flight time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from fhnwave.dynamics import FhnParams, fhn_rhs
from fhnwave.errors import NewtonDiverged
from fhnwave.newton import cyclic_matrix
from fhnwave.oracle.flow import DEFAULT_TOL, Trajectory, float_section_map, rk_orbit
from fhnwave.oracle.skeleton import (
    SHOOT_OFFSET,
    SingularSkeleton,
    branches,
    shoot_skeleton,
)
from fhnwave.poincare import AffineSection, complement_frame
from fhnwave.utils import run_parallel_sync

if TYPE_CHECKING:
    from fhnwave.integrator import FieldLike
    from fhnwave.oracle.flow import FloatCrossing
    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)

FRAME_TOL = 1e-8
FRAME_LOOPS = 50
REFINE_TOL = 1e-10
# float section maps give up after this multiple of the longest known flight time
FLIGHT_SLACK = 4.0


@dataclass(frozen=True)
class OrbitGuess:
    """A cyclic chain of anchors ``points`` of shape ``(k, 3)`` on ``sections``.

    ``times`` and ``derivatives`` are the float flight times ``S_i -> S_{i+1}``
    and the section map derivatives in section coordinates, known once the
    guess has been refined. ``field`` overrides the FitzHugh-Nagumo field
    built from ``theta`` and ``eps``.
    """

    points: FloatArray
    sections: AffineSection
    eps: float
    theta: float
    times: FloatArray | None = None
    derivatives: FloatArray | None = None
    residual: float | None = None
    field: FieldLike | None = None

    def __post_init__(self) -> None:
        if self.points.ndim != 2 or self.sections.batch_shape != self.points.shape[:1]:
            raise ValueError("an orbit guess needs one section per anchor")
        if self.points.shape[0] < 3:
            raise ValueError("an orbit guess needs at least three anchors")

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def vector_field(self) -> FieldLike:
        return self.field if self.field is not None else FhnParams.create(self.theta, self.eps)

    @property
    def period(self) -> float:
        if self.times is None:
            raise ValueError("the guess has not been refined yet")
        return float(np.sum(self.times))

    def with_eps(self, eps: float) -> OrbitGuess:
        """The same anchors at another ``eps``; flight data is dropped."""
        return replace(self, eps=eps, times=None, derivatives=None, residual=None)


def sections_from_points(points: Any, frames: FloatArray | None = None) -> AffineSection:
    """Sections through ``points`` normal to the chord to the next anchor."""
    points = np.asarray(points, dtype=np.float64)
    chords = np.roll(points, -1, axis=0) - points
    norms = np.linalg.norm(chords, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("consecutive anchors must differ")
    normals = chords / norms
    frames = complement_frame(normals) if frames is None else frames
    return AffineSection.create(points, normals, frames)


def orbit_from_points(
    points: Any, eps: float, theta: float, *, field: FieldLike | None = None
) -> OrbitGuess:
    points = np.asarray(points, dtype=np.float64)
    return OrbitGuess(points, sections_from_points(points), eps, theta, field=field)


def _shoot(
    guess: OrbitGuess, x: FloatArray, i: int, t_max: float, tol: float, derivative: bool
) -> FloatCrossing:
    src = guess.sections.take(i)
    dst = guess.sections.take((i + 1) % guess.k)
    start = src.origin + src.frame @ x[i]
    tangent = src.frame if derivative else None
    return float_section_map(start, guess.vector_field, dst, t_max=t_max, tol=tol, tangent=tangent)


def float_cycle(
    guess: OrbitGuess,
    x: FloatArray | None = None,
    *,
    derivative: bool = True,
    tol: float = DEFAULT_TOL,
    t_max: float | None = None,
    jobs: int = 1,
) -> list[FloatCrossing]:
    """Map every section point ``x_i`` to the next section.

    ``t_max`` defaults to a multiple of the longest known flight time, so a
    trajectory that misses its section fails fast instead of running on.
    """
    if x is None:
        x = np.zeros((guess.k, guess.sections.dim - 1))
    if t_max is None:
        t_max = 1e3 if guess.times is None else FLIGHT_SLACK * float(np.max(guess.times)) + 1.0
    tasks = [partial(_shoot, guess, x, i, t_max, tol, derivative) for i in range(guess.k)]
    return run_parallel_sync(tasks, jobs=jobs)


def refine_orbit(
    guess: OrbitGuess,
    iters: int = 8,
    *,
    tol: float = REFINE_TOL,
    jobs: int = 1,
) -> OrbitGuess:
    """Float Newton on ``P_i(x_i) - x_{i+1} = 0``.

    The corrected points become the new anchors; normals and frames are kept,
    so the sections only slide within their planes.

    Raises:
        NewtonDiverged: The residual grew between two iterations.
        NoCrossing: A float section map missed its section.
    """
    k, d = guess.k, guess.sections.dim - 1
    x = np.zeros((k, d))
    previous = np.inf
    for iteration in range(iters + 1):
        crossings = float_cycle(guess, x, jobs=jobs)
        images = np.stack([c.point for c in crossings])
        blocks = np.stack([c.derivative for c in crossings])
        f = images - np.roll(x, -1, axis=0)
        norm = float(np.max(np.abs(f)))
        logger.debug("refinement %d: residual %.3e over %d sections", iteration, norm, k)
        if norm > previous:
            raise NewtonDiverged(f"residual grew from {previous:.3e} to {norm:.3e}")
        previous = norm
        if norm <= tol or iteration == iters:
            break
        x = x + np.linalg.solve(cyclic_matrix(blocks), -f.reshape(-1)).reshape(k, d)
    if norm > tol:
        logger.warning("refinement stopped at residual %.3e after %d iterations", norm, iters)

    points = guess.sections.origin + np.einsum("kij,kj->ki", guess.sections.frame, x)
    sections = AffineSection(
        points, guess.sections.normal, guess.sections.frame, guess.sections.crossing_sign
    )
    times = np.array([c.time for c in crossings])
    logger.info("refined %d anchors: residual %.3e, period %.6f", k, norm, float(times.sum()))
    return replace(
        guess, points=points, sections=sections, times=times, derivatives=blocks, residual=norm
    )


def _normalized(c: FloatArray, frame: FloatArray) -> FloatArray:
    return c / np.linalg.norm(frame @ c)


def _stabilize(
    steps: list[FloatArray], frames: list[FloatArray], what: str, tol: float, loops: int
) -> list[FloatArray]:
    """Push a vector around the loop until its direction at the start settles.

    ``steps[j]`` maps coordinates on ``frames[j]`` to those on ``frames[j + 1]``
    (cyclically). Returns the settled coordinates on every frame.
    """
    k = len(steps)
    c = _normalized(np.ones(frames[0].shape[-1]), frames[0])
    previous = frames[0] @ c
    for loop in range(loops):
        for j in range(k):
            c = _normalized(steps[j] @ c, frames[(j + 1) % k])
        v = frames[0] @ c
        if min(np.linalg.norm(v - previous), np.linalg.norm(v + previous)) < tol:
            logger.debug("%s direction settled after %d loops", what, loop + 1)
            break
        previous = v
    else:
        logger.warning("%s direction did not settle to %.0e in %d loops", what, tol, loops)
    out = [c]
    for j in range(k - 1):
        c = _normalized(steps[j] @ c, frames[j + 1])
        out.append(c)
    return out


def stabilize_frames(
    guess: OrbitGuess, *, tol: float = FRAME_TOL, loops: int = FRAME_LOOPS, jobs: int = 1
) -> OrbitGuess:
    """Rebuild the section frames from the settled exit and entry directions.

    The exit direction on each section is a unit vector pushed forward by the
    section map derivatives, the entry direction one pulled back by their
    inverses. The new frame is ``[exit, entry]``, projected onto the plane
    orthogonal to the normal; the derivatives are transformed accordingly.
    """
    if guess.derivatives is None:
        guess = refine_orbit(guess, 0, jobs=jobs)
    assert guess.derivatives is not None
    k = guess.k
    frames = list(guess.sections.frame)
    dps = list(guess.derivatives)
    exits = _stabilize(dps, frames, "exit", tol, loops)

    # pulled back around the loop S_0 -> S_{k-1} -> ... -> S_1
    order = [0, *range(k - 1, 0, -1)]
    back_steps = [np.linalg.inv(dps[(i - 1) % k]) for i in order]
    entries_rev = _stabilize(back_steps, [frames[i] for i in order], "entry", tol, loops)
    entries: list[FloatArray] = [np.empty(0)] * k
    for i, c in zip(order, entries_rev, strict=True):
        entries[i] = c

    changes = np.stack([np.stack([e, s], axis=-1) for e, s in zip(exits, entries, strict=True)])
    new_frames = np.einsum("kij,kjl->kil", guess.sections.frame, changes)
    normals = guess.sections.normal
    unit = normals / np.linalg.norm(normals, axis=-1, keepdims=True)
    along = np.einsum("ki,kij->kj", unit, new_frames)
    new_frames = new_frames - unit[:, :, None] * along[:, None, :]

    inv_changes = np.linalg.inv(changes)
    new_dps = np.einsum(
        "kij,kjl,klm->kim", np.roll(inv_changes, -1, axis=0), guess.derivatives, changes
    )
    sections = AffineSection(
        guess.sections.origin, normals, new_frames, guess.sections.crossing_sign
    )
    return replace(guess, sections=sections, derivatives=new_dps)


def resample(
    guess: OrbitGuess, t_min: float, t_max: float, *, tol: float = DEFAULT_TOL
) -> OrbitGuess:
    """Respace the anchors so consecutive flight times fall in ``[t_min, t_max]``.

    Anchors reached sooner than ``t_min`` after the previous kept one are
    dropped; arcs longer than ``t_max``, merged ones included, get equidistant
    (in time) extra anchors. The result carries fresh sections and must be
    refined again.
    """
    if not 0 < t_min < t_max / 2:
        raise ValueError("need 0 < t_min < t_max / 2")
    if guess.times is None:
        raise ValueError("the guess has not been refined yet")
    field = guess.vector_field

    def arc(start: FloatArray, total: float) -> tuple[list[FloatArray], list[float]]:
        # pieces of a split arc are longer than t_max / 2 > t_min
        pieces = max(1, int(np.ceil(total / t_max)))
        inner: list[FloatArray] = []
        if pieces > 1:
            inner = list(rk_orbit(start, field, total, tol, samples=pieces + 1).x[1:-1])
        return inner, [total / pieces] * pieces

    out: list[FloatArray] = [guess.points[0]]
    gaps: list[float] = []
    since = 0.0
    for i in range(guess.k):
        since += float(guess.times[i])
        if since < t_min:
            continue
        inner, pieces = arc(out[-1], since)
        out.extend(inner)
        gaps.extend(pieces)
        if i + 1 < guess.k:
            out.append(guess.points[i + 1])
        since = 0.0
    if since > 0.0:
        if len(out) < 2:
            raise ValueError("the orbit is shorter than t_min")
        # the closing arc is too short: merge it into the previous one
        out.pop()
        inner, pieces = arc(out[-1], gaps.pop() + since)
        out.extend(inner)
        gaps.extend(pieces)
    logger.info("resampled %d anchors into %d", guess.k, len(out))
    return orbit_from_points(np.stack(out), guess.eps, guess.theta, field=guess.field)


def front_arc(
    skeleton: SingularSkeleton, *, up: bool, samples: int, offset: float = 1e-3
) -> FloatArray:
    """Points of a singular front, equidistant in ``u`` between its end corners.

    The front is traced from the departure corner along the unstable
    eigenvector until ``u`` comes within ``offset`` of the arrival corner.
    """
    w = skeleton.w_lower if up else skeleton.w_upper
    start_name, end_name = ("DL", "UL") if up else ("UR", "DR")
    start, end = skeleton.corner(start_name), skeleton.corner(end_name)
    u_dir = 1.0 if up else -1.0
    unstable = skeleton.frame(start_name)[:, 0]
    unstable = unstable / np.linalg.norm(unstable)
    x0 = start + u_dir * SHOOT_OFFSET * np.append(unstable, 0.0)
    theta = skeleton.theta

    def arrive(t: float, x: FloatArray) -> float:
        del t
        return u_dir * (x[0] - end[0]) + offset

    arrive.terminal = True  # type: ignore[attr-defined]
    sol = solve_ivp(
        lambda t, x: fhn_rhs(x, theta, 0.0),
        (0.0, 1e3),
        x0,
        method="DOP853",
        rtol=DEFAULT_TOL,
        atol=DEFAULT_TOL,
        events=arrive,
        dense_output=True,
    )
    u = sol.y[0]
    grid = np.linspace(start[0], end[0], samples + 2)[1:-1]
    order = np.argsort(u_dir * u)
    times = np.interp(u_dir * grid, u_dir * u[order], sol.t[order])
    pts = sol.sol(times).T
    pts[:, 2] = w
    return pts


def slow_arc(
    skeleton: SingularSkeleton, eps: float, *, upper: bool, samples: int
) -> tuple[FloatArray, float]:
    """Points of a slow drift along an outer branch, equidistant in slow time.

    Returns the points and the drift time. On the branch ``u(w)`` the slow
    equation reads ``dw/dt = eps / theta (u - w)``.
    """
    w_a, w_b = (skeleton.w_lower, skeleton.w_upper)
    if not upper:
        w_a, w_b = w_b, w_a
    pick = 2 if upper else 0
    w = np.linspace(w_a, w_b, 401)
    u = np.array([branches(float(wi))[pick] for wi in w])
    rate = eps / skeleton.theta * (u - w)
    elapsed = cumulative_trapezoid(1.0 / rate, w, initial=0.0)
    total = float(elapsed[-1])
    at = np.linspace(0.0, total, samples + 2)[1:-1]
    ws = np.interp(at, elapsed, w)
    us = np.array([branches(float(wi))[pick] for wi in ws])
    return np.stack([us, np.zeros_like(us), ws], axis=-1), total


def seed_orbit(
    eps: float,
    theta: float = 0.61,
    *,
    anchors: int = 212,
    front_points: int = 8,
    skeleton: SingularSkeleton | None = None,
    refine: bool = True,
    iters: int = 12,
    jobs: int = 1,
) -> OrbitGuess:
    """An approximate periodic orbit built from the singular skeleton.

    Front points are spread along the two fronts and the remaining anchors
    along the slow drifts in proportion to their drift times. The loop is then
    refined by float Newton; plain forward integration would not close since
    the orbit is of saddle type.
    """
    if skeleton is None:
        skeleton = shoot_skeleton(theta)
    slow_total = anchors - 2 * front_points
    if slow_total < 2:
        raise ValueError("too few anchors for the requested front points")
    _, t_up = slow_arc(skeleton, eps, upper=True, samples=1)
    _, t_down = slow_arc(skeleton, eps, upper=False, samples=1)
    n_up = max(1, round(slow_total * t_up / (t_up + t_down)))
    n_down = max(1, slow_total - n_up)
    upper, _ = slow_arc(skeleton, eps, upper=True, samples=n_up)
    lower, _ = slow_arc(skeleton, eps, upper=False, samples=n_down)
    points = np.concatenate(
        [
            front_arc(skeleton, up=True, samples=front_points),
            upper,
            front_arc(skeleton, up=False, samples=front_points),
            lower,
        ]
    )
    guess = orbit_from_points(points, eps, skeleton.theta)
    logger.info(
        "seed orbit at eps=%g: %d anchors, slow drift times %.2f / %.2f",
        eps,
        guess.k,
        t_up,
        t_down,
    )
    if refine:
        guess = refine_orbit(guess, iters, jobs=jobs)
    return guess


def orbit_trajectory(
    guess: OrbitGuess, *, per_arc: int = 20, tol: float = DEFAULT_TOL
) -> Trajectory:
    """The float orbit through all anchors, sampled ``per_arc`` times per flight."""
    if guess.times is None:
        raise ValueError("the guess has not been refined yet")
    ts: list[FloatArray] = []
    xs: list[FloatArray] = []
    offset = 0.0
    for point, t in zip(guess.points, guess.times, strict=True):
        arc = rk_orbit(point, guess.vector_field, float(t), tol, samples=per_arc + 1)
        ts.append(offset + arc.t[:-1])
        xs.append(arc.x[:-1])
        offset += float(t)
    return Trajectory(np.concatenate(ts), np.concatenate(xs))


def write_csv(path: str | Path, trajectory: Trajectory | FloatArray) -> Path:
    """Dump ``t,u,v,w`` rows of a trajectory (or ``u,v,w`` rows of anchors)."""
    path = Path(path)
    if isinstance(trajectory, Trajectory):
        data = np.column_stack([trajectory.t, trajectory.x])
        header = "t,u,v,w"
    else:
        data = np.asarray(trajectory, dtype=np.float64)
        header = "u,v,w"
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
    return path


def read_anchors(path: str | Path) -> FloatArray:
    """Anchors written by :func:`write_csv`: ``u,v,w`` rows after a header line."""
    points = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if points.shape[-1] != 3:
        raise ValueError(f"{path} holds {points.shape[-1]} columns, expected u,v,w")
    return points


__all__ = [
    "OrbitGuess",
    "float_cycle",
    "front_arc",
    "orbit_from_points",
    "orbit_trajectory",
    "read_anchors",
    "refine_orbit",
    "resample",
    "sections_from_points",
    "seed_orbit",
    "slow_arc",
    "stabilize_frames",
    "write_csv",
]
