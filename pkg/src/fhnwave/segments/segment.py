"""Isolating segment geometry.

A segment is the set::

    (1 - mu) (front + P diag(a, b) (x_u, x_s)) + mu (rear + P diag(c, d) (x_u, x_s))

over ``(x_u, x_s, mu) in [-1, 1]^2 x [0, 1]``, with ``P`` acting on the fast
``(u, v)`` plane. Cross sections ``mu = const`` are parallelograms on planes
``w = const``, so the front and rear faces are h-sets on such planes and every
side face is a planar trapezoid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.covering import HSet
from fhnwave.interval import Interval, as_interval, cross, subdivide
from fhnwave.poincare import AffineSection

if TYPE_CHECKING:
    from fhnwave.typing import FaceName, FloatArray

_PLANE_FRAME = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
_SIDE = {"lu": -1.0, "ru": 1.0, "ls": -1.0, "rs": 1.0}


def _lift(v: FloatArray) -> FloatArray:
    return np.array([v[0], v[1], 0.0])


def w_plane(w: float, crossing_sign: float = 1.0) -> AffineSection:
    """The section ``w = const`` with coordinates ``(u, v)``."""
    return AffineSection.create([0.0, 0.0, w], [0.0, 0.0, 1.0], _PLANE_FRAME, crossing_sign)


@dataclass(frozen=True)
class ChainEnd:
    """A parallelogram on a ``w``-plane where a chain of segments terminates."""

    front: FloatArray
    frame: FloatArray
    a: float
    b: float
    name: str = ""

    def face(self) -> HSet:
        section = w_plane(float(self.front[2]))
        return HSet.create(section, self.front[:2], self.frame, (self.a, self.b), name=self.name)


@dataclass(frozen=True)
class Segment:
    """An isolating segment candidate along the slow manifold.

    ``frame`` is the fast-plane matrix ``P`` (exit column first), ``a, b`` the
    front exit/entry half widths and ``c, d`` the rear ones. The central
    direction follows ``w`` from ``front`` to ``rear``.
    """

    front: FloatArray
    rear: FloatArray
    frame: FloatArray
    a: float
    b: float
    c: float
    d: float
    name: str = ""

    def __post_init__(self) -> None:
        if self.front[2] == self.rear[2]:
            raise ValueError("front and rear of a segment need different w")
        if min(self.a, self.b, self.c, self.d) <= 0:
            raise ValueError("segment widths must be positive")
        if abs(np.linalg.det(self.frame)) <= 1e-14:
            raise ValueError("segment frame must be invertible")

    @classmethod
    def create(
        cls,
        front: Any,
        rear: Any,
        frame: Any,
        a: float,
        b: float,
        c: float | None = None,
        d: float | None = None,
        name: str = "",
    ) -> Segment:
        return cls(
            front=np.asarray(front, dtype=np.float64),
            rear=np.asarray(rear, dtype=np.float64),
            frame=np.asarray(frame, dtype=np.float64),
            a=float(a),
            b=float(b),
            c=float(a if c is None else c),
            d=float(b if d is None else d),
            name=name,
        )

    @property
    def orientation(self) -> float:
        """``+1`` when ``w`` grows from front to rear, ``-1`` otherwise."""
        return 1.0 if self.rear[2] > self.front[2] else -1.0

    @property
    def exit_vector(self) -> FloatArray:
        return _lift(self.frame[:, 0])

    @property
    def entry_vector(self) -> FloatArray:
        return _lift(self.frame[:, 1])

    @property
    def end(self) -> ChainEnd:
        """The front face as a chain end."""
        return ChainEnd(self.front, self.frame, self.a, self.b, self.name)

    def transposed(self) -> Segment:
        """The segment with exit and entry swapped, run from rear to front."""
        return Segment(
            front=self.rear,
            rear=self.front,
            frame=self.frame[:, ::-1].copy(),
            a=self.d,
            b=self.c,
            c=self.b,
            d=self.a,
            name=f"{self.name}^T",
        )

    def point(self, xi: Interval | FloatArray) -> Interval:
        """Enclose the points at coordinates ``(x_u, x_s, mu)``."""
        xi = as_interval(xi)
        xu, xs, mu = xi[..., 0], xi[..., 1], xi[..., 2]
        axis = self.front + mu[..., None] * (as_interval(self.rear) - self.front)
        exit_width = self.a + mu * (as_interval(self.c) - self.a)
        entry_width = self.b + mu * (as_interval(self.d) - self.b)
        return (
            axis
            + (exit_width * xu)[..., None] * self.exit_vector
            + (entry_width * xs)[..., None] * self.entry_vector
        )

    def vertices(self) -> FloatArray:
        corners = np.array(
            [[xu, xs, mu] for mu in (0.0, 1.0) for xs in (-1.0, 1.0) for xu in (-1.0, 1.0)]
        )
        return self.point(corners).mid()

    @cached_property
    def _side_geometry(self) -> dict[str, tuple[FloatArray, FloatArray, Interval]]:
        # origin, float tangent along mu, and the enclosed outward normal per side face
        p1, p2 = self.exit_vector, self.entry_vector
        axis = self.rear - self.front
        span = as_interval(self.rear) - self.front
        out: dict[str, tuple[FloatArray, FloatArray, Interval]] = {}
        for name, s in _SIDE.items():
            if name[1] == "u":
                origin = self.front + s * self.a * p1
                t_exact = span + (s * (as_interval(self.c) - self.a)) * p1
                normal = cross(t_exact, p2)
                outward = s * float(np.dot(normal.mid(), p1))
            else:
                origin = self.front + s * self.b * p2
                t_exact = span + (s * (as_interval(self.d) - self.b)) * p2
                normal = cross(p1, t_exact)
                outward = s * float(np.dot(normal.mid(), p2))
            if outward == 0.0 or not np.isfinite(outward):
                raise ValueError(f"degenerate {name} face of segment {self.name!r}")
            shear = (self.c - self.a) * p1 if name[1] == "u" else (self.d - self.b) * p2
            tangent = axis + s * shear
            out[name] = (origin, tangent, normal if outward > 0 else -normal)
        return out

    def outward_normal(self, which: FaceName) -> Interval:
        """Enclosure of an outward normal of a side face."""
        if which in ("in", "out"):
            sign = -self.orientation if which == "in" else self.orientation
            return as_interval(np.array([0.0, 0.0, sign]))
        return self._side_geometry[which][2]

    def face_box(self, which: FaceName) -> Interval:
        """The face as a box of segment coordinates ``(x_u, x_s, mu)``."""
        lo = np.array([-1.0, -1.0, 0.0])
        hi = np.array([1.0, 1.0, 1.0])
        match which:
            case "in":
                hi[2] = 0.0
            case "out":
                lo[2] = 1.0
            case "lu" | "ru":
                lo[0] = hi[0] = _SIDE[which]
            case "ls" | "rs":
                lo[1] = hi[1] = _SIDE[which]
        return Interval(lo, hi)

    def face_cells(self, which: FaceName, grid: int) -> Interval:
        """Enclosures of the ``grid x grid`` cells of a face, shape ``(grid**2, 3)``."""
        box = self.face_box(which)
        parts = [1 if box.lo[k] == box.hi[k] else grid for k in range(3)]
        return self.point(subdivide(box, parts))

    def face(self, which: FaceName) -> HSet:
        """The h-set carried by a face.

        Front and rear faces keep the segment's exit and entry. On ``lu``/``ru``
        the central direction becomes the exit and ``x_s`` the entry; on
        ``ls``/``rs`` ``x_u`` stays the exit and the central direction becomes
        the entry. Side faces carry the bilinear twist of the trapezoid.
        """
        name = f"{self.name}.{which}"
        if which in ("in", "out"):
            point = self.front if which == "in" else self.rear
            a, b = (self.a, self.b) if which == "in" else (self.c, self.d)
            return HSet.create(
                w_plane(float(point[2]), self.orientation), point[:2], self.frame, (a, b), name=name
            )
        origin, tangent, normal = self._side_geometry[which]
        # section coordinates are (mu, x_s-width) on lu/ru and (x_u-width, mu) on ls/rs
        if which in ("lu", "ru"):
            frame = np.stack([tangent, self.entry_vector], axis=-1)
            center, widths = (0.5, 0.0), (0.5, 0.5 * (self.b + self.d))
            twist = (0.0, 0.5 * (self.d - self.b))
        else:
            frame = np.stack([self.exit_vector, tangent], axis=-1)
            center, widths = (0.0, 0.5), (0.5 * (self.a + self.c), 0.5)
            twist = (0.5 * (self.c - self.a), 0.0)
        section = AffineSection.create(origin, normal.mid(), frame)
        return HSet.create(section, center, np.eye(2), widths, twist=twist, name=name)


__all__ = ["ChainEnd", "Segment", "w_plane"]
