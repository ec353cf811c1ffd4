"""Affine sections and section images."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.integrator import FlowSet
from fhnwave.interval import Interval, as_interval, batched_matmul, dot, inverse, matvec

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

ORTHOGONALITY_TOL = 1e-6


def complement_frame(normal: FloatArray) -> FloatArray:
    """Orthonormal basis of the plane orthogonal to ``normal``, as columns."""
    normal = np.asarray(normal, dtype=np.float64)
    n = normal.shape[-1]
    stacked = np.concatenate(
        [normal[..., None], np.broadcast_to(np.eye(n), (*normal.shape[:-1], n, n))], axis=-1
    )
    q, _ = np.linalg.qr(stacked)
    return q[..., :, 1:n]


@dataclass(frozen=True)
class AffineSection:
    """The plane ``origin + span(frame)``, crossed towards ``crossing_sign * normal``.

    Points on the section have coordinates ``eta`` with ``x = origin + frame @ eta``.
    The normal only completes the frame to a chart of the whole space; the
    section functional is the last row of the inverse chart, so section
    membership and section coordinates are exact for the float data given.
    Every field may carry leading batch axes.
    """

    origin: FloatArray
    normal: FloatArray
    frame: FloatArray
    crossing_sign: FloatArray

    def __post_init__(self) -> None:
        n = self.origin.shape[-1]
        if self.normal.shape[-1] != n or self.frame.shape[-2:] != (n, n - 1):
            raise ValueError(f"inconsistent section shapes for dimension {n}")
        if np.any(np.abs(self.crossing_sign) != 1.0):
            raise ValueError("crossing_sign must be +1 or -1")
        norms = np.linalg.norm(self.normal, axis=-1)[..., None]
        norms = norms * np.linalg.norm(self.frame, axis=-2)
        cos = np.abs(np.einsum("...i,...ij->...j", self.normal, self.frame)) / norms
        if np.any(~np.isfinite(cos)) or np.any(cos > ORTHOGONALITY_TOL):
            raise ValueError("section normal must be orthogonal to the frame columns")
        if np.any(np.linalg.matrix_rank(self.frame) < n - 1):
            raise ValueError("section frame columns must be independent")

    @classmethod
    def create(
        cls,
        origin: Any,
        normal: Any,
        frame: Any | None = None,
        crossing_sign: Any = 1.0,
    ) -> AffineSection:
        origin = np.asarray(origin, dtype=np.float64)
        normal = np.asarray(normal, dtype=np.float64)
        frame = complement_frame(normal) if frame is None else np.asarray(frame, dtype=np.float64)
        batch = np.broadcast_shapes(
            origin.shape[:-1], normal.shape[:-1], frame.shape[:-2], np.shape(crossing_sign)
        )
        n = origin.shape[-1]
        return cls(
            origin=np.broadcast_to(origin, (*batch, n)).copy(),
            normal=np.broadcast_to(normal, (*batch, n)).copy(),
            frame=np.broadcast_to(frame, (*batch, n, n - 1)).copy(),
            crossing_sign=np.broadcast_to(
                np.asarray(crossing_sign, dtype=np.float64), batch
            ).copy(),
        )

    @classmethod
    def stack(cls, sections: Sequence[AffineSection]) -> AffineSection:
        """One batched section from several unbatched ones."""
        return cls(
            origin=np.stack([s.origin for s in sections]),
            normal=np.stack([s.normal for s in sections]),
            frame=np.stack([s.frame for s in sections]),
            crossing_sign=np.stack([s.crossing_sign for s in sections]),
        )

    @property
    def dim(self) -> int:
        return self.origin.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.origin.shape[:-1]

    def take(self, index: Any) -> AffineSection:
        return AffineSection(
            self.origin[index], self.normal[index], self.frame[index], self.crossing_sign[index]
        )

    def broadcast_to(self, batch: tuple[int, ...]) -> AffineSection:
        if batch == self.batch_shape:
            return self
        n = self.dim
        return AffineSection(
            origin=np.broadcast_to(self.origin, (*batch, n)).copy(),
            normal=np.broadcast_to(self.normal, (*batch, n)).copy(),
            frame=np.broadcast_to(self.frame, (*batch, n, n - 1)).copy(),
            crossing_sign=np.broadcast_to(self.crossing_sign, batch).copy(),
        )

    def reversed(self) -> AffineSection:
        """The same plane crossed in the opposite direction."""
        return AffineSection(self.origin, self.normal, self.frame, -self.crossing_sign)

    @cached_property
    def chart(self) -> Interval:
        """Enclosure of the inverse of ``[frame | normal]``."""
        return inverse(np.concatenate([self.frame, self.normal[..., None]], axis=-1))

    @property
    def gradient(self) -> Interval:
        return self.chart[..., -1, :]

    @property
    def projection(self) -> Interval:
        return self.chart[..., :-1, :]

    def value(self, x: Interval | FloatArray) -> Interval:
        """The section functional; zero exactly on the section."""
        return dot(self.gradient, as_interval(x) - self.origin)

    def signed_value(self, x: Interval | FloatArray) -> Interval:
        """Negative before the section and positive after it, in the crossing direction."""
        return self.crossing_sign * self.value(x)

    def signed_linear(self, y: Interval, g: Interval, rho: Interval) -> Interval:
        """:meth:`signed_value` over the set ``y + g @ rho``, evaluated in that form."""
        grad = self.gradient
        slope = matvec(g.swapaxes(-1, -2), grad)
        return self.crossing_sign * (dot(grad, y - self.origin) + dot(slope, rho))

    def coordinates(self, x: Interval | FloatArray) -> Interval:
        return matvec(self.projection, as_interval(x) - self.origin)

    def to_state(self, eta: Interval | FloatArray) -> Interval:
        return self.origin + matvec(self.frame, as_interval(eta))

    def embed(
        self,
        center: Interval | FloatArray,
        directions: Interval | FloatArray,
        r0: Interval | FloatArray,
        time: Interval | float = 0.0,
    ) -> FlowSet:
        """The set ``center + directions @ r0`` of section coordinates as a flow set."""
        center3 = self.to_state(center)
        dirs3 = batched_matmul(self.frame, as_interval(directions))
        return FlowSet.from_parallelogram(center3, dirs3, r0, time)


@dataclass(frozen=True)
class SectionImage:
    """Enclosure of the crossing of a destination section.

    ``point`` holds section coordinates, ``state`` the crossing point in the
    full space, ``time`` the flight time and ``transversality`` the signed
    normal flux over the crossing enclosure (positive for a valid crossing).
    """

    point: Interval
    state: Interval
    time: Interval
    transversality: Interval

    def take(self, index: Any) -> SectionImage:
        return SectionImage(
            self.point[index], self.state[index], self.time[index], self.transversality[index]
        )


__all__ = ["AffineSection", "SectionImage", "complement_frame"]
