"""Two-dimensional h-sets on affine sections."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import TYPE_CHECKING, Any, Literal

import numpy as np

from fhnwave.interval import Interval, as_interval, face_cells, inverse, matvec, subdivide, unit_box

if TYPE_CHECKING:
    from fhnwave.integrator import FlowSet
    from fhnwave.poincare import AffineSection
    from fhnwave.typing import FloatArray


@dataclass(frozen=True)
class HSet:
    """A parallelogram with one exit and one entry direction on a section.

    In section coordinates the support is::

        center + exit * x_u + entry * x_s + twist * x_u * x_s,   (x_u, x_s) in [-1, 1]^2

    with ``exit = dirs[:, 0] * half_widths[0]`` and ``entry = dirs[:, 1] *
    half_widths[1]``. The bilinear ``twist`` describes the trapezoidal side faces
    of segments; a twisted h-set can be mapped but has no affine chart, so it
    can never be the target of a covering.
    """

    section: AffineSection
    center: FloatArray
    dirs: FloatArray
    half_widths: FloatArray
    twist: FloatArray | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.center.shape != (2,) or self.dirs.shape != (2, 2) or self.half_widths.shape != (2,):
            raise ValueError("h-sets live on two-dimensional sections")
        if self.section.batch_shape:
            raise ValueError("an h-set needs a single section")
        if np.any(self.half_widths <= 0):
            raise ValueError("half widths must be positive")
        if abs(np.linalg.det(self.dirs)) <= 1e-14 * np.abs(self.dirs).max() ** 2:
            raise ValueError("h-set directions must be independent")

    @classmethod
    def create(
        cls,
        section: AffineSection,
        center: Any,
        dirs: Any,
        half_widths: Any,
        twist: Any | None = None,
        name: str = "",
    ) -> HSet:
        return cls(
            section=section,
            center=np.asarray(center, dtype=np.float64),
            dirs=np.asarray(dirs, dtype=np.float64),
            half_widths=np.asarray(half_widths, dtype=np.float64),
            twist=None if twist is None else np.asarray(twist, dtype=np.float64),
            name=name,
        )

    @property
    def vectors(self) -> FloatArray:
        """Exit and entry vectors (columns), scaled by the half widths."""
        return self.dirs * self.half_widths

    @property
    def is_twisted(self) -> bool:
        return self.twist is not None and bool(np.any(self.twist != 0))

    @cached_property
    def _chart(self) -> Interval:
        return inverse(as_interval(self.dirs) * self.half_widths)

    def from_coords(self, xi: Interval | FloatArray) -> Interval:
        """Section coordinates of the h-set points ``xi``."""
        xi = as_interval(xi)
        eta = self.center + matvec(self.vectors, xi)
        if self.is_twisted:
            eta = eta + (xi[..., 0] * xi[..., 1])[..., None] * self.twist
        return eta

    def to_coords(self, eta: Interval | FloatArray) -> Interval:
        """Enclose the h-set coordinates of section points ``eta``."""
        if self.is_twisted:
            raise ValueError(f"twisted h-set {self.name!r} has no affine chart")
        return matvec(self._chart, as_interval(eta) - self.center)

    def cells(self, div: int) -> Interval:
        """``div x div`` cells of ``[-1, 1]^2``, shape ``(div**2, 2)``."""
        return subdivide(unit_box(2), (div, div))

    def edge_cells(self, div: int, side: Literal[-1, 1]) -> Interval:
        """``div`` cells of the exit edge ``x_u = side``."""
        return face_cells(2, div, fixed=0, value=float(side))

    def flowset(self, xi: Interval) -> FlowSet:
        """The full space sets ``{x(xi) : xi in cell}`` for a batch of cells."""
        m = xi.mid()
        delta = xi - m
        base = self.center + matvec(self.vectors, m)
        directions: Interval | FloatArray = self.vectors
        if self.is_twisted:
            t = as_interval(self.twist)
            base = base + (as_interval(m[..., 0]) * m[..., 1])[..., None] * t
            base = base + (delta[..., 0] * delta[..., 1])[..., None] * t
            slopes = Interval.stack([as_interval(m[..., 1]), as_interval(m[..., 0])], axis=-1)
            directions = self.vectors + t[:, None] * slopes[..., None, :]
        return self.section.embed(base, directions, delta)

    def corners(self) -> FloatArray:
        """The four support corners in section coordinates, counterclockwise in ``xi``."""
        xi = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
        return self.from_coords(xi).mid()

    def transposed(self) -> HSet:
        """Swap exit and entry; transposing twice gives the original h-set."""
        name = self.name[:-2] if self.name.endswith("^T") else f"{self.name}^T"
        return replace(
            self,
            dirs=self.dirs[:, ::-1].copy(),
            half_widths=self.half_widths[::-1].copy(),
            name=name,
        )

    def constrict(self, delta: float, direction: Literal["exit", "entry"] = "exit") -> HSet:
        """Shrink the support by ``1 / (1 + delta)`` along one direction."""
        if delta < 0:
            raise ValueError("delta must be non-negative")
        k = 0 if direction == "exit" else 1
        widths = self.half_widths.copy()
        widths[k] = widths[k] / (1.0 + delta)
        twist = None if self.twist is None else self.twist / (1.0 + delta)
        return replace(self, half_widths=widths, twist=twist)

    def with_name(self, name: str) -> HSet:
        return replace(self, name=name)


def parameter_cells(lo: float, hi: float, div: int) -> Interval:
    """``div`` cells of the one-dimensional h-set ``[lo, hi]``, shape ``(div,)``."""
    return subdivide(Interval([lo], [hi]), (div,))[:, 0]


__all__ = ["HSet", "parameter_cells"]
