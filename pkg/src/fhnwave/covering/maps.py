"""Evaluators of section maps on h-set cells."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np

from fhnwave.interval import Interval, matvec
from fhnwave.poincare import PoincareMap

if TYPE_CHECKING:
    from fhnwave.config import IntegratorSettings, MapLimits
    from fhnwave.covering.hset import HSet
    from fhnwave.integrator import FieldLike, FlowSet
    from fhnwave.poincare import AffineSection
    from fhnwave.typing import Direction, FloatArray


class SectionMap(Protocol):
    """Encloses images of h-set cells in destination section coordinates."""

    def images(self, source: HSet, cells: Interval, *, jobs: int = 1) -> Interval:
        """Images of the cells ``cells`` (shape ``(B, 2)``, h-set coordinates)."""
        ...


class ParameterMap(Protocol):
    """Encloses images of parameter cells in destination section coordinates."""

    def images(self, cells: Interval, *, jobs: int = 1) -> Interval:
        """Images of the parameter cells ``cells`` (shape ``(B,)``)."""
        ...


@dataclass(frozen=True)
class AffineMap:
    """``eta -> matrix @ eta + offset`` between section coordinates."""

    matrix: FloatArray
    offset: FloatArray

    @classmethod
    def create(cls, matrix: Any, offset: Any = (0.0, 0.0)) -> AffineMap:
        return cls(np.asarray(matrix, dtype=np.float64), np.asarray(offset, dtype=np.float64))

    def images(self, source: HSet, cells: Interval, *, jobs: int = 1) -> Interval:
        del jobs
        return matvec(self.matrix, source.from_coords(cells)) + self.offset


@dataclass(frozen=True)
class FlowMap:
    """The section map of a flow from an h-set's section to ``dst``."""

    field: FieldLike
    dst: AffineSection
    direction: Direction = "forward"
    limits: MapLimits | None = None
    settings: IntegratorSettings | None = None

    def pmap(self) -> PoincareMap:
        return PoincareMap(
            self.field,
            self.dst,
            direction=self.direction,
            limits=self.limits,
            settings=self.settings,
        )

    def images(self, source: HSet, cells: Interval, *, jobs: int = 1) -> Interval:
        return self.pmap().map_parallel(source.flowset(cells), jobs=jobs).point


@dataclass(frozen=True)
class ParametricFlowMap:
    """Section map of a family of flows, one source set per parameter cell.

    ``make_field`` turns a batch of parameter cells into a batched field and
    ``make_source`` into the batched source set.
    """

    make_field: Callable[[Interval], FieldLike]
    make_source: Callable[[Interval], FlowSet]
    dst: AffineSection
    direction: Direction = "forward"
    limits: MapLimits | None = None
    settings: IntegratorSettings | None = None

    def images(self, cells: Interval, *, jobs: int = 1) -> Interval:
        pmap = PoincareMap(
            self.make_field(cells),
            self.dst,
            direction=self.direction,
            limits=self.limits,
            settings=self.settings,
        )
        return pmap.map_parallel(self.make_source(cells), jobs=jobs).point


__all__ = ["AffineMap", "FlowMap", "ParameterMap", "ParametricFlowMap", "SectionMap"]
