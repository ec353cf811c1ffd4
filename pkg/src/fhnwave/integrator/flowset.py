"""Sets propagated by the Lohner integrator."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.interval import Interval, as_interval, batched_matmul, matvec

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray


@dataclass(frozen=True)
class FlowSet:
    """The set ``base + frame @ r0 + tail_frame @ tail`` at time ``time``.

    ``base`` is a (nearly) thin interval vector, ``frame`` and ``tail_frame``
    are float matrices and ``r0``/``tail`` interval vectors. All arrays may carry
    leading batch axes, one set per cell.
    """

    base: Interval
    frame: FloatArray
    r0: Interval
    tail_frame: FloatArray
    tail: Interval
    time: Interval

    @classmethod
    def from_parallelogram(
        cls,
        center: Interval | FloatArray,
        directions: Interval | FloatArray,
        r0: Interval | FloatArray,
        time: Interval | float = 0.0,
    ) -> FlowSet:
        """``center + directions @ r0``; uncertainty of ``directions`` goes to the tail."""
        center = as_interval(center)
        directions = as_interval(directions)
        r0 = as_interval(r0)
        n = center.shape[-1]
        frame = directions.mid()
        tail = matvec(directions - frame, r0)
        batch = np.broadcast_shapes(center.shape[:-1], frame.shape[:-2], r0.shape[:-1])
        eye = np.broadcast_to(np.eye(n), (*batch, n, n)).copy()
        return cls(
            base=center.broadcast_to((*batch, n)),
            frame=np.broadcast_to(frame, (*batch, *frame.shape[-2:])).copy(),
            r0=r0.broadcast_to((*batch, r0.shape[-1])),
            tail_frame=eye,
            tail=tail.broadcast_to((*batch, n)),
            time=as_interval(time).broadcast_to(batch),
        )

    @classmethod
    def from_box(cls, box: Interval | FloatArray, time: Interval | float = 0.0) -> FlowSet:
        """A box written as its midpoint plus an identity-frame remainder."""
        box = as_interval(box)
        m = box.mid()
        n = box.shape[-1]
        return cls.from_parallelogram(as_interval(m), np.eye(n), box - m, time)

    @property
    def dim(self) -> int:
        return self.base.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.base.shape[:-1]

    def evaluate_hull(self) -> Interval:
        """Interval evaluation of the set expression."""
        return self.base + matvec(self.frame, self.r0) + matvec(self.tail_frame, self.tail)

    @cached_property
    def hull(self) -> Interval:
        return self.evaluate_hull()

    def linear_part(self) -> tuple[Interval, Interval]:
        """The set as ``base + G @ rho`` with ``G = [frame | tail_frame]``."""
        g = np.concatenate([self.frame, self.tail_frame], axis=-1)
        rho = Interval.concatenate([self.r0, self.tail], axis=-1)
        return as_interval(g), rho

    def broadcast_to(self, batch: tuple[int, ...]) -> FlowSet:
        if batch == self.batch_shape:
            return self
        n, m = self.dim, self.frame.shape[-1]
        return FlowSet(
            base=self.base.broadcast_to((*batch, n)),
            frame=np.broadcast_to(self.frame, (*batch, n, m)).copy(),
            r0=self.r0.broadcast_to((*batch, m)),
            tail_frame=np.broadcast_to(self.tail_frame, (*batch, n, n)).copy(),
            tail=self.tail.broadcast_to((*batch, n)),
            time=self.time.broadcast_to(batch),
        )

    def take(self, index: Any) -> FlowSet:
        return FlowSet(
            base=self.base[index],
            frame=self.frame[index],
            r0=self.r0[index],
            tail_frame=self.tail_frame[index],
            tail=self.tail[index],
            time=self.time[index],
        )

    def replace(self, mask: Any, other: FlowSet) -> FlowSet:
        """Cells of ``other`` where ``mask`` holds, cells of ``self`` elsewhere."""
        m = np.asarray(mask)
        return FlowSet(
            base=Interval.where(m[..., None], other.base, self.base),
            frame=np.where(m[..., None, None], other.frame, self.frame),
            r0=Interval.where(m[..., None], other.r0, self.r0),
            tail_frame=np.where(m[..., None, None], other.tail_frame, self.tail_frame),
            tail=Interval.where(m[..., None], other.tail, self.tail),
            time=Interval.where(m, other.time, self.time),
        )


@dataclass(frozen=True)
class VariationalSet:
    """Enclosure ``M + Q @ E`` of a derivative matrix, ``M`` and ``Q`` float."""

    point: FloatArray
    frame: FloatArray
    error: Interval

    @classmethod
    def from_matrix(cls, v: Interval | FloatArray) -> VariationalSet:
        v = as_interval(v)
        m = v.mid()
        n = v.shape[-2]
        eye = np.broadcast_to(np.eye(n), (*v.shape[:-2], n, n)).copy()
        return cls(point=m, frame=eye, error=v - m)

    @classmethod
    def identity(cls, n: int, batch: tuple[int, ...] = ()) -> VariationalSet:
        return cls.from_matrix(np.broadcast_to(np.eye(n), (*batch, n, n)))

    @cached_property
    def hull(self) -> Interval:
        return self.point + batched_matmul(self.frame, self.error)

    def broadcast_to(self, batch: tuple[int, ...]) -> VariationalSet:
        n, k = self.point.shape[-2:]
        return VariationalSet(
            point=np.broadcast_to(self.point, (*batch, n, k)).copy(),
            frame=np.broadcast_to(self.frame, (*batch, n, n)).copy(),
            error=self.error.broadcast_to((*batch, n, k)),
        )

    def take(self, index: Any) -> VariationalSet:
        return VariationalSet(self.point[index], self.frame[index], self.error[index])

    def replace(self, mask: Any, other: VariationalSet) -> VariationalSet:
        m = np.asarray(mask)[..., None, None]
        return VariationalSet(
            point=np.where(m, other.point, self.point),
            frame=np.where(m, other.frame, self.frame),
            error=Interval.where(m, other.error, self.error),
        )


__all__ = ["FlowSet", "VariationalSet"]
