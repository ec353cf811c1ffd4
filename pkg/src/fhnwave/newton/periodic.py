"""Interval Newton for periodic orbits through a cyclic chain of sections.

With unknowns ``x_i`` in the coordinates of sections ``S_0, ..., S_{k-1}`` the
orbit solves ``F_i(x) = P_i(x_i) - x_{i+1} = 0`` (indices mod ``k``), ``P_i``
being the section map ``S_i -> S_{i+1}``. The derivative has the blocks
``DP_i`` on the diagonal and ``-I`` to their right, cyclically.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.errors import ProofError, SingularEnclosure
from fhnwave.integrator import FlowSet
from fhnwave.interval import Interval, as_interval, batched_matmul, gauss_solve_enclose
from fhnwave.newton.operator import NewtonOutcome, NewtonVerdict
from fhnwave.poincare import AffineSection, PoincareMap, SectionImage

if TYPE_CHECKING:
    from fhnwave.config import IntegratorSettings, MapLimits
    from fhnwave.integrator import FieldLike
    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiShootingSystem:
    """The cyclic system of section maps of one field.

    ``sections`` is a batched section with one entry per anchor; the section
    origins are the anchors, so the approximate orbit sits at ``x = 0``.
    """

    sections: AffineSection
    field: FieldLike
    limits: MapLimits | None = None
    settings: IntegratorSettings | None = None

    def __post_init__(self) -> None:
        if len(self.sections.batch_shape) != 1 or self.sections.batch_shape[0] < 2:
            raise ValueError("a cyclic system needs a batch of at least two sections")

    @classmethod
    def from_sections(
        cls,
        sections: Sequence[AffineSection],
        field: FieldLike,
        *,
        limits: MapLimits | None = None,
        settings: IntegratorSettings | None = None,
    ) -> MultiShootingSystem:
        return cls(AffineSection.stack(sections), field, limits, settings)

    @property
    def k(self) -> int:
        return self.sections.batch_shape[0]

    @property
    def section_dim(self) -> int:
        return self.sections.dim - 1

    @property
    def anchors(self) -> FloatArray:
        return self.sections.origin

    @property
    def targets(self) -> AffineSection:
        """``S_{i+1}`` for every ``i``."""
        return self.sections.take(np.roll(np.arange(self.k), -1))

    def pmap(self) -> PoincareMap:
        return PoincareMap(self.field, self.targets, limits=self.limits, settings=self.settings)

    def residual(self, x: FloatArray, *, jobs: int = 1) -> tuple[Interval, SectionImage]:
        """Enclose ``F(x)`` at thin section points ``x`` of shape ``(k, d)``."""
        src = FlowSet.from_box(self.sections.to_state(x))
        image = self.pmap().map_parallel(src, jobs=jobs)
        return image.point - np.roll(x, -1, axis=0), image

    def derivative(
        self, x: FloatArray, radius: float, *, jobs: int = 1
    ) -> tuple[Interval, SectionImage]:
        """Enclose ``DP_i`` over the max-norm balls of ``radius`` around ``x_i``."""
        d = self.section_dim
        r0 = Interval(-np.ones((self.k, d)), np.ones((self.k, d)))
        src = self.sections.embed(x, radius * np.eye(d), r0)
        image, dps = self.pmap().with_derivative_parallel(src, self.sections.frame, jobs=jobs)
        return dps, image

    def assemble(self, blocks: FloatArray) -> FloatArray:
        return cyclic_matrix(blocks)


def cyclic_matrix(blocks: FloatArray) -> FloatArray:
    """The dense float derivative of the cyclic system from its blocks ``(k, d, d)``."""
    k, d = blocks.shape[0], blocks.shape[-1]
    a = np.zeros((k * d, k * d))
    for i in range(k):
        j = (i + 1) % k
        a[i * d : (i + 1) * d, i * d : (i + 1) * d] = blocks[i]
        a[i * d : (i + 1) * d, j * d : (j + 1) * d] -= np.eye(d)
    return a


def precondition_blocks(c: FloatArray, dps: Interval) -> Interval:
    """``C @ DF`` for the cyclic block matrix ``DF``, one block column at a time.

    Block column ``j`` of ``DF`` holds ``DP_j`` in block row ``j`` and ``-I`` in
    block row ``j - 1``, so it costs one ``(n, d) @ (d, d)`` product.
    """
    k, d = dps.shape[0], dps.shape[-1]
    n = k * d
    c_cols = np.ascontiguousarray(c.reshape(n, k, d).transpose(1, 0, 2))
    left = batched_matmul(c_cols, dps)
    cols = left - np.roll(c_cols, 1, axis=0)
    return cols.swapaxes(0, 1).reshape(n, n)


def _inconclusive(
    x0: FloatArray, x_box: Interval, reason: str, period: Interval | None = None
) -> NewtonOutcome:
    logger.info("Newton Inconclusive: %s", reason)
    whole = Interval(np.full(x0.shape, -np.inf), np.full(x0.shape, np.inf))
    return NewtonOutcome(NewtonVerdict.INCONCLUSIVE, whole, x_box, x0, reason, period)


def newton_periodic(
    system: MultiShootingSystem,
    radius: float,
    *,
    x0: FloatArray | None = None,
    jobs: int = 1,
) -> NewtonOutcome:
    """Run the interval Newton operator on the cyclic system.

    The residual is enclosed at the thin points ``x0`` (the anchors by default),
    the derivative over the max-norm box of ``radius`` around them. The linear
    system is preconditioned with the float inverse of the midpoint derivative.
    The outcome carries the period enclosure summed from the box flight times.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    k, d = system.k, system.section_dim
    x = np.zeros((k, d)) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(k, d)
    flat = x.reshape(-1)
    x_box = Interval(flat - radius, flat + radius)

    try:
        f_x0, _ = system.residual(x, jobs=jobs)
        dps, image = system.derivative(x, radius, jobs=jobs)
    except ProofError as e:
        return _inconclusive(flat, x_box, f"{type(e).__name__}: {e}")
    period = image.time.sum(axis=0)
    logger.debug("residual of %d sections bounded by %.3e", k, float(np.max(f_x0.mag())))

    try:
        c = np.linalg.inv(system.assemble(dps.mid()))
    except np.linalg.LinAlgError:
        return _inconclusive(flat, x_box, "singular midpoint derivative", period)
    if not np.all(np.isfinite(c)):
        return _inconclusive(flat, x_box, "singular midpoint derivative", period)
    try:
        delta = gauss_solve_enclose(precondition_blocks(c, dps), as_interval(c) @ f_x0.reshape(-1))
    except SingularEnclosure as e:
        return _inconclusive(flat, x_box, f"singular derivative enclosure ({e})", period)

    n_box = flat - delta
    if np.all(n_box.strictly_inside(x_box)):
        verdict = NewtonVerdict.UNIQUE_ZERO
    elif np.any(n_box.disjoint(x_box)):
        verdict = NewtonVerdict.NO_ZERO
    else:
        verdict = NewtonVerdict.INCONCLUSIVE
    outcome = NewtonOutcome(verdict, n_box, x_box, flat, period=period)
    logger.info("%s over %d sections", outcome, k)
    return outcome


__all__ = ["MultiShootingSystem", "cyclic_matrix", "newton_periodic", "precondition_blocks"]
