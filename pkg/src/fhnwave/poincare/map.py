"""Rigorous section-to-section maps.

A map integrates every cell of a batched source set until the destination
section is crossed. A cell is armed once its set lies strictly before the
section; the first step of an armed cell whose window is not strictly before
the section contains the crossing. Inside that step the crossing time is
bracketed by bisection on the Taylor expansion, transversality is checked on
the bracket, and the crossing point follows from the mean value form::

    P = y - s(y) F / <g, F>,    F in F(flow over the bracket)

where ``s`` is the section functional with gradient ``g`` and ``y`` the set at a
reference time inside the bracket.
"""

from __future__ import annotations

import logging
from functools import partial
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.config import IntegratorSettings, MapLimits, current_config
from fhnwave.errors import (
    EnclosureBlowup,
    NoCrossing,
    ProofError,
    SingularEnclosure,
    TransversalityUnverified,
)
from fhnwave.integrator import FlowSet, StepExpansion, TaylorIntegrator, VariationalSet, as_field
from fhnwave.interval import Interval, as_interval, batched_matmul, dot, matvec
from fhnwave.poincare.section import AffineSection, SectionImage
from fhnwave.utils import run_parallel, run_parallel_sync

if TYPE_CHECKING:
    from fhnwave.dynamics import PolynomialField
    from fhnwave.integrator import FieldLike
    from fhnwave.typing import Direction, FloatArray

logger = logging.getLogger(__name__)

_MAX_EXTENSIONS = 6
_MAX_BISECTIONS = 64


def _as_flowset(src: FlowSet | Interval | FloatArray) -> FlowSet:
    return src if isinstance(src, FlowSet) else FlowSet.from_box(src)


def _window(a: FloatArray, b: FloatArray) -> Interval:
    return Interval._raw(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def _take_field(field: PolynomialField, index: Any) -> PolynomialField:
    return field.take(index) if field.batch_shape else field


class _Crossing:
    """Per-cell results of a batched map, filled as cells cross."""

    def __init__(self, n_cells: int, n: int, k: int | None) -> None:
        self.point = Interval.zeros((n_cells, n - 1))
        self.state = Interval.zeros((n_cells, n))
        self.time = Interval.zeros(n_cells)
        self.transversality = Interval.zeros(n_cells)
        self.derivative = None if k is None else Interval.zeros((n_cells, n - 1, k))

    def store(self, cells: Any, values: tuple[Interval, ...]) -> None:
        targets = [self.point, self.state, self.time, self.transversality]
        if self.derivative is not None:
            targets.append(self.derivative)
        for target, value in zip(targets, values, strict=False):
            target.lo[cells] = value.lo
            target.hi[cells] = value.hi

    def image(self) -> SectionImage:
        return SectionImage(self.point, self.state, self.time, self.transversality)


class PoincareMap:
    """First crossing of ``dst`` by the flow of ``field``.

    Args:
        field: The vector field; batched coefficients give one field per cell.
        dst: Destination section, possibly one per cell. Its crossing sign
            refers to forward time; backward maps cross it the other way.
        direction: ``"backward"`` integrates the negated field.
        limits: Time, step and width limits, defaulting to the configuration.
        settings: Integrator settings, defaulting to the configuration.
    """

    def __init__(
        self,
        field: FieldLike,
        dst: AffineSection,
        *,
        direction: Direction = "forward",
        limits: MapLimits | None = None,
        settings: IntegratorSettings | None = None,
    ) -> None:
        if direction not in ("forward", "backward"):
            raise ValueError(f"unknown direction {direction!r}")
        f = as_field(field)
        self.direction = direction
        self.field = f.negated() if direction == "backward" else f
        self.dst = dst.reversed() if direction == "backward" else dst
        config = current_config()
        self.limits = limits or config.limits
        self.settings = settings or config.integrator

    def __repr__(self) -> str:
        return f"PoincareMap(direction={self.direction!r}, dim={self.field.dim})"

    def __call__(self, src: FlowSet | Interval | FloatArray) -> SectionImage:
        image, _ = self._map(_as_flowset(src), None)
        return image

    def with_derivative(
        self,
        src: FlowSet | Interval | FloatArray,
        tangent: Interval | FloatArray | None = None,
    ) -> tuple[SectionImage, Interval]:
        """The image together with its derivative in destination coordinates.

        ``tangent`` is the derivative of the source parametrization (for example
        the source section frame); the identity by default.
        """
        s = _as_flowset(src)
        v = VariationalSet.from_matrix(np.eye(s.dim) if tangent is None else tangent)
        image, derivative = self._map(s, v)
        assert derivative is not None
        return image, derivative

    def _chunks(self, src: FlowSet, jobs: int) -> list[Any]:
        cells = src.batch_shape[0] if src.batch_shape else 1
        parts = np.array_split(np.arange(cells), max(1, min(jobs, cells)))
        return [part for part in parts if part.size]

    def _subset(self, index: Any) -> PoincareMap:
        sub = object.__new__(PoincareMap)
        sub.direction = self.direction
        sub.field = _take_field(self.field, index)
        sub.dst = self.dst.take(index) if self.dst.batch_shape else self.dst
        sub.limits = self.limits
        sub.settings = self.settings
        return sub

    async def amap(self, src: FlowSet, *, jobs: int = 1) -> SectionImage:
        """Map a one-dimensional batch in ``jobs`` chunks on worker threads."""
        parts = self._chunks(src, jobs)
        tasks = [partial(self._subset(p), src.take(p)) for p in parts]
        images = await run_parallel(tasks, jobs=jobs)
        return _concat_images(images)

    def map_parallel(self, src: FlowSet, *, jobs: int = 1) -> SectionImage:
        if jobs <= 1 or not src.batch_shape:
            return self(src)
        parts = self._chunks(src, jobs)
        tasks = [partial(self._subset(p), src.take(p)) for p in parts]
        return _concat_images(run_parallel_sync(tasks, jobs=jobs))

    def with_derivative_parallel(
        self,
        src: FlowSet,
        tangent: Interval | FloatArray | None = None,
        *,
        jobs: int = 1,
    ) -> tuple[SectionImage, Interval]:
        """:meth:`with_derivative` of a one-dimensional batch in ``jobs`` chunks."""
        if jobs <= 1 or not src.batch_shape:
            return self.with_derivative(src, tangent)
        per_cell = tangent is not None and as_interval(tangent).ndim == 3
        tasks = [
            partial(
                self._subset(p).with_derivative,
                src.take(p),
                as_interval(tangent)[p] if per_cell else tangent,
            )
            for p in self._chunks(src, jobs)
        ]
        results = run_parallel_sync(tasks, jobs=jobs)
        return (
            _concat_images([image for image, _ in results]),
            Interval.concatenate([derivative for _, derivative in results]),
        )

    # -- core ---------------------------------------------------------------------------

    def _map(
        self, src: FlowSet, v: VariationalSet | None
    ) -> tuple[SectionImage, Interval | None]:
        batch = np.broadcast_shapes(src.batch_shape, self.field.batch_shape, self.dst.batch_shape)
        scalar = batch == ()
        if scalar:
            batch = (1,)
        if len(batch) != 1:
            raise ValueError("section maps take one-dimensional batches of cells")
        n_cells = batch[0]
        n = src.dim

        field = self.field
        s = src.broadcast_to(batch)
        dst = self.dst.broadcast_to(batch)
        if v is not None:
            v = v.broadcast_to(batch)
        out = _Crossing(n_cells, n, None if v is None else v.point.shape[-1])

        active = np.arange(n_cells)
        armed = dst.signed_linear(s.base, *s.linear_part()).hi < 0
        integrator = TaylorIntegrator(field, self.settings)
        steps = 0
        while active.size:
            steps += 1
            if steps > self.limits.max_steps:
                raise NoCrossing(
                    f"no crossing within {self.limits.max_steps} steps", cell=int(active[0])
                )
            e = integrator.expand(s, with_derivative=v is not None)
            window = dst.signed_linear(*e.linear_form(_window(np.zeros_like(e.h), e.h)))
            candidate = armed & ~(window.hi < 0)
            end = e.advance()
            if candidate.any():
                idx = np.flatnonzero(candidate)
                try:
                    values = self._crossing(
                        e.take(idx),
                        dst.take(idx),
                        _take_field(field, idx),
                        None if v is None else v.take(idx),
                    )
                except ProofError as exc:
                    if exc.cell is not None:
                        exc.cell = int(active[idx[exc.cell]])
                    raise
                out.store(active[idx], values)

            keep = ~candidate
            if v is not None:
                v = e.take(keep).advance_derivative(v.take(keep))
            end_pre = dst.signed_linear(end.base, *end.linear_part()).hi < 0
            armed = (armed | end_pre)[keep]
            s = end.take(keep)
            dst = dst.take(keep)
            changed = not keep.all()
            active = active[keep]
            if changed and field.batch_shape and active.size:
                integrator = TaylorIntegrator(_take_field(self.field, active), self.settings)
                field = integrator.field
            if active.size:
                self._check_limits(s, active)
        logger.debug("section map of %d cells finished after %d steps", n_cells, steps)

        image = out.image()
        derivative = out.derivative
        if scalar:
            image = image.take(0)
            derivative = None if derivative is None else derivative[0]
        return image, derivative

    def _check_limits(self, s: FlowSet, active: FloatArray) -> None:
        widths = s.hull.width().max(axis=-1)
        if np.any(widths > self.limits.max_width):
            j = int(np.flatnonzero(widths > self.limits.max_width)[0])
            raise EnclosureBlowup(
                f"set width {widths[j]:.3g} exceeds {self.limits.max_width:g}", cell=int(active[j])
            )
        late = s.time.lo > self.limits.max_time
        if np.any(late):
            raise NoCrossing(
                f"no crossing before t={self.limits.max_time:g}",
                cell=int(active[np.flatnonzero(late)[0]]),
            )

    def _crossing(
        self,
        e: StepExpansion,
        dst: AffineSection,
        field: PolynomialField,
        v: VariationalSet | None,
    ) -> tuple[Interval, ...]:
        with_derivative = v is not None
        integrator = TaylorIntegrator(field, self.settings)
        start = e.start

        # The window has to end strictly past the section.
        for attempt in range(_MAX_EXTENSIONS + 1):
            post = dst.signed_linear(*e.linear_form(as_interval(e.h))).lo > 0
            if post.all():
                break
            if attempt == _MAX_EXTENSIONS:
                raise TransversalityUnverified(
                    "set does not clear the section within one step",
                    cell=int(np.flatnonzero(~post)[0]),
                )
            e = integrator.expand(
                start, np.where(post, e.h, 1.5 * e.h), with_derivative=with_derivative
            )
        h = e.h
        tol = self.limits.time_tol

        # Largest a with the set strictly before the section on all of [0, a].
        lo, hi = np.zeros_like(h), h.copy()
        for _ in range(_MAX_BISECTIONS):
            if np.all(hi - lo <= tol):
                break
            m = 0.5 * (lo + hi)
            ok = dst.signed_linear(*e.linear_form(_window(np.zeros_like(m), m))).hi < 0
            lo = np.where(ok, m, lo)
            hi = np.where(ok, hi, m)
        a = lo

        # Smallest b with the set strictly past the section at b.
        lo, hi = a.copy(), h.copy()
        for _ in range(_MAX_BISECTIONS):
            if np.all(hi - lo <= tol):
                break
            m = 0.5 * (lo + hi)
            ok = dst.signed_linear(*e.linear_form(as_interval(m))).lo > 0
            hi = np.where(ok, m, hi)
            lo = np.where(ok, lo, m)
        b = hi

        bracket = _window(a, b)
        swept = e.enclose(bracket)
        flux_field = field.eval(swept)
        grad = dst.gradient
        flux = dot(grad, flux_field)
        transversality = dst.crossing_sign * flux
        bad = transversality.lo <= 0
        if np.any(bad):
            raise TransversalityUnverified(
                "normal flux over the crossing window contains zero",
                cell=int(np.flatnonzero(bad)[0]),
            )

        n = start.dim
        eye = Interval.eye(n)
        q = flux_field / flux[..., None]
        k = eye - q[..., :, None] * grad[..., None, :]
        t_ref = as_interval(0.5 * a + 0.5 * b)
        y, g, rho = e.linear_form(t_ref)
        offset = y - dst.origin
        state = dst.origin + matvec(k, offset) + matvec(batched_matmul(k, g), rho)
        state = state.intersect_or_keep(swept)
        pk = batched_matmul(dst.projection, k)
        point = matvec(pk, offset) + matvec(batched_matmul(pk, g), rho)
        point = point.intersect_or_keep(dst.coordinates(state))
        level = dot(grad, offset) + dot(matvec(g.swapaxes(-1, -2), grad), rho)
        tau = (t_ref - level / flux).intersect_or_keep(bracket)
        values: tuple[Interval, ...] = (point, state, start.time + tau, transversality)

        if v is not None:
            f_state = field.eval(state)
            flux_state = dot(grad, f_state)
            if np.any((flux_state.lo <= 0) & (flux_state.hi >= 0)):
                raise SingularEnclosure(
                    "normal flux at the crossing point contains zero",
                    cell=int(np.flatnonzero((flux_state.lo <= 0) & (flux_state.hi >= 0))[0]),
                )
            correction = eye - f_state[..., :, None] * (grad / flux_state[..., None])[..., None, :]
            dphi = batched_matmul(e.derivative(tau), v.hull)
            derivative = batched_matmul(batched_matmul(dst.projection, correction), dphi)
            values = (*values, derivative)
        return values


def _concat_images(images: list[SectionImage]) -> SectionImage:
    return SectionImage(
        point=Interval.concatenate([im.point for im in images]),
        state=Interval.concatenate([im.state for im in images]),
        time=Interval.concatenate([im.time for im in images]),
        transversality=Interval.concatenate([im.transversality for im in images]),
    )


def poincare_enclosure(
    src: FlowSet | Interval | FloatArray,
    dst: AffineSection,
    field: FieldLike,
    direction: Direction = "forward",
    limits: MapLimits | None = None,
    *,
    settings: IntegratorSettings | None = None,
) -> SectionImage:
    """Enclose the first crossing of ``dst`` by every trajectory from ``src``.

    Raises:
        NoCrossing: Time or step limits were exhausted.
        TransversalityUnverified: The normal flux sign was not certified.
        EnclosureBlowup: The propagated set grew wider than ``limits.max_width``.
    """
    return PoincareMap(field, dst, direction=direction, limits=limits, settings=settings)(src)


def poincare_derivative_enclosure(
    src: FlowSet | Interval | FloatArray,
    dst: AffineSection,
    field: FieldLike,
    direction: Direction = "forward",
    limits: MapLimits | None = None,
    *,
    tangent: Interval | FloatArray | None = None,
    settings: IntegratorSettings | None = None,
) -> tuple[SectionImage, Interval]:
    """:func:`poincare_enclosure` plus the derivative in section coordinates.

    The derivative is ``pi (I - F g^T / <g, F>) D_x phi tangent`` at the
    crossing, ``pi`` being the destination coordinate projection.
    """
    pmap = PoincareMap(field, dst, direction=direction, limits=limits, settings=settings)
    return pmap.with_derivative(src, tangent)


__all__ = ["PoincareMap", "poincare_derivative_enclosure", "poincare_enclosure"]
