"""Validated Taylor integration with a Lohner frame.

One step from a set ``S`` over the window ``[0, h]`` needs

* a rough enclosure ``Z`` of every trajectory of ``hull(S)`` over the window,
* the Taylor coefficients at the base point of ``S`` plus the Lagrange
  remainder evaluated on ``Z``,
* the derivative of the truncated series over ``hull(S)``, which moves the
  frame of the set (mean value form).

All of it is batched: every cell carries its own set, field and step size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.config import IntegratorSettings, current_config
from fhnwave.dynamics import FhnParams, PolynomialField, SlowFastField
from fhnwave.errors import NoEnclosure, StepUnderflow
from fhnwave.integrator.flowset import FlowSet, VariationalSet
from fhnwave.interval import Interval, as_interval, batched_matmul, inverse, matvec, orthonormalize

if TYPE_CHECKING:
    from fhnwave.typing import BoolArray, FloatArray

logger = logging.getLogger(__name__)

FieldLike = PolynomialField | SlowFastField | FhnParams

# Controlled steps are multiples of 2**-40 so elapsed times add up exactly.
_QUANTUM_EXPONENT = 40


def as_field(field: FieldLike) -> PolynomialField:
    """The full polynomial right-hand side behind any supported field object."""
    if isinstance(field, FhnParams):
        return field.vector_field.full
    if isinstance(field, SlowFastField):
        return field.full
    return field


def _settings(settings: IntegratorSettings | None, order: int | None = None) -> IntegratorSettings:
    base = settings or current_config().integrator
    if order is not None and order != base.order:
        if order < 1:
            raise ValueError("order must be at least 1")
        base = base.model_copy(update={"order": order})
    return base


def _first(mask: Any) -> int:
    return int(np.flatnonzero(mask)[0])


def _window(h: FloatArray) -> Interval:
    if np.any(h < 0):
        raise ValueError("step sizes must be non-negative")
    return Interval._raw(np.zeros_like(h), h)


def _trail(t: Interval, axes: int) -> Interval:
    return t.reshape(t.shape + (1,) * axes)


def _horner(coeffs: list[Interval], t: Interval, axes: int) -> Interval:
    tt = _trail(t, axes)
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * tt + c
    return acc


def _quantize(h: FloatArray) -> FloatArray:
    q = np.ldexp(np.floor(np.ldexp(h, _QUANTUM_EXPONENT)), -_QUANTUM_EXPONENT)
    return np.where(q > 0, q, h)


# -- rough enclosures -------------------------------------------------------------------


def _try_rough(
    field: PolynomialField, x0: Interval, h: FloatArray, settings: IntegratorSettings
) -> tuple[Interval, BoolArray]:
    window = _trail(_window(h), 1)
    predictor = x0 + _trail(as_interval(h), 1) * field.eval(x0)
    z = x0.hull(predictor).inflate(settings.inflation, settings.padding)
    lo = hi = found = None
    for _ in range(settings.max_enclosure_iters):
        y = x0 + window * field.eval(z)
        inside = y.strictly_inside(z).all(axis=-1)
        if found is None:
            lo, hi = y.lo.copy(), y.hi.copy()
            found = np.zeros(inside.shape, dtype=bool)
        new = (inside & ~found)[..., None]
        lo = np.where(new, y.lo, lo)
        hi = np.where(new, y.hi, hi)
        found |= inside
        if found.all():
            break
        z = y.inflate(settings.inflation, settings.padding)
    return Interval._raw(lo, hi), found


def _try_rough_derivative(
    field: PolynomialField, z: Interval, h: FloatArray, settings: IntegratorSettings
) -> tuple[Interval, BoolArray]:
    jac = field.jacobian(z)
    eye = Interval.eye(field.n_vars)
    window = _trail(_window(h), 2)
    w = eye.hull(eye + _trail(as_interval(h), 2) * jac).inflate(
        settings.inflation, settings.padding
    )
    lo = hi = found = None
    for _ in range(settings.max_enclosure_iters):
        y = eye + window * batched_matmul(jac, w)
        inside = y.strictly_inside(w).all(axis=(-2, -1))
        if found is None:
            lo, hi = y.lo.copy(), y.hi.copy()
            found = np.zeros(inside.shape, dtype=bool)
        new = (inside & ~found)[..., None, None]
        lo = np.where(new, y.lo, lo)
        hi = np.where(new, y.hi, hi)
        found |= inside
        if found.all():
            break
        w = y.inflate(settings.inflation, settings.padding)
    return Interval._raw(lo, hi), found


def rough_enclosure(
    x0: Interval | FloatArray,
    field: FieldLike,
    h: float | FloatArray,
    *,
    settings: IntegratorSettings | None = None,
) -> Interval:
    """Enclose ``phi([0, h], x0)`` by a validated Picard inclusion.

    The candidate ``Z`` starts as the inflated hull of ``x0`` and its Euler
    predictor and is replaced by the inflated ``x0 + [0, h] F(Z)`` until that set
    lies in the interior of ``Z``; it is then returned.

    Raises:
        NoEnclosure: Some cell did not validate within ``max_enclosure_iters``.
    """
    settings = _settings(settings)
    z, found = _try_rough(
        as_field(field), as_interval(x0), np.asarray(h, dtype=np.float64), settings
    )
    if not found.all():
        raise NoEnclosure(
            f"rough enclosure not validated after {settings.max_enclosure_iters} iterations",
            cell=_first(~found),
        )
    return z


def _validated_windows(
    field: PolynomialField,
    hull: Interval,
    h: FloatArray,
    settings: IntegratorSettings,
    *,
    with_derivative: bool,
) -> tuple[Interval, Interval | None, FloatArray]:
    """Rough enclosures with per-cell step halving until every cell validates."""
    h = h.copy()
    z = w = None
    ok = np.zeros(h.shape, dtype=bool)
    halvings = 0
    while True:
        z_new, found = _try_rough(field, hull, h, settings)
        w_new = None
        if with_derivative:
            w_new, found_w = _try_rough_derivative(field, z_new, h, settings)
            found = found & found_w
        keep = ok
        z = z_new if z is None else Interval.where(keep[..., None], z, z_new)
        if with_derivative:
            w = w_new if w is None else Interval.where(keep[..., None, None], w, w_new)
        ok = ok | found
        if ok.all():
            break
        h = np.where(ok, h, 0.5 * h)
        halvings += 1
        if np.any(~ok & (h < settings.h_min)):
            raise StepUnderflow(
                f"step fell below {settings.h_min:g} after {halvings} halvings",
                cell=_first(~ok & (h < settings.h_min)),
            )
    if halvings:
        logger.debug("rough enclosure needed %d step halvings", halvings)
    return z, w, h


def suggest_step(coeffs: list[Interval], settings: IntegratorSettings) -> FloatArray:
    """Step with the last Taylor terms below ``tolerance * (1 + |x|)``, capped at ``h_max``."""
    p = len(coeffs) - 1
    scale = settings.tolerance * (1.0 + coeffs[0].mag().max(axis=-1))
    h = np.full(scale.shape, settings.h_max)
    for k in (p - 1, p):
        if k < 1:
            continue
        norm = coeffs[k].mag().max(axis=-1)
        safe = np.where(norm > 0, norm, 1.0)
        h = np.minimum(h, np.where(norm > 0, (scale / safe) ** (1.0 / k), np.inf))
    return _quantize(h)


# -- one step ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepResult:
    next: FlowSet
    step: FloatArray
    rough: Interval


def _lohner(s: FlowSet, y: Interval, a: Interval, h: Interval) -> FlowSet:
    ac = batched_matmul(a, s.frame)
    ab = batched_matmul(a, s.tail_frame)
    frame = ac.mid()
    base = y.mid()
    tail_frame = orthonormalize(ab.mid())
    q_inv = inverse(as_interval(tail_frame))
    r0 = s.r0.broadcast_to((*frame.shape[:-2], frame.shape[-1]))
    shift = (y - base) + matvec(ac - frame, r0)
    tail = matvec(q_inv, shift) + matvec(batched_matmul(q_inv, ab), s.tail)
    return FlowSet(
        base=as_interval(base),
        frame=frame,
        r0=r0,
        tail_frame=tail_frame,
        tail=tail,
        time=s.time + h,
    )


def _lohner_matrix(v: VariationalSet, a: Interval) -> VariationalSet:
    am = batched_matmul(a, v.point)
    aq = batched_matmul(a, v.frame)
    point = am.mid()
    frame = orthonormalize(aq.mid())
    q_inv = inverse(as_interval(frame))
    error = batched_matmul(q_inv, am - point) + batched_matmul(batched_matmul(q_inv, aq), v.error)
    return VariationalSet(point=point, frame=frame, error=error)


@dataclass(frozen=True)
class StepExpansion:
    """Validated Taylor data of one step from ``start`` over ``[0, h]``.

    Any time ``tau`` inside the window may be evaluated, which is how section
    crossings inside a step are located.
    """

    start: FlowSet
    h: FloatArray
    coeffs: list[Interval]
    phis: list[Interval]
    remainder: Interval
    rough: Interval
    rough_derivative: Interval | None = None
    derivative_remainder: Interval | None = None

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def center(self, tau: Interval) -> Interval:
        """Enclosure of the trajectory of the base point at times ``tau``."""
        tail = self.remainder * _trail(tau ** (self.order + 1), 1)
        return _horner(self.coeffs, tau, 1) + tail

    def truncated_derivative(self, tau: Interval) -> Interval:
        return _horner(self.phis, tau, 2)

    def derivative(self, tau: Interval) -> Interval:
        """Enclosure of ``D_x phi(tau, x)`` over ``hull(start)``."""
        if self.derivative_remainder is None:
            raise ValueError("expansion was built without the variational enclosure")
        tail = self.derivative_remainder * _trail(tau ** (self.order + 1), 2)
        return self.truncated_derivative(tau) + tail

    def linear_form(self, tau: Interval) -> tuple[Interval, Interval, Interval]:
        """``(y, G, rho)`` such that the set at ``tau`` lies in ``y + G @ rho``."""
        a = self.truncated_derivative(tau)
        g = Interval.concatenate(
            [batched_matmul(a, self.start.frame), batched_matmul(a, self.start.tail_frame)], axis=-1
        )
        rho = Interval.concatenate([self.start.r0, self.start.tail], axis=-1)
        return self.center(tau), g, rho

    def enclose(self, tau: Interval) -> Interval:
        y, g, rho = self.linear_form(tau)
        return y + matvec(g, rho)

    def advance(self, h: FloatArray | None = None) -> FlowSet:
        hh = as_interval(self.h if h is None else np.asarray(h, dtype=np.float64))
        return _lohner(self.start, self.center(hh), self.truncated_derivative(hh), hh)

    def advance_derivative(self, v: VariationalSet, h: FloatArray | None = None) -> VariationalSet:
        hh = as_interval(self.h if h is None else np.asarray(h, dtype=np.float64))
        return _lohner_matrix(v, self.derivative(hh))

    def take(self, index: Any) -> StepExpansion:
        def opt(x: Interval | None) -> Interval | None:
            return None if x is None else x[index]

        return StepExpansion(
            start=self.start.take(index),
            h=self.h[index],
            coeffs=[c[index] for c in self.coeffs],
            phis=[p[index] for p in self.phis],
            remainder=self.remainder[index],
            rough=self.rough[index],
            rough_derivative=opt(self.rough_derivative),
            derivative_remainder=opt(self.derivative_remainder),
        )


def _build_expansion(
    field: PolynomialField,
    s: FlowSet,
    h: FloatArray,
    z: Interval,
    w: Interval | None,
    coeffs: list[Interval] | None,
    order: int,
) -> StepExpansion:
    if coeffs is None:
        coeffs = field.taylor_coefficients(s.base, order)
    remainder = field.taylor_coefficients(z, order + 1)[order + 1]
    _, phis = field.variational_coefficients(s.hull, order)
    derivative_remainder = None
    if w is not None:
        _, phis_z = field.variational_coefficients(z, order + 1, v0=w)
        derivative_remainder = phis_z[order + 1]
    return StepExpansion(
        start=s,
        h=h,
        coeffs=coeffs,
        phis=phis,
        remainder=remainder,
        rough=z,
        rough_derivative=w,
        derivative_remainder=derivative_remainder,
    )


def _prepare(field: PolynomialField, s: FlowSet, h: Any) -> tuple[FlowSet, FloatArray]:
    batch = np.broadcast_shapes(s.batch_shape, field.batch_shape, np.shape(h))
    s = s.broadcast_to(batch)
    return s, np.broadcast_to(np.asarray(h, dtype=np.float64), batch).copy()


def c0_step(
    s: FlowSet,
    field: FieldLike,
    h: float | FloatArray,
    order: int | None = None,
    *,
    settings: IntegratorSettings | None = None,
) -> StepResult:
    """Move ``s`` forward by exactly ``h``.

    Raises:
        NoEnclosure: The rough enclosure over ``[0, h]`` did not validate; the
            caller has to shrink ``h``.
    """
    settings = _settings(settings, order)
    f = as_field(field)
    s, hh = _prepare(f, s, h)
    z, found = _try_rough(f, s.hull, hh, settings)
    if not found.all():
        raise NoEnclosure("rough enclosure not validated", cell=_first(~found))
    e = _build_expansion(f, s, hh, z, None, None, settings.order)
    return StepResult(next=e.advance(), step=hh, rough=z)


def c1_step(
    s: FlowSet,
    v: VariationalSet | Interval | FloatArray,
    field: FieldLike,
    h: float | FloatArray,
    order: int | None = None,
    *,
    settings: IntegratorSettings | None = None,
) -> tuple[StepResult, VariationalSet]:
    """Move ``s`` by ``h`` together with the derivative ``D_x phi(h, .) @ v``."""
    settings = _settings(settings, order)
    f = as_field(field)
    s, hh = _prepare(f, s, h)
    if not isinstance(v, VariationalSet):
        v = VariationalSet.from_matrix(v)
    v = v.broadcast_to(s.batch_shape)
    z, found = _try_rough(f, s.hull, hh, settings)
    if not found.all():
        raise NoEnclosure("rough enclosure not validated", cell=_first(~found))
    w, found = _try_rough_derivative(f, z, hh, settings)
    if not found.all():
        raise NoEnclosure("variational rough enclosure not validated", cell=_first(~found))
    e = _build_expansion(f, s, hh, z, w, None, settings.order)
    return StepResult(next=e.advance(), step=hh, rough=z), e.advance_derivative(v)


# -- step-controlled driver -------------------------------------------------------------


class TaylorIntegrator:
    """Step-controlled validated integrator of a polynomial vector field.

    Args:
        field: The right-hand side; :class:`FhnParams` and :class:`SlowFastField`
            are integrated through their full polynomial form.
        settings: Order and step policy, defaulting to the process configuration.
    """

    def __init__(self, field: FieldLike, settings: IntegratorSettings | None = None) -> None:
        self.field = as_field(field)
        self.settings = _settings(settings)

    def __repr__(self) -> str:
        return f"TaylorIntegrator(order={self.settings.order}, dim={self.field.dim})"

    @property
    def order(self) -> int:
        return self.settings.order

    def expand(
        self,
        s: FlowSet,
        h: float | FloatArray | None = None,
        *,
        h_cap: float | FloatArray | None = None,
        with_derivative: bool = False,
    ) -> StepExpansion:
        """Validated Taylor data for one step.

        ``h`` defaults to the controlled step size, limited by ``h_cap``; cells
        whose rough enclosure fails are retried with half the step.
        """
        coeffs = self.field.taylor_coefficients(s.base, self.order)
        if h is None:
            h = suggest_step(coeffs, self.settings)
        if h_cap is not None:
            h = np.minimum(h, h_cap)
        s, hh = _prepare(self.field, s, h)
        coeffs = [c.broadcast_to((*s.batch_shape, s.dim)) for c in coeffs]
        z, w, hh = _validated_windows(
            self.field, s.hull, hh, self.settings, with_derivative=with_derivative
        )
        return _build_expansion(self.field, s, hh, z, w, coeffs, self.order)

    def step(self, s: FlowSet, h: float | FloatArray | None = None) -> StepResult:
        e = self.expand(s, h)
        return StepResult(next=e.advance(), step=e.h, rough=e.rough)

    def step_c1(
        self, s: FlowSet, v: VariationalSet, h: float | FloatArray | None = None
    ) -> tuple[StepResult, VariationalSet]:
        e = self.expand(s, h, with_derivative=True)
        v = v.broadcast_to(e.start.batch_shape)
        return StepResult(next=e.advance(), step=e.h, rough=e.rough), e.advance_derivative(v)

    def _run(
        self, s: FlowSet, t_end: float | FloatArray, v: VariationalSet | None, max_steps: int | None
    ) -> tuple[FlowSet, VariationalSet | None]:
        max_steps = max_steps or current_config().limits.max_steps
        s, target = _prepare(self.field, s, t_end)
        if np.any(target < 0):
            raise ValueError("integration times must be non-negative")
        if v is not None:
            v = v.broadcast_to(s.batch_shape)
        elapsed = np.zeros_like(target)
        steps = 0
        while np.any(elapsed < target):
            steps += 1
            if steps > max_steps:
                raise StepUnderflow(
                    f"no arrival after {max_steps} steps", cell=_first(elapsed < target)
                )
            e = self.expand(s, h_cap=target - elapsed, with_derivative=v is not None)
            s = e.advance()
            if v is not None:
                v = e.advance_derivative(v)
            elapsed = elapsed + e.h
        logger.debug("integrated %d steps up to t=%s", steps, np.max(target, initial=0.0))
        return s, v

    def integrate(
        self, s: FlowSet, t_end: float | FloatArray, *, max_steps: int | None = None
    ) -> FlowSet:
        """Enclose ``phi(t_end, s)``; ``t_end`` may differ per cell."""
        out, _ = self._run(s, t_end, None, max_steps)
        return out

    def integrate_c1(
        self,
        s: FlowSet,
        t_end: float | FloatArray,
        v: VariationalSet | None = None,
        *,
        max_steps: int | None = None,
    ) -> tuple[FlowSet, VariationalSet]:
        """Like :meth:`integrate`, also enclosing ``D_x phi(t_end, .) @ v`` over ``s``."""
        if v is None:
            v = VariationalSet.identity(s.dim, s.batch_shape)
        out, vv = self._run(s, t_end, v, max_steps)
        assert vv is not None
        return out, vv


__all__ = [
    "FieldLike",
    "StepExpansion",
    "StepResult",
    "TaylorIntegrator",
    "as_field",
    "c0_step",
    "c1_step",
    "rough_enclosure",
    "suggest_step",
]
