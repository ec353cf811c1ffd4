"""The FitzHugh-Nagumo traveling-wave ODE.

In the moving frame with wave speed ``theta`` the system reads::

    u' = v
    v' = gamma * (theta * v - u (u - a) (1 - u) + w)
    w' = (eps / theta) * (u - w)

with ``a = 0.1`` and ``gamma = 0.2``. The fast subsystem is the ``(u, v)``
plane with ``w`` frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.dynamics.polynomial import PolynomialField, SlowFastField
from fhnwave.interval import Interval, as_interval

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

A_DECIMAL = "0.1"
GAMMA_DECIMAL = "0.2"
A_FLOAT = 0.1
GAMMA_FLOAT = 0.2


def _param(value: Interval | float | str) -> Interval:
    return Interval.from_decimal(value) if isinstance(value, str) else as_interval(value)


@dataclass(frozen=True)
class FhnParams:
    """Interval parameters of the traveling-wave system.

    ``theta`` and ``eps`` may be batched (shape ``(B,)``) to give every cell of a
    computation its own parameter box.
    """

    theta: Interval
    eps: Interval
    a: Interval = field(default_factory=lambda: Interval.from_decimal(A_DECIMAL))
    gamma: Interval = field(default_factory=lambda: Interval.from_decimal(GAMMA_DECIMAL))

    def __post_init__(self) -> None:
        if np.any(self.theta.lo <= 0):
            raise ValueError("theta must be strictly positive")
        if np.any(self.eps.lo < 0):
            raise ValueError("eps must be non-negative")

    @classmethod
    def create(
        cls, theta: Interval | float | str, eps: Interval | float | str = 0.0
    ) -> FhnParams:
        return cls(theta=_param(theta), eps=_param(eps))

    def with_eps(self, eps: Interval | float | str) -> FhnParams:
        return FhnParams(theta=self.theta, eps=_param(eps), a=self.a, gamma=self.gamma)

    def with_theta(self, theta: Interval | float | str) -> FhnParams:
        return FhnParams(theta=_param(theta), eps=self.eps, a=self.a, gamma=self.gamma)

    @cached_property
    def vector_field(self) -> SlowFastField:
        """Expanded monomial form used by the Taylor engine."""
        g, a, th = self.gamma, self.a, self.theta
        fast = PolynomialField(
            [
                [(1.0, (0, 1, 0))],
                [
                    (g * th, (0, 1, 0)),
                    (g, (3, 0, 0)),
                    (-(g * (1.0 + a)), (2, 0, 0)),
                    (g * a, (1, 0, 0)),
                    (g, (0, 0, 1)),
                ],
            ],
            n_vars=3,
        )
        inv_theta = 1.0 / th
        slow = PolynomialField([[(inv_theta, (1, 0, 0)), (-inv_theta, (0, 0, 1))]], n_vars=3)
        return SlowFastField(fast=fast, slow=slow, eps=self.eps)


def cubic(u: Interval, a: Interval) -> Interval:
    return u * (u - a) * (1.0 - u)


def fhn_eval(x: Interval | FloatArray, p: FhnParams) -> Interval:
    """Enclose the vector field in its factored form."""
    x = as_interval(x)
    u, v, w = x[..., 0], x[..., 1], x[..., 2]
    du = v
    dv = p.gamma * (p.theta * v - cubic(u, p.a) + w)
    dw = (p.eps / p.theta) * (u - w)
    return Interval.stack([du, dv, dw], axis=-1)


def fhn_slow_row_factored(p: FhnParams) -> Interval:
    """Row 3 of the Jacobian divided by ``eps``: ``(1/theta, 0, -1/theta)``."""
    inv = 1.0 / p.theta
    return Interval.stack([inv, Interval.zeros(inv.shape), -inv], axis=-1)


def fhn_jacobian(x: Interval | FloatArray, p: FhnParams) -> Interval:
    """Enclose ``DF(x)``; row 3 is ``eps`` times :func:`fhn_slow_row_factored`."""
    x = as_interval(x)
    u = x[..., 0]
    shape = np.broadcast_shapes(u.shape, p.theta.shape, p.eps.shape)
    zero = Interval.zeros(shape)
    one = as_interval(np.ones(shape))
    dcubic = -3.0 * u.sqr() + 2.0 * (1.0 + p.a) * u - p.a
    row1 = Interval.stack([zero, one, zero], axis=-1)
    row2 = Interval.stack(
        [(-p.gamma * dcubic).broadcast_to(shape), (p.gamma * p.theta).broadcast_to(shape),
         p.gamma.broadcast_to(shape)],
        axis=-1,
    )
    row3 = (p.eps[..., None] * fhn_slow_row_factored(p)).broadcast_to((*shape, 3))
    return Interval.stack([row1, row2, row3], axis=-2)


def fast_eval(
    u: Interval | float, v: Interval | float, w: Interval | float, theta: Interval | float | str
) -> Interval:
    """Enclose the fast subsystem ``(v, 0.2 (theta v - u (u - 0.1)(1 - u) + w))``."""
    u, v, w = as_interval(u), as_interval(v), as_interval(w)
    a = Interval.from_decimal(A_DECIMAL)
    g = Interval.from_decimal(GAMMA_DECIMAL)
    dv = g * (_param(theta) * v - cubic(u, a) + w)
    return Interval.stack([v.broadcast_to(dv.shape), dv], axis=-1)


def taylor_coeffs(x0: Interval | FloatArray, p: FhnParams, order: int) -> list[Interval]:
    """Normalized Taylor coefficients of the flow at ``x0``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    return p.vector_field.full.taylor_coefficients(x0, order)


# -- plain floating point helpers, used only by the oracle and the ansatz builders ----


def cubic_float(u: FloatArray | float, a: float = A_FLOAT) -> FloatArray:
    return np.asarray(u * (u - a) * (1.0 - u))


def cubic_prime_float(u: FloatArray | float, a: float = A_FLOAT) -> FloatArray:
    return np.asarray(-3.0 * u * u + 2.0 * (1.0 + a) * u - a)


def fhn_rhs(x: FloatArray, theta: float, eps: float) -> FloatArray:
    x = np.asarray(x, dtype=np.float64)
    u, v, w = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [v, GAMMA_FLOAT * (theta * v - cubic_float(u) + w), (eps / theta) * (u - w)], axis=-1
    )


def fhn_jacobian_float(x: FloatArray, theta: float, eps: float) -> FloatArray:
    u = float(np.asarray(x)[0])
    return np.array(
        [
            [0.0, 1.0, 0.0],
            [-GAMMA_FLOAT * float(cubic_prime_float(u)), GAMMA_FLOAT * theta, GAMMA_FLOAT],
            [eps / theta, 0.0, -eps / theta],
        ]
    )


def fast_equilibrium(w: float, u_guess: float, *, tol: float = 1e-15, max_iter: int = 60) -> float:
    """Float Newton for ``u (u - a)(1 - u) = w`` started at ``u_guess``."""
    u = float(u_guess)
    for _ in range(max_iter):
        step = float(cubic_float(u) - w) / float(cubic_prime_float(u))
        u -= step
        if abs(step) <= tol * max(1.0, abs(u)):
            break
    return u


def fast_eigenvalues(u: float, theta: float) -> tuple[float, float]:
    """Eigenvalues ``(lambda_u, lambda_s)`` of the fast Jacobian at ``(u, 0)``."""
    tr = GAMMA_FLOAT * theta
    det = GAMMA_FLOAT * float(cubic_prime_float(u))
    disc = np.sqrt(tr * tr - 4.0 * det)
    return 0.5 * (tr + disc), 0.5 * (tr - disc)


def fast_eigenframe(u: float, theta: float) -> FloatArray:
    """The frame ``[[1, 1], [lambda_u, lambda_s]]`` of the fast saddle at ``u``."""
    lu, ls = fast_eigenvalues(u, theta)
    return np.array([[1.0, 1.0], [lu, ls]])


__all__ = [
    "FhnParams",
    "cubic",
    "cubic_float",
    "cubic_prime_float",
    "fast_eigenframe",
    "fast_eigenvalues",
    "fast_equilibrium",
    "fast_eval",
    "fhn_eval",
    "fhn_jacobian",
    "fhn_jacobian_float",
    "fhn_rhs",
    "fhn_slow_row_factored",
    "taylor_coeffs",
]
