"""The interval Newton operator ``N(x0, X) = x0 - [DF(X)]^-1 F(x0)``.

``N`` strictly inside ``X`` proves a unique zero of ``F`` in ``X``; ``N`` disjoint
from ``X`` proves there is none.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.errors import SingularEnclosure
from fhnwave.interval import Interval, as_interval, gauss_solve_enclose, solve_preconditioned

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)


class NewtonVerdict(StrEnum):
    UNIQUE_ZERO = "UniqueZero"
    NO_ZERO = "NoZero"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class NewtonOutcome:
    """Result of one Newton operator evaluation.

    For a scalar problem whose derivative enclosure contains zero, the quotient
    splits in two pieces and ``n_box`` is their hull.
    """

    verdict: NewtonVerdict
    n_box: Interval
    x_box: Interval
    x0: FloatArray
    reason: str = ""
    period: Interval | None = None

    @property
    def proved(self) -> bool:
        return self.verdict is NewtonVerdict.UNIQUE_ZERO

    @property
    def radius(self) -> float:
        """Max norm of ``N - x0``."""
        return float(np.max((self.n_box - self.x0).mag(), initial=0.0))

    @property
    def box_radius(self) -> float:
        return float(np.max((self.x_box - self.x0).mag(), initial=0.0))

    @property
    def margin(self) -> Interval:
        """``r - |N - x0|``, positive for a contraction into the box of radius ``r``."""
        return Interval(self.box_radius - self.radius)

    def __str__(self) -> str:
        text = f"Newton {self.verdict}: |N - x0| <= {self.radius:.6e} in a box of radius "
        text += f"{self.box_radius:.3e}"
        return f"{text} ({self.reason})" if self.reason else text


def _verdict(n_box: Interval, x_box: Interval) -> NewtonVerdict:
    if np.all(n_box.strictly_inside(x_box)):
        return NewtonVerdict.UNIQUE_ZERO
    if np.any(n_box.disjoint(x_box)):
        return NewtonVerdict.NO_ZERO
    return NewtonVerdict.INCONCLUSIVE


def _split_quotient(f: Interval, d: Interval) -> list[Interval]:
    """Pieces of ``{a / b : a in f, b in d, b != 0}`` for scalars with ``0 in d``."""
    inf = np.inf
    if f.lo <= 0 <= f.hi:
        return [Interval(-inf, inf)]
    pieces = []
    if f.lo > 0:
        if d.hi > 0:
            pieces.append(Interval((f / Interval(d.hi)).lo, inf))
        if d.lo < 0:
            pieces.append(Interval(-inf, (f / Interval(d.lo)).hi))
    else:
        if d.hi > 0:
            pieces.append(Interval(-inf, (f / Interval(d.hi)).hi))
        if d.lo < 0:
            pieces.append(Interval((f / Interval(d.lo)).lo, inf))
    return pieces


def _scalar_step(
    f_x0: Interval, df: Interval, x0: FloatArray, x_box: Interval
) -> NewtonOutcome:
    d, f = df.reshape(()), f_x0.reshape(())
    pieces = [(x0[0] - q).reshape(1) for q in _split_quotient(f, d)]
    n_box = pieces[0] if len(pieces) == 1 else pieces[0].hull(pieces[1])
    if all(np.any(p.disjoint(x_box)) for p in pieces):
        return NewtonOutcome(NewtonVerdict.NO_ZERO, n_box, x_box, x0, "derivative contains zero")
    return NewtonOutcome(
        NewtonVerdict.INCONCLUSIVE, n_box, x_box, x0, "derivative contains zero"
    )


def newton_operator(
    f_x0: Interval, df: Interval, x0: FloatArray, *, precondition: bool = True
) -> Interval:
    """``x0 - [df]^-1 f_x0``; raises :class:`SingularEnclosure` for a singular ``df``."""
    solve = solve_preconditioned if precondition else gauss_solve_enclose
    return x0 - solve(df, f_x0)


def newton_step(
    f_x0: Interval | FloatArray,
    df: Interval | FloatArray,
    x0: FloatArray,
    x_box: Interval,
    *,
    precondition: bool = True,
) -> NewtonOutcome:
    """Classify ``N(x0, X)`` from a residual enclosure and a derivative enclosure."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    f_x0 = as_interval(f_x0).reshape(x0.shape)
    df = as_interval(df).reshape(x0.size, x0.size)
    x_box = as_interval(x_box).reshape(x0.shape)
    if not np.all(x_box.contains(x0)):
        raise ValueError("x0 must lie in the box X")
    try:
        n_box = newton_operator(f_x0, df, x0, precondition=precondition)
    except SingularEnclosure as e:
        if x0.size == 1:
            return _scalar_step(f_x0, df, x0, x_box)
        logger.debug("singular derivative enclosure: %s", e)
        return NewtonOutcome(
            NewtonVerdict.INCONCLUSIVE, Interval(np.full(x0.shape, -np.inf), np.inf), x_box, x0,
            f"singular derivative enclosure ({e})",
        )
    return NewtonOutcome(_verdict(n_box, x_box), n_box, x_box, x0)


def interval_newton(
    f: Callable[[Interval | FloatArray], Interval],
    df: Callable[[Interval], Interval],
    x0: FloatArray | float,
    x_box: Interval,
) -> NewtonOutcome:
    """Evaluate ``F`` at the thin point ``x0`` and ``DF`` over ``X`` and classify ``N``.

    Args:
        f: Interval extension of ``F``.
        df: Interval extension of ``DF``, evaluated on the whole box.
        x0: A point of ``x_box``, usually its midpoint.
        x_box: The candidate box ``X``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    x_box = as_interval(x_box).reshape(x0.shape)
    outcome = newton_step(f(as_interval(x0)), df(x_box), x0, x_box)
    logger.info("%s", outcome)
    return outcome


__all__ = [
    "NewtonOutcome",
    "NewtonVerdict",
    "interval_newton",
    "newton_operator",
    "newton_step",
]
