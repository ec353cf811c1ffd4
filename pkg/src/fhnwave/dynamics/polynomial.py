"""Polynomial vector fields and their Taylor recurrences.

A :class:`PolynomialField` is a list of monomial terms per component. Taylor
coefficients of the flow are produced by forward automatic differentiation:
every monomial ``x**alpha`` is built as ``x**beta * x_i`` and its series is the
Cauchy product of the two factor series, so one order costs O(k) per monomial.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.interval import Interval, as_interval, batched_matmul

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class Term:
    coef: Interval
    exponent: Exponent


def _coef(value: Interval | float | str) -> Interval:
    if isinstance(value, str):
        return Interval.from_decimal(value)
    return as_interval(value)


def _sum(items: Sequence[Interval], shape: tuple[int, ...]) -> Interval:
    if not items:
        return Interval.zeros(shape)
    acc = items[0]
    for item in items[1:]:
        acc = acc + item
    return acc.broadcast_to(np.broadcast_shapes(acc.shape, shape))


class PolynomialField:
    """Polynomial right-hand side ``x' = f(x)`` with interval coefficients.

    Args:
        components: For each output component, a sequence of ``(coefficient,
            exponent)`` pairs. Coefficients may be intervals, floats or decimal
            strings; batched coefficients (shape ``(B,)``) give one field per cell.
        n_vars: Number of state variables, inferred from the exponents if omitted.
    """

    def __init__(
        self,
        components: Sequence[Sequence[tuple[Interval | float | str, Sequence[int]]]],
        n_vars: int | None = None,
    ) -> None:
        rows: list[list[Term]] = [
            [Term(_coef(c), tuple(int(e) for e in exps)) for c, exps in comp]
            for comp in components
        ]
        if n_vars is None:
            lengths = {len(t.exponent) for row in rows for t in row}
            if len(lengths) != 1:
                raise ValueError("cannot infer the number of variables")
            n_vars = lengths.pop()
        self.n_vars = n_vars
        self.terms = rows
        self._jac_terms = [
            [
                [
                    Term(t.coef * float(t.exponent[j]), _lower(t.exponent, j))
                    for t in row
                    if t.exponent[j] > 0
                ]
                for j in range(n_vars)
            ]
            for row in rows
        ]
        self._build_chain()

    @classmethod
    def _from_terms(cls, rows: list[list[Term]], n_vars: int) -> PolynomialField:
        return cls([[(t.coef, t.exponent) for t in row] for row in rows], n_vars=n_vars)

    def _build_chain(self) -> None:
        needed: set[Exponent] = set()
        for row in self.terms:
            needed.update(t.exponent for t in row)
        for row in self._jac_terms:
            for col in row:
                needed.update(t.exponent for t in col)
        chain: dict[Exponent, tuple[Exponent, int]] = {}
        stack = [e for e in needed if sum(e) >= 2]
        while stack:
            alpha = stack.pop()
            if alpha in chain:
                continue
            i = next(k for k, a in enumerate(alpha) if a > 0)
            beta = _lower(alpha, i)
            chain[alpha] = (beta, i)
            if sum(beta) >= 2:
                stack.append(beta)
        self._chain = sorted(chain.items(), key=lambda item: sum(item[0]))

    # -- structure --------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.terms)

    @cached_property
    def degree(self) -> int:
        return max((sum(t.exponent) for row in self.terms for t in row), default=0)

    @cached_property
    def batch_shape(self) -> tuple[int, ...]:
        shapes = [t.coef.shape for row in self.terms for t in row]
        return np.broadcast_shapes(*shapes) if shapes else ()

    def map_coefficients(self, fn: Any) -> PolynomialField:
        return PolynomialField._from_terms(
            [[Term(fn(t.coef), t.exponent) for t in row] for row in self.terms], self.n_vars
        )

    def negated(self) -> PolynomialField:
        """The field ``-f``, whose flow is the backward flow of ``f``."""
        return self.map_coefficients(lambda c: -c)

    def take(self, index: Any) -> PolynomialField:
        """Select cells of a batched field; unbatched coefficients are shared."""
        return self.map_coefficients(lambda c: c[index] if c.ndim else c)

    def scaled(self, factor: Interval | float) -> PolynomialField:
        factor = as_interval(factor)
        return self.map_coefficients(lambda c: c * factor)

    @staticmethod
    def vstack(*fields: PolynomialField) -> PolynomialField:
        """Concatenate the components of fields over the same variables."""
        n_vars = {f.n_vars for f in fields}
        if len(n_vars) != 1:
            raise ValueError("fields must share their variables")
        rows = [row for f in fields for row in f.terms]
        return PolynomialField._from_terms(rows, n_vars.pop())

    # -- evaluation -------------------------------------------------------------------

    def _monomials(self, x: Interval, exponents: set[Exponent]) -> dict[Exponent, Interval]:
        out: dict[Exponent, Interval] = {}
        for alpha in exponents:
            value: Interval | None = None
            for i, a in enumerate(alpha):
                if a:
                    p = x[..., i] ** a
                    value = p if value is None else value * p
            out[alpha] = value if value is not None else as_interval(np.ones(x.shape[:-1]))
        return out

    def eval(self, x: Interval | FloatArray) -> Interval:
        """Enclose ``f(x)``; ``x`` has shape ``(..., n_vars)``."""
        x = as_interval(x)
        mono = self._monomials(x, {t.exponent for row in self.terms for t in row})
        shape = np.broadcast_shapes(x.shape[:-1], self.batch_shape)
        return Interval.stack(
            [_sum([t.coef * mono[t.exponent] for t in row], shape) for row in self.terms], axis=-1
        )

    def jacobian(self, x: Interval | FloatArray) -> Interval:
        """Enclose ``Df(x)`` with shape ``(..., dim, n_vars)``."""
        x = as_interval(x)
        exps = {t.exponent for row in self._jac_terms for col in row for t in col}
        mono = self._monomials(x, exps)
        shape = np.broadcast_shapes(x.shape[:-1], self.batch_shape)
        rows = [
            Interval.stack(
                [_sum([t.coef * mono[t.exponent] for t in col], shape) for col in row], -1
            )
            for row in self._jac_terms
        ]
        return Interval.stack(rows, axis=-2)

    def eval_float(self, x: FloatArray) -> FloatArray:
        """Plain floating point evaluation at coefficient midpoints."""
        x = np.asarray(x, dtype=np.float64)
        out = []
        for row in self.terms:
            acc = np.zeros(np.broadcast_shapes(x.shape[:-1], self.batch_shape))
            for t in row:
                acc = acc + t.coef.mid() * np.prod(x ** np.asarray(t.exponent), axis=-1)
            out.append(acc)
        return np.stack(out, axis=-1)

    def jacobian_float(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=np.float64)
        rows = []
        for row in self._jac_terms:
            cols = []
            for col in row:
                acc = np.zeros(np.broadcast_shapes(x.shape[:-1], self.batch_shape))
                for t in col:
                    acc = acc + t.coef.mid() * np.prod(x ** np.asarray(t.exponent), axis=-1)
                cols.append(acc)
            rows.append(np.stack(cols, axis=-1))
        return np.stack(rows, axis=-2)

    # -- Taylor recurrences -----------------------------------------------------------

    def _series(self, x0: Interval, order: int) -> tuple[list[Interval], _MonomialSeries]:
        if self.dim != self.n_vars:
            raise ValueError("Taylor series need a square field")
        shape = np.broadcast_shapes(x0.shape[:-1], self.batch_shape)
        xs = [x0.broadcast_to((*shape, self.n_vars))]
        series = _MonomialSeries(xs, shape)
        for k in range(order):
            series.extend(self._chain, k)
            f_k = Interval.stack(
                [
                    _sum([t.coef * series.get(t.exponent, k) for t in row], shape)
                    for row in self.terms
                ],
                axis=-1,
            )
            xs.append(f_k / float(k + 1))
        return xs, series

    def taylor_coefficients(self, x0: Interval | FloatArray, order: int) -> list[Interval]:
        """Normalized derivatives ``x^{(k)}(0) / k!`` for ``k = 0..order``."""
        xs, _ = self._series(as_interval(x0), order)
        return xs

    def variational_coefficients(
        self,
        x0: Interval | FloatArray,
        order: int,
        v0: Interval | FloatArray | None = None,
    ) -> tuple[list[Interval], list[Interval]]:
        """Taylor coefficients of ``x`` and of ``V' = Df(x) V`` with ``V(0) = v0``.

        Returns:
            The state coefficients and the matrix coefficients, ``order + 1`` each.
        """
        x0 = as_interval(x0)
        xs, series = self._series(x0, order)
        shape = series.shape
        v_init = Interval.eye(self.n_vars) if v0 is None else as_interval(v0)
        phis = [v_init.broadcast_to((*shape, *v_init.shape[-2:]))]
        jacs: list[Interval] = []
        for k in range(order):
            jacs.append(
                Interval.stack(
                    [
                        Interval.stack(
                            [
                                _sum([t.coef * series.get(t.exponent, k) for t in col], shape)
                                for col in row
                            ],
                            axis=-1,
                        )
                        for row in self._jac_terms
                    ],
                    axis=-2,
                )
            )
            js = Interval.stack(jacs, axis=0)
            ps = Interval.stack(phis[::-1], axis=0)
            phis.append(batched_matmul(js, ps).sum(axis=0) / float(k + 1))
        return xs, phis


@dataclass
class _MonomialSeries:
    xs: list[Interval]
    shape: tuple[int, ...]
    table: dict[Exponent, list[Interval]] = field(default_factory=dict)

    def get(self, alpha: Exponent, k: int) -> Interval:
        degree = sum(alpha)
        if degree == 0:
            return as_interval(np.full(self.shape, 1.0 if k == 0 else 0.0))
        if degree == 1:
            return self.xs[k][..., alpha.index(1)]
        return self.table[alpha][k]

    def extend(self, chain: list[tuple[Exponent, tuple[Exponent, int]]], k: int) -> None:
        for alpha, (beta, i) in chain:
            left = Interval.stack([self.get(beta, j) for j in range(k + 1)], axis=0)
            right = Interval.stack([self.xs[k - j][..., i] for j in range(k + 1)], axis=0)
            self.table.setdefault(alpha, []).append((left * right).sum(axis=0))


def _lower(alpha: Exponent, j: int) -> Exponent:
    return tuple(a - 1 if i == j else a for i, a in enumerate(alpha))


@dataclass(frozen=True)
class SlowFastField:
    """A polynomial field whose slow rows carry an explicit factor ``eps``.

    ``slow`` holds the slow right-hand side divided by ``eps``; inequalities on
    slow faces are checked on it directly, which is valid for every ``eps > 0``.
    """

    fast: PolynomialField
    slow: PolynomialField
    eps: Interval

    @cached_property
    def full(self) -> PolynomialField:
        return PolynomialField.vstack(self.fast, self.slow.scaled(self.eps))

    @property
    def n_vars(self) -> int:
        return self.fast.n_vars

    @property
    def n_fast(self) -> int:
        return self.fast.dim

    def with_eps(self, eps: Interval | float) -> SlowFastField:
        return SlowFastField(self.fast, self.slow, as_interval(eps))

    def negated(self) -> SlowFastField:
        """The time-reversed field."""
        return SlowFastField(self.fast.negated(), self.slow.negated(), self.eps)

    def eval(self, x: Interval | FloatArray) -> Interval:
        return self.full.eval(x)

    def jacobian(self, x: Interval | FloatArray) -> Interval:
        return self.full.jacobian(x)

    def slow_factored(self, x: Interval | FloatArray) -> Interval:
        """The slow right-hand side divided by ``eps``."""
        return self.slow.eval(x)

    def slow_jacobian_factored(self, x: Interval | FloatArray) -> Interval:
        return self.slow.jacobian(x)


__all__ = ["PolynomialField", "SlowFastField", "Term"]
