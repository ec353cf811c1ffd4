"""Outward rounded interval arrays.

An :class:`Interval` stores two float64 arrays ``lo`` and ``hi`` of the same
shape. A scalar interval has shape ``()``, a box has shape ``(n,)`` and an
interval matrix ``(n, m)``; leading axes are batches of independent cells.

Directed rounding is emulated by nudging every round-to-nearest result one
ulp outward with :func:`numpy.nextafter`, so no floating point mode is ever
switched and the arithmetic stays data parallel.
"""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.errors import DivisionByZeroInterval

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from numpy.typing import ArrayLike, NDArray

    FloatArray = NDArray[np.float64]

_INF = np.inf


def down(x: Any) -> FloatArray:
    """Round one ulp towards minus infinity."""
    return np.nextafter(x, -_INF)


def up(x: Any) -> FloatArray:
    """Round one ulp towards plus infinity."""
    return np.nextafter(x, _INF)


def _clean(lo: FloatArray, hi: FloatArray) -> tuple[FloatArray, FloatArray]:
    # NaN endpoints come from inf - inf or 0 * inf and mean "anything".
    if np.isnan(lo).any() or np.isnan(hi).any():
        lo = np.where(np.isnan(lo), -_INF, lo)
        hi = np.where(np.isnan(hi), _INF, hi)
    return lo, hi


def add_bounds(
    al: FloatArray, ah: FloatArray, bl: FloatArray, bh: FloatArray
) -> tuple[FloatArray, FloatArray]:
    return _clean(down(al + bl), up(ah + bh))


def sub_bounds(
    al: FloatArray, ah: FloatArray, bl: FloatArray, bh: FloatArray
) -> tuple[FloatArray, FloatArray]:
    return _clean(down(al - bh), up(ah - bl))


def mul_bounds(
    al: FloatArray, ah: FloatArray, bl: FloatArray, bh: FloatArray
) -> tuple[FloatArray, FloatArray]:
    p1 = al * bl
    p2 = al * bh
    p3 = ah * bl
    p4 = ah * bh
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _clean(down(lo), up(hi))


def div_bounds(
    al: FloatArray, ah: FloatArray, bl: FloatArray, bh: FloatArray
) -> tuple[FloatArray, FloatArray]:
    straddles = (bl <= 0) & (bh >= 0)
    if np.any(straddles):
        cell = int(np.flatnonzero(straddles)[0])
        raise DivisionByZeroInterval("divisor interval contains zero", cell=cell)
    q1 = al / bl
    q2 = al / bh
    q3 = ah / bl
    q4 = ah / bh
    lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
    hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
    return _clean(down(lo), up(hi))


def sum_bounds(lo: FloatArray, hi: FloatArray, axis: int) -> tuple[FloatArray, FloatArray]:
    """Sequential outward summation along ``axis``."""
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    acc_lo, acc_hi = lo[0], hi[0]
    for k in range(1, lo.shape[0]):
        acc_lo, acc_hi = add_bounds(acc_lo, acc_hi, lo[k], hi[k])
    return np.asarray(acc_lo), np.asarray(acc_hi)


class Interval:
    """Array of closed intervals ``[lo, hi]`` with outward rounded arithmetic."""

    __slots__ = ("hi", "lo")
    # Make ``ndarray <op> Interval`` defer to the reflected Interval operators.
    __array_ufunc__ = None

    lo: FloatArray
    hi: FloatArray

    def __init__(self, lo: ArrayLike, hi: ArrayLike | None = None) -> None:
        lo_arr = np.asarray(lo, dtype=np.float64)
        hi_arr = lo_arr if hi is None else np.asarray(hi, dtype=np.float64)
        lo_arr, hi_arr = np.broadcast_arrays(lo_arr, hi_arr)
        lo_arr, hi_arr = _clean(np.array(lo_arr), np.array(hi_arr))
        if np.any(lo_arr > hi_arr):
            raise ValueError("interval lower bound exceeds upper bound")
        self.lo = lo_arr
        self.hi = hi_arr

    @classmethod
    def _raw(cls, lo: FloatArray, hi: FloatArray) -> Interval:
        obj = object.__new__(cls)
        obj.lo = np.asarray(lo, dtype=np.float64)
        obj.hi = np.asarray(hi, dtype=np.float64)
        return obj

    # -- constructors -----------------------------------------------------------------

    @classmethod
    def from_decimal(cls, text: str | float, *, exact: bool = False) -> Interval:
        """Enclose a decimal literal.

        The literal is parsed exactly. Unless it is representable in binary64 or
        ``exact`` is set, the nearest double is widened by one ulp on each side.
        """
        q = Fraction(text) if isinstance(text, (int, float)) else Fraction(str(text).strip())
        f = float(q)
        if exact or Fraction(f) == q:
            return cls._raw(np.asarray(f), np.asarray(f))
        return cls._raw(down(np.asarray(f)), up(np.asarray(f)))

    @classmethod
    def from_decimals(cls, values: Any, *, exact: bool = False) -> Interval:
        """Enclose a nested sequence of decimal literals."""
        obj = np.asarray(values, dtype=object)
        lo = np.empty(obj.shape, dtype=np.float64)
        hi = np.empty(obj.shape, dtype=np.float64)
        for idx, item in np.ndenumerate(obj):
            enc = cls.from_decimal(item, exact=exact)
            lo[idx] = enc.lo
            hi[idx] = enc.hi
        return cls._raw(lo, hi)

    @classmethod
    def from_hex(cls, lo: str, hi: str) -> Interval:
        return cls(float.fromhex(lo), float.fromhex(hi))

    @classmethod
    def zeros(cls, shape: int | tuple[int, ...]) -> Interval:
        z = np.zeros(shape)
        return cls._raw(z, z.copy())

    @classmethod
    def eye(cls, n: int) -> Interval:
        e = np.eye(n)
        return cls._raw(e, e.copy())

    @classmethod
    def symmetric(cls, radius: ArrayLike) -> Interval:
        r = np.abs(np.asarray(radius, dtype=np.float64))
        return cls._raw(-r, r)

    @staticmethod
    def stack(items: Sequence[Interval | ArrayLike], axis: int = 0) -> Interval:
        ivs = [as_interval(it) for it in items]
        shape = np.broadcast_shapes(*(iv.shape for iv in ivs))
        lo = np.stack([np.broadcast_to(iv.lo, shape) for iv in ivs], axis=axis)
        hi = np.stack([np.broadcast_to(iv.hi, shape) for iv in ivs], axis=axis)
        return Interval._raw(lo, hi)

    @staticmethod
    def concatenate(items: Sequence[Interval | ArrayLike], axis: int = 0) -> Interval:
        ivs = [as_interval(it) for it in items]
        return Interval._raw(
            np.concatenate([iv.lo for iv in ivs], axis=axis),
            np.concatenate([iv.hi for iv in ivs], axis=axis),
        )

    @staticmethod
    def where(mask: ArrayLike, a: Interval | ArrayLike, b: Interval | ArrayLike) -> Interval:
        a, b = as_interval(a), as_interval(b)
        return Interval._raw(np.where(mask, a.lo, b.lo), np.where(mask, a.hi, b.hi))

    # -- array protocol ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.lo.shape

    @property
    def ndim(self) -> int:
        return self.lo.ndim

    @property
    def size(self) -> int:
        return int(self.lo.size)

    @property
    def T(self) -> Interval:
        return Interval._raw(self.lo.T, self.hi.T)

    def __len__(self) -> int:
        return len(self.lo)

    def __iter__(self) -> Iterator[Interval]:
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, key: Any) -> Interval:
        return Interval._raw(self.lo[key], self.hi[key])

    def reshape(self, *shape: Any) -> Interval:
        return Interval._raw(self.lo.reshape(*shape), self.hi.reshape(*shape))

    def swapaxes(self, a: int, b: int) -> Interval:
        return Interval._raw(np.swapaxes(self.lo, a, b), np.swapaxes(self.hi, a, b))

    def broadcast_to(self, shape: tuple[int, ...]) -> Interval:
        return Interval._raw(np.broadcast_to(self.lo, shape), np.broadcast_to(self.hi, shape))

    def copy(self) -> Interval:
        return Interval._raw(self.lo.copy(), self.hi.copy())

    # -- arithmetic -------------------------------------------------------------------

    def __add__(self, other: Interval | ArrayLike) -> Interval:
        o = as_interval(other)
        return Interval._raw(*add_bounds(self.lo, self.hi, o.lo, o.hi))

    def __radd__(self, other: ArrayLike) -> Interval:
        return self.__add__(other)

    def __sub__(self, other: Interval | ArrayLike) -> Interval:
        o = as_interval(other)
        return Interval._raw(*sub_bounds(self.lo, self.hi, o.lo, o.hi))

    def __rsub__(self, other: ArrayLike) -> Interval:
        return as_interval(other).__sub__(self)

    def __mul__(self, other: Interval | ArrayLike) -> Interval:
        o = as_interval(other)
        return Interval._raw(*mul_bounds(self.lo, self.hi, o.lo, o.hi))

    def __rmul__(self, other: ArrayLike) -> Interval:
        return self.__mul__(other)

    def __truediv__(self, other: Interval | ArrayLike) -> Interval:
        o = as_interval(other)
        return Interval._raw(*div_bounds(self.lo, self.hi, o.lo, o.hi))

    def __rtruediv__(self, other: ArrayLike) -> Interval:
        return as_interval(other).__truediv__(self)

    def __neg__(self) -> Interval:
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self) -> Interval:
        return self

    def __abs__(self) -> Interval:
        lo = np.where(self.lo >= 0, self.lo, np.where(self.hi <= 0, -self.hi, 0.0))
        return Interval._raw(lo, self.mag())

    def sqr(self) -> Interval:
        """Tight square: the result never dips below zero."""
        l2 = self.lo * self.lo
        h2 = self.hi * self.hi
        lo = np.where(self.lo >= 0, l2, np.where(self.hi <= 0, h2, 0.0))
        hi = np.maximum(l2, h2)
        lo = np.where(lo > 0, down(lo), lo)
        return Interval._raw(*_clean(lo, up(hi)))

    def __pow__(self, n: int) -> Interval:
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise TypeError("only non-negative integer powers are supported")
        if n == 0:
            return Interval._raw(np.ones(self.shape), np.ones(self.shape))
        if n == 1:
            return self
        half = self ** (n // 2)
        sq = half.sqr()
        return sq * self if n % 2 else sq

    def sqrt(self) -> Interval:
        if np.any(self.lo < 0):
            raise ValueError("square root of an interval with negative part")
        lo = np.sqrt(self.lo)
        return Interval._raw(np.where(lo > 0, down(lo), lo), up(np.sqrt(self.hi)))

    def __matmul__(self, other: Interval | ArrayLike) -> Interval:
        return matmul(self, as_interval(other))

    def __rmatmul__(self, other: ArrayLike) -> Interval:
        return matmul(as_interval(other), self)

    def sum(self, axis: int = -1) -> Interval:
        return Interval._raw(*sum_bounds(self.lo, self.hi, axis))

    # -- measures ---------------------------------------------------------------------

    def mid(self) -> FloatArray:
        m = 0.5 * self.lo + 0.5 * self.hi
        return np.where(np.isfinite(m), m, np.where(np.isfinite(self.lo), self.lo, self.hi))

    def rad(self) -> FloatArray:
        m = self.mid()
        return np.maximum(up(self.hi - m), up(m - self.lo))

    def width(self) -> FloatArray:
        return up(self.hi - self.lo)

    def mag(self) -> FloatArray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self) -> FloatArray:
        inside = (self.lo <= 0) & (self.hi >= 0)
        return np.where(inside, 0.0, np.minimum(np.abs(self.lo), np.abs(self.hi)))

    def is_thin(self) -> bool:
        return bool(np.all(self.lo == self.hi))

    def max_width(self) -> float:
        return float(np.max(self.width())) if self.size else 0.0

    # -- set operations ---------------------------------------------------------------

    def hull(self, other: Interval | ArrayLike) -> Interval:
        o = as_interval(other)
        return Interval._raw(np.minimum(self.lo, o.lo), np.maximum(self.hi, o.hi))

    def overlaps(self, other: Interval | ArrayLike) -> NDArray[np.bool_]:
        o = as_interval(other)
        return np.maximum(self.lo, o.lo) <= np.minimum(self.hi, o.hi)

    def intersect(self, other: Interval | ArrayLike) -> Interval:
        """Intersection; raises ``ValueError`` if some entry is empty."""
        o = as_interval(other)
        lo = np.maximum(self.lo, o.lo)
        hi = np.minimum(self.hi, o.hi)
        if np.any(lo > hi):
            raise ValueError("empty interval intersection")
        return Interval._raw(lo, hi)

    def intersect_or_keep(self, other: Interval | ArrayLike) -> Interval:
        """Entrywise intersection, keeping ``self`` where the two do not overlap."""
        o = as_interval(other)
        lo = np.maximum(self.lo, o.lo)
        hi = np.minimum(self.hi, o.hi)
        empty = lo > hi
        return Interval._raw(np.where(empty, self.lo, lo), np.where(empty, self.hi, hi))

    def contains(self, x: Interval | ArrayLike) -> NDArray[np.bool_]:
        o = as_interval(x)
        return (self.lo <= o.lo) & (o.hi <= self.hi)

    def subset(self, other: Interval | ArrayLike) -> NDArray[np.bool_]:
        return as_interval(other).contains(self)

    def strictly_inside(self, other: Interval | ArrayLike) -> NDArray[np.bool_]:
        o = as_interval(other)
        return (o.lo < self.lo) & (self.hi < o.hi)

    def disjoint(self, other: Interval | ArrayLike) -> NDArray[np.bool_]:
        return ~self.overlaps(other)

    def inflate(self, factor: float = 1.0, pad: float = 0.0) -> Interval:
        m = self.mid()
        r = self.rad() * factor + pad
        return Interval._raw(*_clean(down(m - r), up(m + r)))

    # -- serialization ----------------------------------------------------------------

    def to_hex(self) -> tuple[str, str]:
        """Bit exact endpoints of a scalar interval."""
        return float(self.lo).hex(), float(self.hi).hex()

    def decimal(self, digits: int = 17) -> str:
        if self.ndim == 0:
            return f"[{float(self.lo):.{digits}g}, {float(self.hi):.{digits}g}]"
        return "[" + ", ".join(self[k].decimal(digits) for k in range(len(self))) + "]"

    def __repr__(self) -> str:
        if self.ndim == 0:
            return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"
        return f"Interval(shape={self.shape}, {self.decimal(8)})"


def as_interval(x: Interval | ArrayLike) -> Interval:
    """Wrap floats and float arrays as thin intervals."""
    if isinstance(x, Interval):
        return x
    arr = np.asarray(x, dtype=np.float64)
    return Interval._raw(arr, arr)


def matmul(a: Interval, b: Interval) -> Interval:
    """Interval matrix product with numpy ``@`` shape semantics."""
    vec_a = a.ndim == 1
    vec_b = b.ndim == 1
    if vec_a:
        a = a[None, :]
    if vec_b:
        b = b[:, None]
    plo, phi = mul_bounds(
        a.lo[..., :, :, None], a.hi[..., :, :, None], b.lo[..., None, :, :], b.hi[..., None, :, :]
    )
    out = Interval._raw(*sum_bounds(plo, phi, -2))
    if vec_a:
        out = out[..., 0, :]
    if vec_b:
        out = out[..., 0]
    return out


def matvec(a: Interval | ArrayLike, x: Interval | ArrayLike) -> Interval:
    """Batched product ``a[..., n, m] @ x[..., m]``."""
    a, x = as_interval(a), as_interval(x)
    plo, phi = mul_bounds(a.lo, a.hi, x.lo[..., None, :], x.hi[..., None, :])
    return Interval._raw(*sum_bounds(plo, phi, -1))


def batched_matmul(a: Interval | ArrayLike, b: Interval | ArrayLike) -> Interval:
    """Batched product ``a[..., n, m] @ b[..., m, k]``."""
    a, b = as_interval(a), as_interval(b)
    plo, phi = mul_bounds(
        a.lo[..., :, :, None], a.hi[..., :, :, None], b.lo[..., None, :, :], b.hi[..., None, :, :]
    )
    return Interval._raw(*sum_bounds(plo, phi, -2))


def dot(x: Interval | ArrayLike, y: Interval | ArrayLike) -> Interval:
    """Batched inner product over the last axis."""
    x, y = as_interval(x), as_interval(y)
    return (x * y).sum(axis=-1)


def cross(x: Interval | ArrayLike, y: Interval | ArrayLike) -> Interval:
    """Batched cross product of 3-vectors."""
    x, y = as_interval(x), as_interval(y)
    return Interval.stack(
        [
            x[..., 1] * y[..., 2] - x[..., 2] * y[..., 1],
            x[..., 2] * y[..., 0] - x[..., 0] * y[..., 2],
            x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0],
        ],
        axis=-1,
    )


def iv_arith(op: str, a: Interval | ArrayLike, b: Interval | ArrayLike) -> Interval:
    """Apply one of ``add``, ``sub``, ``mul``, ``div`` with outward rounding."""
    a, b = as_interval(a), as_interval(b)
    match op:
        case "add":
            return a + b
        case "sub":
            return a - b
        case "mul":
            return a * b
        case "div":
            return a / b
        case _:
            raise ValueError(f"unknown interval operation {op!r}")


__all__ = [
    "Interval",
    "as_interval",
    "batched_matmul",
    "cross",
    "dot",
    "down",
    "iv_arith",
    "matmul",
    "matvec",
    "up",
]
