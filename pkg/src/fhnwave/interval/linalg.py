"""Interval linear algebra: Gaussian elimination enclosures and inverses."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from fhnwave.errors import SingularEnclosure
from fhnwave.interval.core import Interval, as_interval, div_bounds, mul_bounds, sub_bounds

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray


def _mig(lo: NDArray[np.float64], hi: NDArray[np.float64]) -> NDArray[np.float64]:
    inside = (lo <= 0) & (hi >= 0)
    return np.where(inside, 0.0, np.minimum(np.abs(lo), np.abs(hi)))


def gauss_solve_enclose(a: Interval | ArrayLike, b: Interval | ArrayLike) -> Interval:
    """Enclose the solution set of ``A x = b`` by interval Gaussian elimination.

    Pivots are chosen by largest mignitude. ``a`` has shape ``(..., n, n)`` and
    ``b`` either ``(..., n)`` or ``(..., n, k)``; leading axes are independent
    systems eliminated side by side.

    Raises:
        SingularEnclosure: Every pivot candidate of some column contains zero.
    """
    a = as_interval(a)
    b = as_interval(b)
    n = a.shape[-1]
    if a.shape[-2] != n:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    vector_rhs = b.ndim == a.ndim - 1
    if vector_rhs:
        b = b[..., None]
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    k = b.shape[-1]
    lo = np.concatenate(
        [np.broadcast_to(a.lo, (*batch, n, n)), np.broadcast_to(b.lo, (*batch, n, k))], axis=-1
    ).copy()
    hi = np.concatenate(
        [np.broadcast_to(a.hi, (*batch, n, n)), np.broadcast_to(b.hi, (*batch, n, k))], axis=-1
    ).copy()

    rows = np.arange(n)
    for col in range(n):
        mig = _mig(lo[..., col:, col], hi[..., col:, col])
        best = np.max(mig, axis=-1)
        if np.any(best <= 0):
            cell = int(np.flatnonzero(best <= 0)[0])
            raise SingularEnclosure(f"no pivot without zero in column {col}", cell=cell)
        piv = np.argmax(mig, axis=-1) + col
        if np.any(piv != col):
            perm = np.broadcast_to(rows, (*batch, n)).copy()
            perm[..., col] = piv
            np.put_along_axis(perm, piv[..., None], col, axis=-1)
            lo = np.take_along_axis(lo, perm[..., None], axis=-2)
            hi = np.take_along_axis(hi, perm[..., None], axis=-2)
        if col == n - 1:
            break
        plo, phi = lo[..., col, col], hi[..., col, col]
        flo, fhi = div_bounds(
            lo[..., col + 1 :, col], hi[..., col + 1 :, col], plo[..., None], phi[..., None]
        )
        tlo, thi = mul_bounds(
            flo[..., None],
            fhi[..., None],
            lo[..., col : col + 1, col + 1 :],
            hi[..., col : col + 1, col + 1 :],
        )
        ulo, uhi = sub_bounds(
            lo[..., col + 1 :, col + 1 :], hi[..., col + 1 :, col + 1 :], tlo, thi
        )
        lo[..., col + 1 :, col + 1 :] = ulo
        hi[..., col + 1 :, col + 1 :] = uhi
        lo[..., col + 1 :, col] = 0.0
        hi[..., col + 1 :, col] = 0.0

    xlo = np.empty((*batch, n, k))
    xhi = np.empty((*batch, n, k))
    for i in range(n - 1, -1, -1):
        rlo, rhi = lo[..., i, n:], hi[..., i, n:]
        for j in range(i + 1, n):
            tlo, thi = mul_bounds(
                lo[..., i, j, None], hi[..., i, j, None], xlo[..., j, :], xhi[..., j, :]
            )
            rlo, rhi = sub_bounds(rlo, rhi, tlo, thi)
        xlo[..., i, :], xhi[..., i, :] = div_bounds(
            rlo, rhi, lo[..., i, i, None], hi[..., i, i, None]
        )
    out = Interval._raw(xlo, xhi)
    return out[..., 0] if vector_rhs else out


def inverse(a: Interval | ArrayLike) -> Interval:
    """Enclose the inverses of all members of a square interval matrix."""
    a = as_interval(a)
    n = a.shape[-1]
    return gauss_solve_enclose(a, Interval.eye(n))


def solve_preconditioned(a: Interval | ArrayLike, b: Interval | ArrayLike) -> Interval:
    """Solve after multiplying both sides by the float inverse of ``mid(a)``.

    For an interval matrix close to a regular point matrix the preconditioned
    system is nearly the identity and elimination adds little overestimation.
    """
    a = as_interval(a)
    b = as_interval(b)
    try:
        c = np.linalg.inv(a.mid())
    except np.linalg.LinAlgError as e:
        raise SingularEnclosure("midpoint matrix is singular") from e
    return gauss_solve_enclose(c @ a, c @ b)


def det3(m: Interval) -> Interval:
    """Determinant of ``(..., 3, 3)`` interval matrices by cofactor expansion."""
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def leading_minors3(m: Interval) -> tuple[Interval, Interval, Interval]:
    """The three leading principal minors of ``(..., 3, 3)`` interval matrices."""
    m1 = m[..., 0, 0]
    m2 = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return m1, m2, det3(m)


def orthonormalize(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """Float QR of a batch of square matrices with a sign convention.

    Columns of the returned factor keep the orientation of the input columns,
    so consecutive frames of a trajectory stay close to each other.
    """
    q, r = np.linalg.qr(frames)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    return q * signs[..., None, :]


__all__ = [
    "det3",
    "gauss_solve_enclose",
    "inverse",
    "leading_minors3",
    "orthonormalize",
    "solve_preconditioned",
]
