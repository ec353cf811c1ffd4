"""Mid sets between a forward and a backward covering chain."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.covering.hset import HSet
from fhnwave.interval import Interval, matvec

if TYPE_CHECKING:
    from fhnwave.covering.check import CoverImages
    from fhnwave.poincare import AffineSection
    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)


def _axis(images: CoverImages) -> tuple[FloatArray, FloatArray]:
    start = images.left.mid().mean(axis=0)
    end = images.right.mid().mean(axis=0)
    d = end - start
    return start, d / np.linalg.norm(d)


def build_mid_set(
    forward: CoverImages,
    backward: CoverImages,
    section: AffineSection,
    *,
    balance: float = 0.5,
    margin: float = 0.1,
    name: str = "mid",
) -> HSet:
    """An h-set M with ``forward.source => M`` and ``backward.source`` backcovering ``M^T``.

    ``forward`` holds images under the forward map and ``backward`` images of a
    transposed h-set under the inverse map, both in ``section`` coordinates. The
    exit direction of M follows the forward image strip and its entry direction
    the backward one; M is centred where the two strips cross. Each half width
    is placed at ``balance`` between the bound forced by one covering and the
    bound allowed by the other.

    The construction is not rigorous; verify the result with
    :func:`~fhnwave.covering.verify_cover` on the same images.

    Raises:
        ValueError: The strips leave no room for such an h-set.
    """
    if not 0.0 < balance < 1.0:
        raise ValueError("balance must lie in (0, 1)")
    f0, df = _axis(forward)
    b0, db = _axis(backward)
    dirs = np.stack([df, db], axis=-1)
    if abs(np.linalg.det(dirs)) < 1e-8:
        raise ValueError("forward and backward image strips are parallel")
    s, t = np.linalg.solve(np.stack([df, -db], axis=-1), b0 - f0)
    center = 0.5 * (f0 + s * df) + 0.5 * (b0 + t * db)
    chart = np.linalg.inv(dirs)

    def coords(images: Interval) -> Interval:
        return matvec(chart, images - center)

    f_left = coords(forward.left)[..., 0]
    f_right = coords(forward.right)[..., 0]
    b_left = coords(backward.left)[..., 1]
    b_right = coords(backward.right)[..., 1]
    # exit widths must stay inside the forward edges, entry widths inside the backward edges
    exit_room = float(min((-f_left.hi).min(), f_right.lo.min()))
    entry_room = float(min((-b_left.hi).min(), b_right.lo.min()))
    exit_need = float(abs(coords(backward.interior)[..., 0]).hi.max())
    entry_need = float(abs(coords(forward.interior)[..., 1]).hi.max())
    if not (exit_need < exit_room and entry_need < entry_room):
        raise ValueError(
            f"no mid set: exit needs {exit_need:.3e} of {exit_room:.3e}, "
            f"entry needs {entry_need:.3e} of {entry_room:.3e}"
        )
    widths = np.array(
        [
            exit_need + balance * (exit_room - exit_need),
            entry_need + balance * (entry_room - entry_need),
        ]
    )
    slack = min(exit_room / widths[0] - 1.0, entry_room / widths[1] - 1.0)
    if slack < margin:
        logger.warning("mid set %s keeps only %.1f%% slack", name, 100.0 * slack)
    return HSet.create(section, center, dirs, widths, name=name)


__all__ = ["build_mid_set"]
