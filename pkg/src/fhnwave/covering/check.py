"""Covering relations between h-sets.

``X => Y`` under ``g`` holds when, in Y's coordinates ``(y1, y2)``,

* C1: every image point of X has ``|y2| < 1`` or lies beyond ``|y1| > 1``;
* C2: the two exit edges ``x_u = -1`` and ``x_u = +1`` of X are mapped to
  opposite sides ``y1 < -1`` and ``y1 > 1``, in either orientation.

Both conditions are checked on cell images, and every slack is reported as an
interval so that a check passes exactly when the lower end of its margin is
positive.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.covering.hset import HSet, parameter_cells
from fhnwave.errors import MapFailure, ProofError, TwistedTargetWarning
from fhnwave.interval import Interval, as_interval

if TYPE_CHECKING:
    from fhnwave.covering.maps import ParameterMap, SectionMap
    from fhnwave.typing import CoverKind

logger = logging.getLogger(__name__)

DEFAULT_IDENTITY_DIV = 16


@dataclass(frozen=True)
class CoverCheck:
    """Outcome of a covering check.

    ``margin`` is the worst slack over all verified inequalities; ``condition``
    names the condition achieving it and ``worst_cell`` the offending cell of
    the C1 grid when that condition is C1.
    """

    kind: CoverKind
    margin: Interval
    cells: tuple[int, ...]
    condition: str
    worst_cell: int | None = None
    source: str = ""
    target: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.margin.lo > 0)

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else f"FAIL ({self.condition})"
        margin = float(self.margin.lo)
        return f"{self.source} {self.kind} {self.target}: {verdict} margin={margin:.3e}"


@dataclass(frozen=True)
class CoverImages:
    """Cached images of an h-set grid, in destination section coordinates.

    ``source`` is ``None`` for a one-dimensional parameter h-set, whose grid has
    ``div`` cells and whose exit edges are its two end points.
    """

    source: HSet | None
    div: int
    interior: Interval
    left: Interval
    right: Interval
    name: str = ""

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.div,) if self.source is None else (self.div, self.div)


def _imax(a: Interval, b: Interval) -> Interval:
    return Interval._raw(np.maximum(a.lo, b.lo), np.maximum(a.hi, b.hi))


def _imin(a: Interval, b: Interval) -> Interval:
    return Interval._raw(np.minimum(a.lo, b.lo), np.minimum(a.hi, b.hi))


def _worst(slack: Interval) -> Interval:
    return Interval._raw(slack.lo.min(axis=-1), slack.hi.min(axis=-1))


def c1_slack(y: Interval) -> Interval:
    """Per-cell C1 slack of images ``y`` given in target coordinates."""
    y1, y2 = y[..., 0], y[..., 1]
    return _imax(_imax(1.0 - abs(y2), -1.0 - y1), y1 - 1.0)


def c2_slack(left: Interval, right: Interval) -> Interval:
    """C2 slack of the first coordinates of the two exit edge images."""
    plus = _imin(_worst(-1.0 - left), _worst(right - 1.0))
    minus = _imin(_worst(left - 1.0), _worst(-1.0 - right))
    return _imax(plus, minus)


def _summarize(
    kind: CoverKind, c1: Interval, c2: Interval, cells: tuple[int, ...], source: str, target: str
) -> CoverCheck:
    c1_worst = _worst(c1)
    if c1_worst.lo <= c2.lo:
        margin, condition, cell = c1_worst, "C1", int(np.argmin(c1.lo))
    else:
        margin, condition, cell = c2, "C2", None
    check = CoverCheck(kind, margin, cells, condition, cell, source, target)
    logger.info("%s", check)
    return check


def compute_cover_images(source: HSet, g: SectionMap, div: int, *, jobs: int = 1) -> CoverImages:
    """Enclose the images of a ``div x div`` grid of ``source`` and of its exit edges."""
    if div < 1:
        raise ValueError("div must be positive")
    interior = source.cells(div)
    left = source.edge_cells(div, -1)
    right = source.edge_cells(div, 1)
    try:
        images = g.images(source, Interval.concatenate([interior, left, right]), jobs=jobs)
    except ProofError as exc:
        raise MapFailure(f"image of {source.name or 'h-set'} failed: {exc}", cell=exc.cell) from exc
    n = div * div
    return CoverImages(
        source, div, images[:n], images[n : n + div], images[n + div :], source.name
    )


def verify_cover(images: CoverImages, target: HSet, kind: CoverKind = "cover") -> CoverCheck:
    """Check C1 and C2 for cached images against ``target``."""
    if target.is_twisted:
        warnings.warn(
            f"{target.name!r} is twisted and cannot be covered; the check fails",
            TwistedTargetWarning,
            stacklevel=2,
        )
        return CoverCheck(
            kind,
            Interval(-np.inf),
            images.cells,
            "twisted target",
            source=images.name,
            target=target.name,
        )
    y = target.to_coords(images.interior)
    left = target.to_coords(images.left)[..., 0]
    right = target.to_coords(images.right)[..., 0]
    return _summarize(
        kind,
        c1_slack(y),
        c2_slack(left, right),
        images.cells,
        images.name,
        target.name,
    )


def identity_covering(x: HSet, y: HSet, *, div: int = DEFAULT_IDENTITY_DIV) -> CoverCheck:
    """``X => Y`` under the identity, for two h-sets on the same plane."""
    same = (
        np.array_equal(x.section.origin, y.section.origin)
        and np.array_equal(x.section.frame, y.section.frame)
    )
    if not same:
        raise ValueError(f"{x.name!r} and {y.name!r} do not share a section chart")
    images = CoverImages(
        x,
        div,
        x.from_coords(x.cells(div)),
        x.from_coords(x.edge_cells(div, -1)),
        x.from_coords(x.edge_cells(div, 1)),
        x.name,
    )
    return verify_cover(images, y, "identity")


def check_covering(
    x: HSet,
    y: HSet,
    g: SectionMap | None,
    div: int,
    kind: CoverKind = "cover",
    *,
    jobs: int = 1,
) -> CoverCheck:
    """Verify ``X => Y`` (``cover``), ``Y^T g^-1-covers X^T`` (``backcover``) or the identity.

    For ``backcover`` the evaluator ``g`` must be the inverse map, taking Y's
    section to X's section.

    Raises:
        MapFailure: Some cell image could not be enclosed.
    """
    if kind == "identity":
        return identity_covering(x, y, div=div)
    if g is None:
        raise ValueError(f"a {kind} check needs a section map")
    source, target = (x, y) if kind == "cover" else (y.transposed(), x.transposed())
    images = compute_cover_images(source, g, div, jobs=jobs)
    return verify_cover(images, target, kind)


def compute_parametric_images(
    lo: float, hi: float, g: ParameterMap, div: int, *, name: str = "theta", jobs: int = 1
) -> CoverImages:
    """Images of ``div`` cells of ``[lo, hi]`` and of the two thin end points."""
    if div < 1:
        raise ValueError("div must be positive")
    cells = parameter_cells(lo, hi, div)
    ends = as_interval(np.array([lo, hi]))
    try:
        images = g.images(Interval.concatenate([cells, ends]), jobs=jobs)
    except ProofError as exc:
        raise MapFailure(f"image of {name} failed: {exc}", cell=exc.cell) from exc
    return CoverImages(None, div, images[:div], images[div : div + 1], images[div + 1 :], name)


def check_parametric_covering(
    lo: float,
    hi: float,
    y: HSet,
    g: ParameterMap,
    div: int,
    *,
    name: str = "theta",
    jobs: int = 1,
) -> CoverCheck:
    """Covering by the one-dimensional h-set ``[lo, hi]`` whose exit direction is the parameter.

    C1 is checked on ``div`` parameter cells and C2 on the thin end points.
    """
    return verify_cover(compute_parametric_images(lo, hi, g, div, name=name, jobs=jobs), y)


__all__ = [
    "CoverCheck",
    "CoverImages",
    "c1_slack",
    "c2_slack",
    "check_covering",
    "check_parametric_covering",
    "compute_cover_images",
    "compute_parametric_images",
    "identity_covering",
    "verify_cover",
]
