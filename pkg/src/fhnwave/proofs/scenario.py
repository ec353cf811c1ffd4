"""Proof scenarios.

A scenario holds every number a proof pipeline consumes. Decimal constants stay
decimal text so their enclosures are taken from the literal; the defaults
are the proof data of the periodic and the homoclinic loops.
"""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Literal, TypeAlias

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, TypeAdapter, model_validator

from fhnwave.blocks import Block
from fhnwave.config import SettingsError, read_structured_file
from fhnwave.interval import Interval
from fhnwave.poincare import AffineSection
from fhnwave.segments import Segment
from fhnwave.typing import FloatArray
from fhnwave.utils import deep_update

if TYPE_CHECKING:
    from fhnwave.oracle.skeleton import SingularSkeleton


def _decimal_text(value: Any) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not decimals")
    if isinstance(value, int | float):
        value = repr(value)
    if not isinstance(value, str):
        raise TypeError(f"expected a decimal literal, got {type(value).__name__}")
    text = value.strip()
    try:
        Decimal(text)
    except InvalidOperation as e:
        raise ValueError(f"{value!r} is not a decimal literal") from e
    return text


DecimalText: TypeAlias = Annotated[str, BeforeValidator(_decimal_text)]
Vector3: TypeAlias = Annotated[list[DecimalText], Field(min_length=3, max_length=3)]
Row2: TypeAlias = Annotated[list[DecimalText], Field(min_length=2, max_length=2)]
Row3: TypeAlias = Annotated[list[DecimalText], Field(min_length=3, max_length=3)]
Matrix2: TypeAlias = Annotated[list[Row2], Field(min_length=2, max_length=2)]
Matrix3: TypeAlias = Annotated[list[Row3], Field(min_length=3, max_length=3)]
Frame3x2: TypeAlias = Annotated[list[Row2], Field(min_length=3, max_length=3)]

CornerName: TypeAlias = Literal["DL", "UL", "UR", "DR"]
ScenarioKind: TypeAlias = Literal[
    "periodic_small_eps", "continuation", "newton_unique", "homoclinic"
]


def decimal(text: str) -> Interval:
    return Interval.from_decimal(text)


def floats(values: Any) -> FloatArray:
    """Nearest doubles of nested decimal text, for geometry that is data, not enclosure."""
    return np.vectorize(float, otypes=[np.float64])(np.asarray(values, dtype=object))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CornerSpec(_Model):
    """A corner of the singular loop and the fast eigenframe there."""

    point: Vector3
    frame: Matrix2


class SegmentSpec(_Model):
    """A corner segment: front and rear shifted along ``w`` from the corner point."""

    corner: CornerName
    front_dw: DecimalText
    rear_dw: DecimalText
    a: DecimalText
    b: DecimalText
    c: DecimalText | None = None
    d: DecimalText | None = None

    def build(self, corner: CornerSpec, name: str | None = None) -> Segment:
        point = floats(corner.point)
        front = point + np.array([0.0, 0.0, float(self.front_dw)])
        rear = point + np.array([0.0, 0.0, float(self.rear_dw)])
        c = self.a if self.c is None else self.c
        d = self.b if self.d is None else self.d
        return Segment.create(
            front,
            rear,
            floats(corner.frame),
            float(self.a),
            float(self.b),
            float(c),
            float(d),
            name=name or self.corner,
        )


class SectionSpec(_Model):
    origin: Vector3
    normal: Vector3
    frame: Frame3x2 | None = None
    crossing_sign: Literal[-1, 1] = 1

    def build(self) -> AffineSection:
        frame = None if self.frame is None else floats(self.frame)
        return AffineSection.create(
            floats(self.origin), floats(self.normal), frame, float(self.crossing_sign)
        )


_UV_FRAME = [["0", "0"], ["1", "0"], ["0", "1"]]


def _u_section(u: str, w: str, sign: Literal[-1, 1]) -> SectionSpec:
    return SectionSpec(
        origin=[u, "0", w], normal=["1", "0", "0"], frame=_UV_FRAME, crossing_sign=sign
    )


class GridSpec(_Model):
    """Subdivisions of the rigorous checks, per face axis unless stated otherwise."""

    segment: int = Field(default=150, ge=1)
    chain: int = Field(default=110, ge=1)
    central: int = Field(default=8, ge=1)
    block: int = Field(default=50, ge=1)
    sweep: int = Field(default=20, ge=1)
    cone: int = Field(default=1, ge=1)


class ChainSpec(_Model):
    n_up: int = Field(default=80, ge=1)
    n_down: int = Field(default=80, ge=1)
    factor: float = Field(default=1.05, gt=1.0)


class MidSetSpec(_Model):
    balance: float = Field(default=0.5, gt=0.0, lt=1.0)
    margin: float = Field(default=0.1, ge=0.0)


class _ProofBase(_Model):
    eps_max: DecimalText = "1e-5"
    eps_splits: list[DecimalText] = Field(default_factory=list)
    div: int = Field(default=20, ge=1)
    grids: GridSpec = GridSpec()
    chains: ChainSpec = ChainSpec()
    mid_set: MidSetSpec = MidSetSpec()


def _periodic_corners() -> dict[str, CornerSpec]:
    return {
        "DL": CornerSpec(
            point=["-0.10841296", "0", "0.025044220"],
            frame=[["1", "1"], ["0.34113340", "-0.21913340"]],
        ),
        "UL": CornerSpec(
            point=["0.97034558", "0", "0.025044220"],
            frame=[["1", "1"], ["0.46313340", "-0.34113340"]],
        ),
        "UR": CornerSpec(
            point=["0.84174629", "0", "0.098807631"],
            frame=[["1", "1"], ["0.34113340", "-0.21913340"]],
        ),
        "DR": CornerSpec(
            point=["-0.23701225", "0", "0.098807631"],
            frame=[["1", "1"], ["0.46313340", "-0.34113340"]],
        ),
    }


def _periodic_segments() -> list[SegmentSpec]:
    return [
        SegmentSpec(corner="DL", front_dw="0.005", rear_dw="-0.005", a="0.015", b="0.012"),
        SegmentSpec(corner="UL", front_dw="-0.005", rear_dw="0.005", a="0.01", b="0.015"),
        SegmentSpec(corner="UR", front_dw="-0.005", rear_dw="0.005", a="0.029", b="0.019"),
        SegmentSpec(corner="DR", front_dw="0.005", rear_dw="-0.005", a="0.007", b="0.03"),
    ]


class PeriodicScenario(_ProofBase):
    """Periodic orbits for every ``eps`` in ``(0, eps_max]`` at fixed ``theta``."""

    kind: Literal["periodic_small_eps"] = "periodic_small_eps"
    theta: DecimalText = "0.61"
    corners: dict[CornerName, CornerSpec] = Field(default_factory=_periodic_corners)
    segments: list[SegmentSpec] = Field(default_factory=_periodic_segments)
    left_section: SectionSpec = _u_section("0.43096631", "0.025044220", 1)
    right_section: SectionSpec = _u_section("0.30236702", "0.098807631", -1)

    @model_validator(mode="after")
    def _check_corners(self) -> PeriodicScenario:
        missing = {"DL", "UL", "UR", "DR"} - {s.corner for s in self.segments}
        if missing:
            raise ValueError(f"no segment for corners {sorted(missing)}")
        return self


def _homoclinic_corners() -> dict[str, CornerSpec]:
    return {
        "DL": CornerSpec(
            point=["0", "0", "0"], frame=[["1", "1"], ["0.31622777", "-0.063245553"]]
        ),
        "UL": CornerSpec(
            point=["1", "0", "0"], frame=[["1", "1"], ["0.56920998", "-0.31622777"]]
        ),
        "UR": CornerSpec(
            point=["0.73333334", "0", "0.12385185"],
            frame=[["1", "1"], ["0.31622777", "-0.063245553"]],
        ),
        "DR": CornerSpec(
            point=["-0.26666667", "0", "0.12385185"],
            frame=[["1", "1"], ["0.56920998", "-0.31622777"]],
        ),
    }


def _homoclinic_segments() -> list[SegmentSpec]:
    return [
        SegmentSpec(corner="UL", front_dw="-0.001", rear_dw="0.001", a="1.8e-4", b="0.0021"),
        SegmentSpec(corner="UR", front_dw="-7e-4", rear_dw="7e-4", a="0.003", b="0.005"),
        SegmentSpec(corner="DR", front_dw="0.002", rear_dw="-0.002", a="8e-4", b="0.013"),
    ]


class BlockSpec(_Model):
    center: Vector3 = ["0", "0", "0"]
    cinv: Matrix3

    def build(self, name: str) -> Block:
        return Block.create(floats(self.center), [list(row) for row in self.cinv], name)


def _bu() -> BlockSpec:
    return BlockSpec(
        cinv=[
            ["2.4e-5", "8e-6", "-1e-4"],
            ["7.5794685e-6", "-5.0663182e-7", "0"],
            ["0", "0", "1e-5"],
        ]
    )


def _bs() -> BlockSpec:
    return BlockSpec(
        cinv=[
            ["2e-4", "2e-4", "-0.0013"],
            ["6.3162238e-5", "-1.2665795e-5", "0"],
            ["0", "0", "1.3e-4"],
        ]
    )


class HomoclinicScenario(_ProofBase):
    """A homoclinic orbit for every ``eps`` in ``(0, eps_max]`` at some ``theta`` in range."""

    kind: Literal["homoclinic"] = "homoclinic"
    div: int = Field(default=25, ge=1)
    theta: DecimalText = "1.26491106"
    theta_radius: DecimalText = "0.0025"
    chains: ChainSpec = ChainSpec(n_up=200, n_down=400)
    corners: dict[CornerName, CornerSpec] = Field(default_factory=_homoclinic_corners)
    segments: list[SegmentSpec] = Field(default_factory=_homoclinic_segments)
    bu: BlockSpec = Field(default_factory=_bu)
    bs: BlockSpec = Field(default_factory=_bs)
    bu_ext_factor: DecimalText = "0.3"
    left_section: SectionSpec = _u_section("0.5", "0", 1)
    right_section: SectionSpec = _u_section("0.233333335", "0.12385185", -1)

    @model_validator(mode="after")
    def _check_segments(self) -> HomoclinicScenario:
        missing = {"UL", "UR", "DR"} - {s.corner for s in self.segments}
        if missing:
            raise ValueError(f"no segment for corners {sorted(missing)}")
        return self

    @property
    def theta_range(self) -> Interval:
        center, radius = decimal(self.theta), decimal(self.theta_radius)
        return Interval((center - radius).lo, (center + radius).hi)


class ContinuationScenario(_Model):
    """Validated continuation of the periodic orbit in ``eps``."""

    kind: Literal["continuation"] = "continuation"
    theta: DecimalText = "0.61"
    eps_start: DecimalText = "0.001"
    eps_stop: DecimalText = "0.000997"
    increment: float = Field(default=1e-6, gt=0)
    min_increment: float = Field(default=1e-9, gt=0)
    max_increment: float = Field(default=1e-5, gt=0)
    growth: float = Field(default=1.5, gt=1.0)
    x0_size: float = Field(default=1e-6, gt=0)
    exit_cap: float = Field(default=1e-3, gt=0)
    margin: float = Field(default=0.1, ge=0)
    div: int = Field(default=5, ge=1)
    anchors: int = Field(default=212, ge=3)
    max_steps: int = Field(default=3, ge=1)
    t_min: float = Field(default=0.05, gt=0)
    t_max: float = Field(default=3.0, gt=0)
    seed_file: str | None = None


class NewtonScenario(_Model):
    """Local uniqueness of the periodic orbit at one ``eps``."""

    kind: Literal["newton_unique"] = "newton_unique"
    theta: DecimalText = "0.61"
    eps: DecimalText = "0.0015"
    radius: float = Field(default=1e-6, gt=0)
    anchors: int = Field(default=179, ge=3)
    seed_file: str | None = None


ProofScenario: TypeAlias = Annotated[
    PeriodicScenario | HomoclinicScenario | ContinuationScenario | NewtonScenario,
    Field(discriminator="kind"),
]

_ADAPTER: TypeAdapter[ProofScenario] = TypeAdapter(ProofScenario)


def load_scenario(
    source: str | Path | dict[str, Any] | None,
    kind: ScenarioKind,
    overrides: dict[str, Any] | None = None,
) -> ProofScenario:
    """Validate a scenario from a config file or a dict, with command-line overrides on top.

    Raises:
        SettingsError: The file cannot be read or the scenario is invalid.
    """
    if source is None:
        data: dict[str, Any] = {}
    elif isinstance(source, dict):
        data = dict(source)
    else:
        data = read_structured_file(source)
    if data.get("kind", kind) != kind:
        raise SettingsError(f"scenario is of kind {data['kind']!r}, expected {kind!r}")
    data = deep_update(data, {"kind": kind}, overrides or {})
    try:
        return _ADAPTER.validate_python(data)
    except ValueError as e:
        raise SettingsError(f"invalid {kind} scenario: {e}") from e


def scenario_hash(scenario: BaseModel) -> str:
    """SHA-256 of the canonical JSON form of a scenario."""
    text = json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _text(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def skeleton_fragment(skeleton: SingularSkeleton, *, digits: int = 9) -> dict[str, Any]:
    """Scenario fields for the corners, frames and jump sections of a singular loop.

    The values are decimal text rounded to ``digits`` significant digits, so
    the fragment can be edited and fed back through ``--config``.
    """
    corners = {
        name: {
            "point": [_text(float(x), digits) for x in skeleton.corner(name)],
            "frame": [[_text(float(x), digits) for x in row] for row in skeleton.frame(name)],
        }
        for name in skeleton.corners
    }
    left = _u_section(
        _text(float(skeleton.left_crossing[0]), digits), _text(skeleton.w_lower, digits), 1
    )
    right = _u_section(
        _text(float(skeleton.right_crossing[0]), digits), _text(skeleton.w_upper, digits), -1
    )
    return {
        "theta": _text(skeleton.theta, digits),
        "corners": corners,
        "left_section": left.model_dump(),
        "right_section": right.model_dump(),
    }


__all__ = [
    "BlockSpec",
    "ChainSpec",
    "ContinuationScenario",
    "CornerSpec",
    "DecimalText",
    "GridSpec",
    "HomoclinicScenario",
    "MidSetSpec",
    "NewtonScenario",
    "PeriodicScenario",
    "ProofScenario",
    "ScenarioKind",
    "SectionSpec",
    "SegmentSpec",
    "decimal",
    "floats",
    "load_scenario",
    "scenario_hash",
    "skeleton_fragment",
]
