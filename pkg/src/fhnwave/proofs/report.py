"""Proof reports.

A report is an ordered list of entries, one per verified hypothesis, written as
line records::

    id|tag|verdict|margin_lo_hex|margin_hi_hex|secs

followed by ``VERDICT|scenario_hash``. Margins are written with ``float.hex`` so
two runs of the same scenario give byte-identical files.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np

from fhnwave.errors import ProofError
from fhnwave.interval import Interval, as_interval

if TYPE_CHECKING:
    from fhnwave.covering import CoverCheck

logger = logging.getLogger(__name__)

CLOSED_OK = "CLOSED-OK"
FACTORED = "FACTORED"
LINK = "LINK"


class Verdict(StrEnum):
    PROVED = "PROVED"
    NOT_PROVED = "NOT_PROVED"


class Check(Protocol):
    @property
    def passed(self) -> bool: ...

    @property
    def margin(self) -> Interval: ...


@dataclass(frozen=True)
class ReportEntry:
    """One verified (or failed) hypothesis.

    ``tag`` names the condition and how ``eps`` entered it, e.g. ``S2b:CLOSED-OK``
    for an inequality evaluated on the closed range ``[0, eps0]`` or
    ``S1a:FACTORED`` for one with ``eps`` divided out.
    """

    id: str
    tag: str
    passed: bool
    margin: Interval
    seconds: float | None = None
    detail: str = ""

    def __post_init__(self) -> None:
        if "|" in self.id or "|" in self.tag:
            raise ValueError("report ids and tags cannot contain '|'")

    @classmethod
    def from_check(
        cls, id: str, tag: str, check: Check, *, seconds: float | None = None, detail: str = ""
    ) -> ReportEntry:
        return cls(id, tag, bool(check.passed), check.margin, seconds, detail or str(check))

    @classmethod
    def from_cover(cls, id: str, check: CoverCheck, *, seconds: float | None = None) -> ReportEntry:
        tag = LINK if check.kind == "identity" else f"{check.condition}:{CLOSED_OK}"
        return cls.from_check(id, tag, check, seconds=seconds)

    @classmethod
    def link(cls, id: str, linked: bool, detail: str = "") -> ReportEntry:
        """A structural relation between consecutive sets, e.g. a shared face."""
        margin = Interval(0.0) if linked else Interval(-np.inf)
        return cls(id, LINK, linked, margin, detail=detail)

    @classmethod
    def error(cls, id: str, exc: BaseException, *, seconds: float | None = None) -> ReportEntry:
        return cls(
            id,
            f"ERROR:{type(exc).__name__}",
            False,
            Interval(-np.inf),
            seconds,
            str(exc),
        )

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self, *, timings: bool = False) -> str:
        margin = as_interval(self.margin)
        lo, hi = float(np.min(margin.lo)).hex(), float(np.min(margin.hi)).hex()
        secs = f"{self.seconds:.3f}" if timings and self.seconds is not None else "-"
        return f"{self.id}|{self.tag}|{self.verdict}|{lo}|{hi}|{secs}"


@dataclass
class ProofReport:
    """Entries of one proof run in the order of its hypothesis list.

    ``required`` lists the entry ids the proof needs; the verdict is
    ``PROVED`` only when each of them is present and every entry passes.
    """

    kind: str
    scenario_hash: str
    required: list[str] = field(default_factory=list)
    entries: list[ReportEntry] = field(default_factory=list)
    extras: dict[str, str] = field(default_factory=dict)

    def add(self, entry: ReportEntry) -> ReportEntry:
        if any(e.id == entry.id for e in self.entries):
            raise ValueError(f"duplicate report entry {entry.id!r}")
        self.entries.append(entry)
        level = logging.INFO if entry.passed else logging.WARNING
        logger.log(level, "%s %s %s", entry.id, entry.tag, entry.verdict)
        return entry

    def require(self, *ids: str) -> None:
        self.required.extend(ids)

    def extend(self, other: ProofReport, prefix: str = "") -> None:
        """Append the entries and requirements of ``other`` under ``prefix``."""
        for entry in other.entries:
            self.add(
                ReportEntry(
                    prefix + entry.id,
                    entry.tag,
                    entry.passed,
                    entry.margin,
                    entry.seconds,
                    entry.detail,
                )
            )
        self.require(*(prefix + r for r in other.required))
        self.extras.update({prefix + k: v for k, v in other.extras.items()})

    @property
    def missing(self) -> list[str]:
        present = {e.id for e in self.entries}
        return [r for r in self.required if r not in present]

    @property
    def failures(self) -> list[ReportEntry]:
        return [e for e in self.entries if not e.passed]

    @property
    def verdict(self) -> Verdict:
        if self.entries and not self.failures and not self.missing:
            return Verdict.PROVED
        return Verdict.NOT_PROVED

    @property
    def proved(self) -> bool:
        return self.verdict is Verdict.PROVED

    def lines(self, *, timings: bool = False) -> list[str]:
        out = [entry.line(timings=timings) for entry in self.entries]
        out.append(f"{self.verdict}|{self.scenario_hash}")
        return out

    def write(self, path: str | Path, *, timings: bool = False) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines(timings=timings)) + "\n", encoding="utf-8")
        return path

    @contextmanager
    def guard(self, id: str) -> Iterator[None]:
        """Record a :class:`ProofError` raised inside the block as an ``ERROR`` entry."""
        start = time.perf_counter()
        try:
            yield
        except ProofError as exc:
            logger.warning("%s failed: %s", id, exc)
            self.add(ReportEntry.error(id, exc, seconds=time.perf_counter() - start))


def merge_reports(
    kind: str, scenario_hash: str, parts: Sequence[tuple[str, ProofReport]]
) -> ProofReport:
    """One report from several prefixed sub-reports, in the given order."""
    merged = ProofReport(kind, scenario_hash)
    for prefix, part in parts:
        merged.extend(part, prefix)
    return merged


__all__ = [
    "CLOSED_OK",
    "FACTORED",
    "LINK",
    "Check",
    "ProofReport",
    "ReportEntry",
    "Verdict",
    "merge_reports",
]
