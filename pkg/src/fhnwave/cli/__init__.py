from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import anyio
import yaml
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from fhnwave.config import SettingsError, current_config, init_config
from fhnwave.errors import ProofError
from fhnwave.oracle import orbit_trajectory, seed_orbit, shoot_skeleton, write_csv
from fhnwave.proofs import (
    ContinuationScenario,
    HomoclinicScenario,
    NewtonScenario,
    PeriodicScenario,
    ProofReport,
    aprove_homoclinic,
    aprove_newton_unique,
    aprove_periodic,
    arun_continuation,
    load_scenario,
    skeleton_fragment,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from fhnwave.proofs.scenario import ScenarioKind

logger = logging.getLogger("fhnwave")

MAX_ROWS = 60

_KINDS: dict[str, ScenarioKind] = {
    "prove-periodic": "periodic_small_eps",
    "continue": "continuation",
    "prove-newton": "newton_unique",
    "prove-homoclinic": "homoclinic",
}


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
        force=True,
    )


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Scenario fields given on the command line."""
    out: dict[str, Any] = {}
    if args.theta is not None:
        out["theta"] = args.theta
    if getattr(args, "eps_max", None) is not None:
        out["eps_max"] = args.eps_max
    if getattr(args, "split", None):
        out["eps_splits"] = args.split
    if getattr(args, "div", None) is not None:
        out["div"] = args.div
    if getattr(args, "grid", None) is not None:
        out["grids"] = {"segment": args.grid, "chain": args.grid, "block": args.grid}
    for name in ("eps", "eps_start", "eps_stop", "radius", "max_steps", "seed_file"):
        if getattr(args, name, None) is not None:
            out[name] = getattr(args, name)
    return out


def _report_table(report: ProofReport) -> Table:
    entries = report.entries
    title = f"{report.kind}: {len(entries)} entries"
    if len(entries) > MAX_ROWS:
        entries = report.failures[:MAX_ROWS]
        title += f", showing {len(entries)} failures"
    table = Table(title=title)
    table.add_column("id", style="cyan", no_wrap=True)
    table.add_column("tag")
    table.add_column("verdict")
    table.add_column("margin", justify="right")
    for entry in entries:
        style = "green" if entry.passed else "bold red"
        margin = float(entry.margin.lo.min())
        table.add_row(entry.id, entry.tag, f"[{style}]{entry.verdict}[/]", f"{margin:.3e}")
    return table


def _show(console: Console, report: ProofReport) -> None:
    console.print(_report_table(report))
    lines = [f"scenario {report.scenario_hash[:16]}"]
    lines.extend(f"{key}: {value}" for key, value in report.extras.items())
    if report.missing:
        lines.append(f"missing: {', '.join(report.missing)}")
    style = "green" if report.proved else "red"
    console.print(Panel("\n".join(lines), title=str(report.verdict), style=style, expand=False))


async def _run(scenario: Any, jobs: int) -> ProofReport:
    match scenario:
        case PeriodicScenario():
            return await aprove_periodic(scenario, jobs=jobs)
        case HomoclinicScenario():
            return await aprove_homoclinic(scenario, jobs=jobs)
        case ContinuationScenario():
            return await arun_continuation(scenario, jobs=jobs)
        case NewtonScenario():
            return await aprove_newton_unique(scenario, jobs=jobs)
    raise TypeError(f"unknown scenario {type(scenario).__name__}")


def prove(args: argparse.Namespace, console: Console) -> int:
    """Run one proof pipeline; the exit code is 0 exactly when it proves."""
    scenario = load_scenario(args.config, _KINDS[args.command], _overrides(args))
    jobs = args.jobs or current_config().jobs
    logger.info("running %s with %d jobs", scenario.kind, jobs)
    report = anyio.run(_run, scenario, jobs)
    _show(console, report)
    if args.report:
        path = report.write(args.report, timings=args.timings)
        console.print(f"report written to {path}")
    return 0 if report.proved else 1


def oracle(args: argparse.Namespace, console: Console) -> int:
    """Locate the singular loop and optionally a float periodic orbit."""
    theta = None if args.homoclinic else float(args.theta or 0.61)
    skeleton = shoot_skeleton(theta)
    table = Table(title=f"singular loop at theta = {skeleton.theta:.10f}")
    for column in ("corner", "u", "w", "lambda_u", "lambda_s"):
        table.add_column(column, justify="right")
    for name, point in skeleton.corners.items():
        frame = skeleton.frame(name)
        table.add_row(
            name, f"{point[0]:.9f}", f"{point[2]:.9f}", f"{frame[1, 0]:.9f}", f"{frame[1, 1]:.9f}"
        )
    console.print(table)
    if args.out:
        text = yaml.safe_dump(skeleton_fragment(skeleton), sort_keys=False)
        Path(args.out).write_text(text, encoding="utf-8")
        console.print(f"scenario fragment written to {args.out}")
    if args.csv or args.anchors:
        if args.homoclinic:
            console.print("[red]no periodic seed orbit in homoclinic mode[/]")
            return 2
        jobs = args.jobs or current_config().jobs
        guess = seed_orbit(
            args.eps, skeleton.theta, anchors=args.seed, skeleton=skeleton, jobs=jobs
        )
        console.print(
            f"seed orbit: {guess.k} anchors, residual {guess.residual:.3e}, "
            f"period {guess.period:.6f}"
        )
        if args.anchors:
            write_csv(args.anchors, guess.points)
        if args.csv:
            write_csv(args.csv, orbit_trajectory(guess))
    return 0


def _common(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", default=None, help="Scenario file (.yaml, .toml or .json)")
    cmd.add_argument("--theta", default=None, help="Wave speed, decimal text")
    cmd.add_argument("--report", default=None, help="Write the report to this file")
    cmd.add_argument("--timings", action="store_true", help="Write wall times into the report")
    cmd.add_argument("--jobs", type=int, default=None, help="Worker threads")
    cmd.add_argument("--log-level", default=None, help="Logging level")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhnwave", description="Computer-assisted proofs for FitzHugh-Nagumo waves"
    )
    sub = parser.add_subparsers(dest="command")

    for name, help_text in (
        ("prove-periodic", "Periodic orbits for all eps in (0, eps_max]"),
        ("prove-homoclinic", "Homoclinic orbits for all eps in (0, eps_max]"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _common(cmd)
        cmd.add_argument("--eps-max", default=None, help="Upper end of the eps range")
        cmd.add_argument(
            "--split", action="append", default=None, help="Split the eps range here (repeatable)"
        )
        cmd.add_argument("--div", type=int, default=None, help="Covering grid per axis")
        cmd.add_argument("--grid", type=int, default=None, help="Isolation grid per face axis")

    cont = sub.add_parser("continue", help="Validated continuation in eps")
    _common(cont)
    cont.add_argument("--eps-start", default=None)
    cont.add_argument("--eps-stop", default=None)
    cont.add_argument("--max-steps", type=int, default=None)
    cont.add_argument("--div", type=int, default=None, help="Covering grid per axis")
    cont.add_argument("--seed-file", default=None, help="Anchors (u,v,w CSV) of the start orbit")

    newton = sub.add_parser("prove-newton", help="Local uniqueness by interval Newton")
    _common(newton)
    newton.add_argument("--eps", default=None)
    newton.add_argument("--radius", type=float, default=None, help="Newton box radius")
    newton.add_argument("--seed-file", default=None, help="Anchors (u,v,w CSV) of the orbit")

    orc = sub.add_parser("oracle", help="Singular loop, seed orbit and CSV dumps")
    orc.add_argument("--theta", default=None, help="Wave speed (periodic mode)")
    orc.add_argument("--homoclinic", action="store_true", help="Pin the up front to w = 0")
    orc.add_argument("--eps", type=float, default=1e-3, help="eps of the seed orbit")
    orc.add_argument("--seed", type=int, default=212, help="Anchors of the seed orbit")
    orc.add_argument("--out", default=None, help="Write a scenario fragment (YAML)")
    orc.add_argument("--csv", default=None, help="Write the seed trajectory as t,u,v,w")
    orc.add_argument("--anchors", default=None, help="Write the seed anchors as u,v,w")
    orc.add_argument("--jobs", type=int, default=None, help="Worker threads")
    orc.add_argument("--log-level", default=None, help="Logging level")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2

    init_config()
    _setup_logging(args.log_level or current_config().log_level)
    console = Console()
    try:
        if args.command == "oracle":
            return oracle(args, console)
        return prove(args, console)
    except SettingsError as e:
        console.print(f"[red]{escape(str(e))}[/]")
        return 2
    except ProofError as e:
        console.print(f"[red]{type(e).__name__}: {escape(str(e))}[/]")
        return 1


__all__ = ["main"]
