"""Batch front end: scenario JSON in, summary CSV/JSON out.

Scenario file (every key except ``protocol`` is optional)::

    {
      "protocol": "gv" | "bb84" | "two_step" | "relativistic",
      "strategy": "none" | "branch_qnd" | {"name": "branch_qnd", "branch": "b"},
      "geometry": {"L": 1.0, "c": 1.0, "tau": 1.5, "x_E": 0.5, "w": 0.1},
      "paths": [1.0, 1.0],
      "announce_policy": "after_receipt" | "before_emission",
      "timing_tolerance": 0.01,
      "rounds": 1000,
      "seed": 42
    }

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .adversary import STRATEGIES, ApplicabilityError, Protocol, Strategy
from .harness import SUMMARY_FIELDS, Summary, run_experiment
from .protocols import AnnouncePolicy, Scenario
from .spacetime import Geometry, windows_overlap

DEFAULT_ROUNDS = 1000
DEFAULT_SEED = 0
TOP_LEVEL_KEYS = {
    "protocol",
    "strategy",
    "geometry",
    "paths",
    "announce_policy",
    "timing_tolerance",
    "rounds",
    "seed",
}
INSECURE_WINDOWS = "insecure geometry: windows overlap"
SHORT_RINGS = "insecure geometry: storage delay does not exceed channel transit plus packet width"


class ScenarioError(ValueError):
    """Base for every problem with a scenario file."""


class ScenarioParseError(ScenarioError):
    def __init__(self, path, exc: json.JSONDecodeError):
        super().__init__(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
        self.lineno = exc.lineno
        self.colno = exc.colno


class ScenarioValidationError(ScenarioError):
    def __init__(self, field_name: str, constraint: str):
        super().__init__(f"{field_name}: {constraint}")
        self.field = field_name
        self.constraint = constraint


class ScenarioApplicabilityError(ScenarioError):
    pass


@dataclass
class ScenarioFile:
    scenario: Scenario
    rounds: int = DEFAULT_ROUNDS
    seed: int = DEFAULT_SEED
    warnings: list[str] = field(default_factory=list)


def _enum(cls, value, name):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(repr(m.value) for m in cls)
        raise ScenarioValidationError(name, f"must be one of {choices}, got {value!r}") from None


def _strategy(raw) -> Strategy:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise ScenarioValidationError("strategy", "must be a name or an object with 'name'")
    params = dict(raw)
    name = params.pop("name")
    cls = STRATEGIES.get(name)
    if cls is None:
        raise ScenarioValidationError("strategy.name", f"unknown strategy {name!r}")
    allowed = {f.name for f in fields(cls)}
    unknown = set(params) - allowed
    if unknown:
        raise ScenarioValidationError(f"strategy.{sorted(unknown)[0]}", "unknown key")
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError("strategy", str(exc)) from None


def _number(doc: dict, key: str, kind=float):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioValidationError(key, f"must be a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ScenarioValidationError(key, f"must be an integer, got {value!r}")
    return kind(value)


def scenario_from_dict(doc: dict[str, Any]) -> ScenarioFile:
    if not isinstance(doc, dict):
        raise ScenarioValidationError("<root>", "scenario must be a JSON object")
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioValidationError(sorted(unknown)[0], "unknown key")
    if "protocol" not in doc:
        raise ScenarioValidationError("protocol", "required")
    protocol = _enum(Protocol, doc["protocol"], "protocol")
    strategy = _strategy(doc.get("strategy", "none"))

    geo = doc.get("geometry", {})
    if not isinstance(geo, dict):
        raise ScenarioValidationError("geometry", "must be an object")
    geo_keys = {f.name for f in fields(Geometry)}
    for key in geo:
        if key not in geo_keys:
            raise ScenarioValidationError(f"geometry.{key}", "unknown key")
        _number(geo, key)
    try:
        geometry = Geometry(**{k: float(v) for k, v in geo.items()})
    except ValueError as exc:
        name, _, constraint = str(exc).partition(" ")
        raise ScenarioValidationError(name, constraint) from None

    announce = _enum(AnnouncePolicy, doc.get("announce_policy", "after_receipt"), "announce_policy")
    tol = _number(doc, "timing_tolerance") if "timing_tolerance" in doc else 0.01
    if tol < 0:
        raise ScenarioValidationError("timing_tolerance", "must be >= 0")
    paths = doc.get("paths")
    if paths is not None:
        if not isinstance(paths, list) or len(paths) != 2:
            raise ScenarioValidationError("paths", "must be a list of two lengths")
        if not all(isinstance(p, (int, float)) and not isinstance(p, bool) and p > 0 for p in paths):
            raise ScenarioValidationError("paths", "lengths must be positive numbers")
    rounds = _number(doc, "rounds", int) if "rounds" in doc else DEFAULT_ROUNDS
    if rounds < 1:
        raise ScenarioValidationError("rounds", "must be >= 1")
    seed = _number(doc, "seed", int) if "seed" in doc else DEFAULT_SEED

    try:
        scenario = Scenario(
            protocol=protocol,
            geometry=geometry,
            announce=announce,
            strategy=strategy,
            timing_tolerance=tol,
            paths=tuple(paths) if paths is not None else None,
        )
    except ApplicabilityError as exc:
        raise ScenarioApplicabilityError(str(exc)) from None

    warnings = []
    if protocol in (Protocol.GV, Protocol.TWO_STEP):
        if windows_overlap(geometry):
            warnings.append(INSECURE_WINDOWS)
        elif not geometry.long_rings:
            warnings.append(SHORT_RINGS)
    return ScenarioFile(scenario, rounds, seed, warnings)


def parse_scenario(path) -> ScenarioFile:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(path, exc) from None
    return scenario_from_dict(doc)


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_csv(summary: Summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    row = summary.as_row()
    writer.writerow(SUMMARY_FIELDS)
    writer.writerow([_csv_value(row[k]) for k in SUMMARY_FIELDS])
    return buf.getvalue()


def format_json(summary: Summary) -> str:
    return json.dumps(summary.as_row()) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twostep-qkd",
        description="Simulate eavesdropping on two-step quantum key distribution.",
    )
    parser.add_argument("--scenario", required=True, metavar="PATH", help="scenario JSON file")
    parser.add_argument("--rounds", type=int, help="override the scenario's round count")
    parser.add_argument("--seed", type=int, help="override the scenario's master seed")
    parser.add_argument("--out", metavar="PATH", help="summary destination (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument(
        "--log-rounds",
        nargs="?",
        const="",
        metavar="PATH",
        help="write per-round records as JSON lines (default: OUT.rounds.jsonl, or stderr)",
    )
    parser.add_argument("--workers", type=int, default=1, help="worker processes")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        loaded = parse_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for warning in loaded.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    rounds = loaded.rounds if args.rounds is None else args.rounds
    seed = loaded.seed if args.seed is None else args.seed
    if rounds < 1:
        print("error: rounds: must be >= 1", file=sys.stderr)
        return 2

    try:
        result = run_experiment(
            loaded.scenario,
            rounds,
            seed,
            keep_records=args.log_rounds is not None,
            workers=args.workers,
        )
        text = format_csv(result.summary) if args.format == "csv" else format_json(result.summary)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        if result.records is not None:
            lines = "".join(json.dumps(r.to_dict()) + "\n" for r in result.records)
            if args.log_rounds:
                Path(args.log_rounds).write_text(lines)
            elif args.out:
                Path(args.out + ".rounds.jsonl").write_text(lines)
            else:
                sys.stderr.write(lines)
    except Exception as exc:  # noqa: BLE001
        print(f"error: run failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
