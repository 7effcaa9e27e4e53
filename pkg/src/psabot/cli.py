"""Interactive REPL and batch transcript runner.

Transcript files hold ``USER:`` lines, expected ``PSA:`` lines,
bracketed action annotations, and ``#`` comments.  The runner feeds the
USER lines through a session and pumps execution lazily: events are
only stepped out as far as the next expectation requires, so a USER
line placed mid-plan (a "Stop.") genuinely interrupts the plan at that
point, exactly as a live speaker would.

Annotations map onto server events:

    [PSA moves to X]            robot arrives at X
    [PSA returns to X]          robot arrives at X (a go-back)
    [PSA starts moving to X]    robot departs toward X
    [PSA stops]                 execution interrupted
    [PSA opens X] / [PSA closes X]   door status change
"""

from __future__ import annotations

import argparse
import difflib
import re
import sys
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .service import Pacing, ProtocolError, ServerEvent, SessionEngine
from .world import InvalidConfig, WorldModel, default_config_text, load_config


class TranscriptError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    kind: str  # user | psa | moves | returns | starts | stops | door
    text: str = ""
    entity: str = ""
    status: str = ""
    line_no: int = 0
    raw: str = ""


_ANNOTATIONS = [
    (re.compile(r"^PSA starts moving to (?:the )?(.+)$"), "starts"),
    (re.compile(r"^PSA returns to (?:the )?(.+)$"), "returns"),
    (re.compile(r"^PSA moves to (?:the )?(.+)$"), "moves"),
    (re.compile(r"^PSA stops$"), "stops"),
    (re.compile(r"^PSA opens (?:the )?(.+)$"), "door_open"),
    (re.compile(r"^PSA closes (?:the )?(.+)$"), "door_closed"),
]


def parse_transcript(text: str, world: WorldModel) -> list[Entry]:
    by_display = {world.display(name).lower(): name for name in world.locations}
    entries: list[Entry] = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("USER:"):
            entries.append(Entry("user", text=line[5:].strip(), line_no=line_no, raw=line))
            continue
        if line.startswith("PSA:"):
            entries.append(Entry("psa", text=line[4:].strip(), line_no=line_no, raw=line))
            continue
        if line.startswith("[") and line.endswith("]"):
            inner = line[1:-1].strip()
            for pattern, kind in _ANNOTATIONS:
                match = pattern.match(inner)
                if not match:
                    continue
                if kind == "stops":
                    entries.append(Entry("stops", line_no=line_no, raw=line))
                    break
                display = match.group(1).strip().lower()
                entity = by_display.get(display)
                if entity is None:
                    raise TranscriptError(f"line {line_no}: unknown place {display!r}")
                if kind in ("moves", "returns", "starts"):
                    entries.append(Entry(kind, entity=entity, line_no=line_no, raw=line))
                else:
                    entries.append(Entry(
                        "door", entity=entity,
                        status="open" if kind == "door_open" else "closed",
                        line_no=line_no, raw=line,
                    ))
                break
            else:
                raise TranscriptError(f"line {line_no}: unrecognized annotation {line!r}")
            continue
        raise TranscriptError(f"line {line_no}: unrecognized line {line!r}")
    return entries


def _render_event(event: ServerEvent, world: WorldModel) -> str | None:
    payload = event.payload
    if event.type == "system_utterance":
        return f"PSA: {payload['text']}"
    if event.type == "robot_moved" and payload.get("location"):
        verb = "returns to" if payload.get("returning") else "moves to"
        return f"[PSA {verb} {world.display(payload['location'])}]"
    if event.type == "door_changed":
        verb = "opens" if payload["status"] == "open" else "closes"
        return f"[PSA {verb} {world.display(payload['door'])}]"
    if event.type == "execution_status" and payload["status"] == "interrupted":
        return "[PSA stops]"
    if event.type == "travel_started":
        return f"[PSA starts moving to {world.display(payload['destination'])}]"
    return None


def _matches(entry: Entry, event: ServerEvent) -> bool:
    payload = event.payload
    if entry.kind == "psa":
        return event.type == "system_utterance" and payload["text"] == entry.text
    if entry.kind in ("moves", "returns"):
        return event.type == "robot_moved" and payload.get("location") == entry.entity
    if entry.kind == "starts":
        return event.type == "travel_started" and payload["destination"] == entry.entity
    if entry.kind == "stops":
        return event.type == "execution_status" and payload["status"] == "interrupted"
    if entry.kind == "door":
        return (
            event.type == "door_changed"
            and payload["door"] == entry.entity
            and payload["status"] == entry.status
        )
    return False


def _transparent(event: ServerEvent, expecting: Entry | None) -> bool:
    if event.type in ("trace_record", "report_issued"):
        return True
    if event.type == "execution_status":
        return event.payload["status"] != "interrupted"
    if event.type == "robot_moved" and not event.payload.get("location"):
        return True
    if event.type == "travel_started":
        return not (expecting is not None and expecting.kind == "starts")
    return False


class TranscriptRunner:
    def __init__(self, world: WorldModel):
        self.world = world
        self.engine = SessionEngine(world, Pacing.parse("instant"), auto_drain=False)
        self.pending: deque[ServerEvent] = deque()

    def _next_event(self, expecting: Entry | None) -> ServerEvent | None:
        while True:
            while not self.pending:
                if not self.engine.execution_active:
                    return None
                events, _ = self.engine.step()
                self.pending.extend(events)
            event = self.pending.popleft()
            if _transparent(event, expecting):
                continue
            return event

    def run(self, entries: list[Entry]) -> tuple[list[str], list[str]]:
        """Returns (expected lines, actual lines) for diffing."""
        expected: list[str] = []
        actual: list[str] = []
        for entry in entries:
            if entry.kind == "user":
                expected.append(entry.raw)
                actual.append(entry.raw)
                self.pending.extend(self.engine.post_utterance(entry.text))
                continue
            expected.append(entry.raw)
            event = self._next_event(entry)
            if event is None:
                actual.append("<no event>")
            elif _matches(entry, event):
                actual.append(entry.raw)
            else:
                actual.append(_render_event(event, self.world) or f"<{event.type}>")
        # Drain whatever the session still wants to do; extras are diffs.
        while True:
            event = self._next_event(None)
            if event is None:
                break
            rendered = _render_event(event, self.world)
            if rendered is not None:
                actual.append(rendered)
        return expected, actual


def run_transcript(path: str | Path, world: WorldModel) -> tuple[int, str]:
    """Feed a transcript; returns (exit code, human-readable report)."""
    text = Path(path).read_text()
    entries = parse_transcript(text, world)
    expected, actual = TranscriptRunner(world).run(entries)
    if expected == actual:
        return 0, f"ok: {len(entries)} lines matched"
    diff = "\n".join(
        difflib.unified_diff(expected, actual, fromfile="expected", tofile="actual", lineterm="")
    )
    return 1, diff


# -- REPL ----------------------------------------------------------------------


def _print_event(event: ServerEvent, world: WorldModel, trace: bool, live: bool):
    if event.type == "trace_record":
        if trace:
            meta = f"  [{', '.join(event.payload['meta'])}]" if event.payload["meta"] else ""
            print(f"  trace {event.payload['stage']}: {event.payload['summary']}{meta}")
        return
    if event.type == "travel_started" and not live:
        return
    rendered = _render_event(event, world)
    if rendered:
        print(rendered)


def repl(world: WorldModel, pacing: Pacing, trace: bool) -> int:
    engine = SessionEngine(world, pacing, auto_drain=True)
    live = pacing.kind == "scaled"
    engine.add_listener(lambda event: _print_event(event, world, trace, live))
    print(f"PSA interface ready at {world.display(world.position_name)} "
          f"(clock {engine.get_state()['clock']}). Ctrl-D to leave.")
    while True:
        try:
            line = input("USER: ")
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print()
            return 0
        if line.strip().lower() in ("quit", "exit"):
            return 0
        if not line.strip():
            continue
        try:
            engine.post_utterance(line)
        except ProtocolError as exc:
            print(f"(protocol error: {exc})")
            continue
        if live and engine.execution_active:
            engine.ensure_pump()


# -- entry point ----------------------------------------------------------------


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psabot",
        description="Text-command interface to a simulated shuttle robot.",
    )
    parser.add_argument("--config", help="world configuration file (default: built-in)")
    parser.add_argument("--trace", action="store_true", help="print per-stage pipeline traces")
    parser.add_argument("--transcript", help="run a transcript file and diff the responses")
    parser.add_argument(
        "--pacing", default=None,
        help="execution pacing: 'instant' or 'scaled:<rate>' (simulated seconds per real second)",
    )
    parser.add_argument("--serve", action="store_true", help="serve the HTTP API and web console")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)

    try:
        config_text = Path(args.config).read_text() if args.config else default_config_text()
        world = load_config(config_text)
    except FileNotFoundError:
        print(f"config not found: {args.config}", file=sys.stderr)
        return 2
    except InvalidConfig as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2

    try:
        pacing = Pacing.parse(args.pacing) if args.pacing else Pacing.parse(world.pacing)
    except ValueError as exc:
        print(f"bad --pacing: {exc}", file=sys.stderr)
        return 2

    if args.transcript:
        try:
            code, report = run_transcript(args.transcript, world)
        except FileNotFoundError:
            print(f"transcript not found: {args.transcript}", file=sys.stderr)
            return 2
        except TranscriptError as exc:
            print(f"bad transcript: {exc}", file=sys.stderr)
            return 2
        print(report)
        return code

    if args.serve:
        from .webapi import serve

        serve(config_text, host=args.host, port=args.port, pacing=args.pacing)
        return 0

    return repl(world, pacing, args.trace)


if __name__ == "__main__":
    sys.exit(main())
