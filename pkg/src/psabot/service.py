"""Session service: one dialogue manager + one world per session, driven
through an ordered event stream.

Executions are stepped: starting a plan arms a generator, and each step
releases the next batch of events (robot movement, door changes,
realized reports, status changes).  At instant pacing the caller drains
steps synchronously; at scaled pacing a pump thread steps with real
sleeps so a "stop" typed mid-travel lands mid-travel.  An utterance
posted while an execution is in flight is still processed, which is
exactly how "stop" works: it interrupts the active execution, and the
generator winds down at a position interpolated by the pacer.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass

from . import interpreter
from .dm import DialogueManager
from .lingform import EmptyUtterance
from .script import Halt, Prim, Script, Seq
from .world import WorldModel, format_clock, load_config, load_default


class ProtocolError(Exception):
    def __init__(self, code: str, detail: str):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}")


class UnknownSession(ProtocolError):
    def __init__(self, session_id: str):
        super().__init__("UnknownSession", f"no session {session_id!r}")


@dataclass(frozen=True)
class ServerEvent:
    type: str
    payload: dict
    seq: int


@dataclass(frozen=True)
class Pacing:
    kind: str  # "instant" | "scaled"
    rate: float = 0.0  # simulated seconds per real second (scaled only)

    @staticmethod
    def parse(text: str) -> "Pacing":
        if text == "instant":
            return Pacing("instant")
        if text.startswith("scaled:"):
            rate = float(text.split(":", 1)[1])
            if rate <= 0:
                raise ValueError("pacing rate must be positive")
            return Pacing("scaled", rate)
        raise ValueError(f"unknown pacing {text!r}")


class _InstantPacer:
    """Deterministic pacer: an interrupt that lands between departure and
    arrival stops the robot halfway along the leg."""

    def travel_begins(self, duration: float):
        pass

    def travel_fraction(self) -> float:
        return 0.5


class _ScaledPacer:
    def __init__(self, rate: float):
        self.rate = rate
        self._begin = 0.0
        self._real_duration = 0.0

    def travel_begins(self, duration: float):
        self._begin = time.monotonic()
        self._real_duration = duration / self.rate if duration > 0 else 0.0

    def travel_fraction(self) -> float:
        if self._real_duration <= 0:
            return 0.5
        return min(max((time.monotonic() - self._begin) / self._real_duration, 0.0), 1.0)


class _Control:
    def __init__(self, pacer):
        self.flag = threading.Event()
        self.pacer = pacer

    def interrupted(self) -> bool:
        return self.flag.is_set()

    def travel_fraction(self) -> float:
        return self.pacer.travel_fraction()


def _is_halt_only(script: Script) -> bool:
    if isinstance(script, Seq):
        return all(_is_halt_only(item) for item in script.items)
    return isinstance(script, Prim) and isinstance(script.action, Halt)


class SessionEngine:
    """Single session: serialized turns, ordered events, one execution
    at a time."""

    def __init__(self, world: WorldModel, pacing: Pacing | None = None, auto_drain: bool = True):
        self.world = world
        self.dm = DialogueManager(world)
        self.pacing = pacing or Pacing.parse(world.pacing)
        self.auto_drain = auto_drain  # batch runners pump steps themselves
        self.lock = threading.RLock()
        self.events: list[ServerEvent] = []
        self._listeners = []
        self._active = None  # execution generator, when a plan is running
        self._control: _Control | None = None
        self._status = "idle"
        self._pump_thread: threading.Thread | None = None

    # -- events ---------------------------------------------------------

    def add_listener(self, fn):
        self._listeners.append(fn)

    def _emit(self, type_: str, payload: dict) -> ServerEvent:
        event = ServerEvent(type=type_, payload=payload, seq=len(self.events))
        self.events.append(event)
        for fn in self._listeners:
            fn(event)
        return event

    def events_since(self, seq: int) -> list[ServerEvent]:
        with self.lock:
            return self.events[seq:]

    # -- turns ------------------------------------------------------------

    def post_utterance(self, text: str) -> list[ServerEvent]:
        """Process one user turn; returns every event it produced.  If a
        plan starts and pacing is instant, its events are included."""
        with self.lock:
            start = len(self.events)
            if not text or not text.strip():
                raise ProtocolError("EmptyUtterance", "utterance is empty")
            try:
                plan = self.dm.process_utterance(text)
            except EmptyUtterance:
                raise ProtocolError("EmptyUtterance", "utterance is empty")
            for record in plan.trace:
                self._emit("trace_record", {
                    "stage": record.stage, "summary": record.summary,
                    "meta": list(record.meta),
                })
            if plan.script is not None:
                self._interrupt_active()
                self.dm.finish_turn(plan)
                if not _is_halt_only(plan.script):
                    self._start_execution(plan.script)
                    if self.pacing.kind == "instant" and self.auto_drain:
                        self._drain()
            else:
                if plan.text:
                    self._emit("system_utterance", {"text": plan.text})
                self.dm.finish_turn(plan)
            return self.events[start:]

    # -- execution pump ----------------------------------------------------

    def _start_execution(self, script: Script):
        pacer = _InstantPacer() if self.pacing.kind == "instant" else _ScaledPacer(self.pacing.rate)
        self._control = _Control(pacer)
        self._active = interpreter.execute_steps(script, self.world, self._control)
        self._status = "running"
        self._emit("execution_status", {"status": "running"})

    @property
    def execution_active(self) -> bool:
        return self._active is not None

    def step(self) -> tuple[list[ServerEvent], float]:
        """Advance the active execution by one interpreter event.
        Returns (new events, simulated seconds to pace before the next
        step); no active execution returns ([], 0)."""
        with self.lock:
            return self._step_locked()

    def _step_locked(self) -> tuple[list[ServerEvent], float]:
        if self._active is None:
            return [], 0.0
        start = len(self.events)
        pause = 0.0
        try:
            event = next(self._active)
        except StopIteration as stop:
            status = stop.value or "completed"
            self._active = None
            self._control = None
            self._status = "interrupted" if status == "interrupted" else "idle"
            self._emit("execution_status", {"status": self._status})
            return self.events[start:], 0.0
        pause = self._publish(event)
        return self.events[start:], pause

    def _publish(self, event) -> float:
        """Map one interpreter event onto server events; returns the
        simulated pause the pacer should honor after it."""
        world = self.world
        if isinstance(event, interpreter.TravelStarted):
            if self._control is not None:
                self._control.pacer.travel_begins(event.duration)
            self._emit("travel_started", {
                "origin": event.origin,
                "destination": event.destination,
                "duration_seconds": event.duration,
            })
            return event.duration
        if isinstance(event, interpreter.Arrived):
            trail = self.dm.ctx.visited_trail
            if not trail or trail[-1] != event.location:
                trail.append(event.location)
            self._emit("robot_moved", {
                "position": event.position,
                "location": event.location,
                "returning": event.returning,
            })
            return 0.0
        if isinstance(event, interpreter.DoorSet):
            self._emit("door_changed", {"door": event.door, "status": event.status})
            return world.durations.door
        if isinstance(event, (interpreter.Measured, interpreter.HistoryRead)):
            report = event.report
            self._emit("report_issued", {
                "sensor": report.sensor,
                "location": report.location,
                "time": None if report.time_seconds is None else format_clock(report.time_seconds),
                "value": report.value,
                "source": report.source,
            })
            self._emit("system_utterance", {"text": self.dm.realizer.report(report)})
            return world.durations.measure if report.source == "mobile" else 0.0
        if isinstance(event, interpreter.Spoke):
            self._emit("system_utterance", {"text": event.text})
            return 0.0
        if isinstance(event, interpreter.PresupHit):
            self._emit("trace_record", {
                "stage": "execute",
                "summary": "presupposition-failure action skipped (null in execute mode)",
                "meta": [str(event.payload)],
            })
            return 0.0
        if isinstance(event, interpreter.HaltedAt):
            # A halt between primitives leaves the robot where the last
            # event already put it; only a mid-travel halt moved it.
            if event.location is None:
                self._emit("robot_moved", {
                    "position": event.position,
                    "location": None,
                    "returning": False,
                })
            return 0.0
        raise TypeError(f"unmapped interpreter event {event!r}")

    def _drain(self):
        while self._active is not None:
            self._step_locked()

    def _interrupt_active(self):
        if self._active is None:
            return
        self._control.flag.set()
        self._drain()

    def ensure_pump(self):
        """Start the pump thread unless one is already alive.  Exactly
        one pump may drive an engine: two would interleave their pacing
        sleeps and run the plan at the wrong speed."""
        with self.lock:
            if self._active is None:
                return
            if self._pump_thread is not None and self._pump_thread.is_alive():
                return
            self._pump_thread = threading.Thread(target=self.run_pump, daemon=True)
            self._pump_thread.start()

    def run_pump(self):
        """Blocking pump for scaled pacing; meant for a worker thread.
        Sleeps between steps so wall time tracks simulated time."""
        rate = self.pacing.rate if self.pacing.kind == "scaled" else None
        while True:
            events, pause = self.step()
            with self.lock:
                current = self._active
                control = self._control
            if current is None:
                return
            if rate and pause > 0:
                # pace this leg, but wake early if the execution is
                # interrupted or replaced under us
                deadline = time.monotonic() + pause / rate
                while time.monotonic() < deadline:
                    time.sleep(0.005)
                    with self.lock:
                        if self._active is not current or control.flag.is_set():
                            break

    # -- state ------------------------------------------------------------

    def get_state(self) -> dict:
        with self.lock:
            world = self.world
            pending = self.dm.ctx.pending
            pending_summary = None
            if pending is not None:
                kind = type(pending).__name__
                detail = getattr(pending, "paraphrase", None) or getattr(pending, "slot", None)
                pending_summary = {"kind": kind, "detail": detail}
            return {
                "position": world.position,
                "location": world.position_name,
                "clock": format_clock(world.clock),
                "doors": dict(world.doors),
                "sensors": {
                    sensor: {loc: spec.value_at(loc) for loc in world.locations}
                    for sensor, spec in world.sensors.items()
                },
                "locations": {name: world.locations[name] for name in world.locations},
                "display_names": {name: world.display(name) for name in world.locations},
                "pending": pending_summary,
                "execution": self._status,
                "trail": list(self.dm.ctx.visited_trail),
            }


class SessionManager:
    """Holds isolated sessions; no shared world between them."""

    def __init__(self, default_config_text: str | None = None, default_pacing: str | None = None):
        self._sessions: dict[str, SessionEngine] = {}
        self._default_config_text = default_config_text
        self._default_pacing = default_pacing
        self._lock = threading.Lock()

    def create_session(self, config_text: str | None = None, pacing: str | None = None) -> str:
        if config_text is None:
            world = (
                load_config(self._default_config_text)
                if self._default_config_text
                else load_default()
            )
        else:
            world = load_config(config_text)
        pacing = pacing or self._default_pacing
        engine = SessionEngine(world, Pacing.parse(pacing) if pacing else None)
        session_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._sessions[session_id] = engine
        return session_id

    def get(self, session_id: str) -> SessionEngine:
        with self._lock:
            engine = self._sessions.get(session_id)
        if engine is None:
            raise UnknownSession(session_id)
        return engine

    def post_utterance(self, session_id: str, text: str) -> list[ServerEvent]:
        engine = self.get(session_id)
        events = engine.post_utterance(text)
        if engine.pacing.kind == "scaled" and engine.execution_active:
            engine.ensure_pump()
        return events

    def get_state(self, session_id: str) -> dict:
        return self.get(session_id).get_state()

    def events_since(self, session_id: str, seq: int) -> list[ServerEvent]:
        return self.get(session_id).events_since(seq)
