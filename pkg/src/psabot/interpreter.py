"""One script interpreter, two execution types.

The same walker and the same procedure rules serve both modes; only the
primitive dispatch differs, through a view object.  In ``evaluate``
mode the view mutates a private state vector threaded through the run
and presupposition failures land on the meta-output stream; in
``execute`` mode the view drives the live world's effectors and a
presupposition-failure action is a null action (logged to the trace).

The interrupt signal is observed between primitive actions and
continuously during travel: a leg is split into a departure and an
arrival, and an interrupt landing between them stops the robot at a
position interpolated by the pacer's elapsed fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .meta import AlreadyInState, MetaOutput
from .script import (
    Action,
    ChangeStatus,
    CloseDoor,
    Foreach,
    GoTo,
    Halt,
    IfThenElse,
    MeasureHere,
    OpenDoor,
    PresupFailAction,
    Prim,
    QueryHistory,
    Report as ReportAction,
    ReturnTo,
    Script,
    Seq,
    StatusTest,
    Var,
)
from .world import AdvanceClock, Move, Report, SetDoor, WorldModel, WorldState

EVALUATE = "evaluate"
EXECUTE = "execute"


class UnknownAction(TypeError):
    """The compiler emitted an action no rule covers: a defect, not a
    dialogue condition."""


# -- rule table ---------------------------------------------------------------


@dataclass(frozen=True)
class ProcedureRule:
    head: str
    body: Script | None  # None marks a builtin primitive


def _door_rule(door: str, goal: str) -> Script:
    return IfThenElse(
        test=StatusTest(door, "open_closed", goal),
        then=PresupFailAction(AlreadyInState(door, "open_closed", goal)),
        otherwise=ChangeStatus(door, "open_closed", goal),
    )


def lookup_rule(action: Action) -> ProcedureRule:
    if isinstance(action, OpenDoor):
        return ProcedureRule("open_door", _door_rule(action.door, "open"))
    if isinstance(action, CloseDoor):
        return ProcedureRule("close_door", _door_rule(action.door, "closed"))
    if isinstance(action, GoTo):
        return ProcedureRule("go_to", None)
    if isinstance(action, ReturnTo):
        return ProcedureRule("return_to", None)
    if isinstance(action, MeasureHere):
        return ProcedureRule("measure", None)
    if isinstance(action, QueryHistory):
        return ProcedureRule("query_history", None)
    if isinstance(action, ReportAction):
        return ProcedureRule("report", None)
    if isinstance(action, Halt):
        return ProcedureRule("halt", None)
    raise UnknownAction(f"no rule for {action!r}")


# -- interpreter events -------------------------------------------------------


@dataclass(frozen=True)
class TravelStarted:
    origin: str | None
    origin_position: float
    destination: str
    duration: float


@dataclass(frozen=True)
class Arrived:
    location: str
    position: float
    returning: bool = False


@dataclass(frozen=True)
class DoorSet:
    door: str
    status: str


@dataclass(frozen=True)
class Measured:
    report: Report


@dataclass(frozen=True)
class HistoryRead:
    report: Report


@dataclass(frozen=True)
class Spoke:
    text: str


@dataclass(frozen=True)
class PresupHit:
    payload: object


@dataclass(frozen=True)
class HaltedAt:
    position: float
    location: str | None
    toward: str | None


Event = TravelStarted | Arrived | DoorSet | Measured | HistoryRead | Spoke | PresupHit | HaltedAt


@dataclass(frozen=True)
class EvalResult:
    final_state: WorldState
    meta: tuple[MetaOutput, ...]
    predicted_reports: tuple[Report, ...]
    cost_seconds: float


@dataclass(frozen=True)
class ExecutionOutcome:
    events: tuple[Event, ...]
    reports: tuple[Report, ...]
    status: str  # "completed" | "interrupted"
    position: float
    location: str | None


# -- views: where primitive effects land --------------------------------------


class _EvalView:
    """Threads a private copy of the state vector; never touches the world."""

    def __init__(self, world: WorldModel, state: WorldState):
        self.world = world
        self.position = state.position
        self.location = state.location
        self.doors = dict(state.doors)
        self.clock = state.clock
        self.cost = 0.0

    def snapshot(self) -> WorldState:
        return WorldState(
            position=self.position,
            location=self.location,
            doors=tuple(sorted(self.doors.items())),
            clock=self.clock,
        )

    def door_status(self, door: str) -> str:
        if door not in self.doors:
            raise UnknownAction(f"status test on non-door {door!r}")
        return self.doors[door]

    def travel_leg(self, dest: str):
        duration = self.world.travel_cost(self.position, self.world.locations[dest])
        return self.location, self.position, duration

    def arrive(self, dest: str):
        duration = self.world.travel_cost(self.position, self.world.locations[dest])
        self.cost += duration
        self.clock += duration
        self.position = self.world.locations[dest]
        self.location = dest

    def arrive_partial(self, origin_position: float, dest: str, fraction: float):
        target = origin_position + (self.world.locations[dest] - origin_position) * fraction
        duration = self.world.travel_cost(self.position, target)
        self.cost += duration
        self.clock += duration
        self.position = target
        self.location = None

    def set_door(self, door: str, status: str):
        self.doors[door] = status
        self.cost += self.world.durations.door
        self.clock += self.world.durations.door

    def measure(self, sensor: str) -> Report:
        here = self.location or self.world.nearest_location(self.position)
        value = self.world.read_sensor(sensor, here)
        self.cost += self.world.durations.measure
        self.clock += self.world.durations.measure
        return Report(sensor=sensor, location=here, value=value, source="mobile")

    def history(self, sensor: str, location: str, t_seconds: float | None) -> Report:
        stamp = self.clock if t_seconds is None else t_seconds
        value = self.world.read_history(sensor, location, stamp)
        self.cost += self.world.durations.history_query
        self.clock += self.world.durations.history_query
        return Report(
            sensor=sensor, location=location, value=value, source="fixed",
            time_seconds=t_seconds,
        )


class _ExecView:
    """Sends primitive effects to the live world."""

    def __init__(self, world: WorldModel):
        self.world = world

    @property
    def position(self):
        return self.world.position

    @property
    def location(self):
        return self.world.position_name

    def door_status(self, door: str) -> str:
        if door not in self.world.doors:
            raise UnknownAction(f"status test on non-door {door!r}")
        return self.world.doors[door]

    def travel_leg(self, dest: str):
        duration = self.world.travel_cost(self.world.position, self.world.locations[dest])
        return self.world.position_name, self.world.position, duration

    def arrive(self, dest: str):
        self.world.apply(Move(dest))

    def arrive_partial(self, origin_position: float, dest: str, fraction: float):
        target = origin_position + (self.world.locations[dest] - origin_position) * fraction
        self.world.apply(Move(target))

    def set_door(self, door: str, status: str):
        self.world.apply(SetDoor(door, status))

    def measure(self, sensor: str) -> Report:
        here = self.world.position_name or self.world.nearest_location(self.world.position)
        value = self.world.read_sensor(sensor, here)
        self.world.apply(AdvanceClock(self.world.durations.measure))
        return Report(sensor=sensor, location=here, value=value, source="mobile")

    def history(self, sensor: str, location: str, t_seconds: float | None) -> Report:
        stamp = self.world.clock if t_seconds is None else t_seconds
        value = self.world.read_history(sensor, location, stamp)
        self.world.apply(AdvanceClock(self.world.durations.history_query))
        return Report(
            sensor=sensor, location=location, value=value, source="fixed",
            time_seconds=t_seconds,
        )


class NeverInterrupted:
    def interrupted(self) -> bool:
        return False

    def travel_fraction(self) -> float:
        return 0.0


# -- the walker ---------------------------------------------------------------


def _subst(value, env):
    if isinstance(value, Var):
        try:
            return env[value.name]
        except KeyError:
            raise UnknownAction(f"unbound script variable ${value.name}")
    return value


def _bind(action: Action, env: dict) -> Action:
    if isinstance(action, GoTo):
        return GoTo(_subst(action.location, env))
    if isinstance(action, OpenDoor):
        return OpenDoor(_subst(action.door, env))
    if isinstance(action, CloseDoor):
        return CloseDoor(_subst(action.door, env))
    return action


def _walk(node: Script, view, env: dict, control):
    """Generator over interpreter events; returns the run status."""
    if isinstance(node, Seq):
        for item in node.items:
            status = yield from _walk(item, view, env, control)
            if status != "completed":
                return status
        return "completed"

    if isinstance(node, Foreach):
        for value in node.values:
            status = yield from _walk(node.body, view, {**env, node.var: value}, control)
            if status != "completed":
                return status
        return "completed"

    if isinstance(node, IfThenElse):
        entity = _subst(node.test.entity, env)
        if node.test.attribute != "open_closed":
            raise UnknownAction(f"untestable attribute {node.test.attribute!r}")
        branch = node.then if view.door_status(entity) == node.test.value else node.otherwise
        return (yield from _walk(branch, view, env, control))

    if isinstance(node, PresupFailAction):
        yield PresupHit(node.payload)
        return "completed"

    if isinstance(node, ChangeStatus):
        if control.interrupted():
            yield HaltedAt(view.position, view.location, toward=None)
            return "interrupted"
        entity = _subst(node.entity, env)
        view.set_door(entity, node.value)
        yield DoorSet(entity, node.value)
        return "completed"

    if isinstance(node, Prim):
        action = _bind(node.action, env)
        rule = lookup_rule(action)
        if rule.body is not None:
            return (yield from _walk(rule.body, view, env, control))
        return (yield from _builtin(action, view, control))

    raise UnknownAction(f"not a script node: {node!r}")


def _builtin(action: Action, view, control):
    if isinstance(action, Halt):
        return "completed"

    if control.interrupted():
        yield HaltedAt(view.position, view.location, toward=None)
        return "interrupted"

    if isinstance(action, (GoTo, ReturnTo)):
        dest = action.location
        origin_name, origin_position, duration = view.travel_leg(dest)
        yield TravelStarted(origin_name, origin_position, dest, duration)
        if control.interrupted():
            fraction = min(max(control.travel_fraction(), 0.0), 1.0)
            view.arrive_partial(origin_position, dest, fraction)
            yield HaltedAt(view.position, view.location, toward=dest)
            return "interrupted"
        view.arrive(dest)
        yield Arrived(dest, view.position, returning=isinstance(action, ReturnTo))
        return "completed"

    if isinstance(action, MeasureHere):
        yield Measured(view.measure(action.sensor))
        return "completed"

    if isinstance(action, QueryHistory):
        yield HistoryRead(view.history(action.sensor, action.location, action.time_seconds))
        return "completed"

    if isinstance(action, ReportAction):
        yield Spoke(action.text)
        return "completed"

    raise UnknownAction(f"no builtin for {action!r}")


# -- entry points --------------------------------------------------------------


def evaluate(script: Script, world: WorldModel, state: WorldState | None = None) -> EvalResult:
    """Dry-run ``script`` against a threaded copy of the state vector."""
    view = _EvalView(world, state if state is not None else world.snapshot())
    meta: list[MetaOutput] = []
    reports: list[Report] = []
    for event in _drive(_walk(script, view, {}, NeverInterrupted())):
        if isinstance(event, PresupHit):
            meta.append(MetaOutput("evaluate", event.payload))
        elif isinstance(event, (Measured, HistoryRead)):
            reports.append(event.report)
    return EvalResult(
        final_state=view.snapshot(),
        meta=tuple(meta),
        predicted_reports=tuple(reports),
        cost_seconds=view.cost,
    )


def execute_steps(script: Script, world: WorldModel, control=None):
    """Generator of events while driving the live world; the caller owns
    pacing and may interrupt between yields."""
    return _walk(script, _ExecView(world), {}, control or NeverInterrupted())


def run(
    script: Script,
    mode: str,
    world: WorldModel,
    state: WorldState | None = None,
    control=None,
) -> EvalResult | ExecutionOutcome:
    if mode == EVALUATE:
        return evaluate(script, world, state)
    if mode != EXECUTE:
        raise ValueError(f"unknown mode {mode!r}")
    events: list[Event] = []
    reports: list[Report] = []
    gen = execute_steps(script, world, control)
    status = "completed"
    while True:
        try:
            event = next(gen)
        except StopIteration as stop:
            status = stop.value or "completed"
            break
        events.append(event)
        if isinstance(event, (Measured, HistoryRead)):
            reports.append(event.report)
    return ExecutionOutcome(
        events=tuple(events),
        reports=tuple(reports),
        status=status,
        position=world.position,
        location=world.position_name,
    )


def _drive(gen):
    """Exhaust a walker generator, yielding its events."""
    while True:
        try:
            yield next(gen)
        except StopIteration:
            return
