"""Executable scripts: AST, compiler, and itinerary optimizer.

The target language is a small imperative subset (sequences, foreach
over a value list, a conditional on world status, primitive actions).
Compilation gives quantified location sets wide scope: a goto over a
set followed by conjoined actions becomes one foreach whose body
contains the goto and all of those actions.  The narrow scoping (loop
over gotos only, actions once at the end) is documented as incorrect
and never generated.

Optimization is exhaustive: location lists here are never longer than
a handful, so every permutation is costed through the evaluator and
the cheapest kept, preferring the user's own order on ties.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable

from .discourse import ResolvedForm, RGoBack, RGoto, RMeasure, RSetDoor, RStop
from .meta import Cost, MetaOutput


class UncompilableForm(ValueError):
    pass


MAX_PERMUTED = 7


@dataclass(frozen=True)
class Var:
    name: str


# -- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class GoTo:
    location: str | Var


@dataclass(frozen=True)
class MeasureHere:
    sensor: str


@dataclass(frozen=True)
class QueryHistory:
    sensor: str
    location: str
    time_seconds: float | None  # None = at the clock when executed


@dataclass(frozen=True)
class OpenDoor:
    door: str | Var


@dataclass(frozen=True)
class CloseDoor:
    door: str | Var


@dataclass(frozen=True)
class Report:
    text: str


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class ReturnTo:
    location: str


Action = GoTo | MeasureHere | QueryHistory | OpenDoor | CloseDoor | Report | Halt | ReturnTo


# -- script nodes -----------------------------------------------------------


@dataclass(frozen=True)
class StatusTest:
    entity: str
    attribute: str
    value: str


@dataclass(frozen=True)
class Seq:
    items: tuple["Script", ...]


@dataclass(frozen=True)
class Foreach:
    var: str
    values: tuple[str, ...]
    body: "Script"


@dataclass(frozen=True)
class IfThenElse:
    test: StatusTest
    then: "Script"
    otherwise: "Script"


@dataclass(frozen=True)
class Prim:
    action: Action


@dataclass(frozen=True)
class PresupFailAction:
    payload: object  # a meta.PresupFailure payload


@dataclass(frozen=True)
class ChangeStatus:
    entity: str
    attribute: str
    value: str


Script = Seq | Foreach | IfThenElse | Prim | PresupFailAction | ChangeStatus


# -- compiler ---------------------------------------------------------------


def compile_form(rf: ResolvedForm) -> Script:
    """Compile a fully resolved form.  Deterministic and total on its
    precondition; any remaining unresolved slot is the caller's bug."""
    if not rf.fully_resolved:
        raise UncompilableForm("form has unresolved slots or no frames")

    top: list[Script] = []
    index = 0
    frames = rf.frames
    while index < len(frames):
        frame = frames[index]
        if isinstance(frame, RGoto):
            actions: list[Script] = []
            index += 1
            while index < len(frames):
                nxt = frames[index]
                if isinstance(nxt, RMeasure) and nxt.location is None and nxt.source == "mobile":
                    actions.append(Prim(MeasureHere(nxt.sensor)))
                    index += 1
                elif isinstance(nxt, RSetDoor):
                    actions.extend(_door_prims(nxt))
                    index += 1
                else:
                    break
            top.append(_itinerary(frame.targets.entities, actions))
            continue
        if isinstance(frame, RMeasure):
            sub = _measure_script(frame)
            if isinstance(sub, Seq):
                top.extend(sub.items)
            else:
                top.append(sub)
        elif isinstance(frame, RSetDoor):
            if len(frame.doors.entities) > 1:
                door_var = Var("d")
                body = Prim(
                    OpenDoor(door_var) if frame.goal == "open" else CloseDoor(door_var)
                )
                top.append(Foreach("d", frame.doors.entities, body))
            else:
                top.extend(_door_prims(frame))
        elif isinstance(frame, RStop):
            top.append(Prim(Halt()))
        elif isinstance(frame, RGoBack):
            top.append(Prim(ReturnTo(frame.target.entities[0])))
        else:
            raise UncompilableForm(f"frame {frame!r} does not compile")
        index += 1
    return Seq(items=tuple(top))


def _itinerary(targets: tuple[str, ...], actions: list[Script]) -> Script:
    if len(targets) == 1:
        return Seq(items=tuple([Prim(GoTo(targets[0]))] + actions))
    var = Var("x")
    body = Seq(items=tuple([Prim(GoTo(var))] + actions))
    return Foreach("x", targets, body)


def _measure_script(frame: RMeasure) -> Script:
    if frame.source == "fixed":
        time_seconds = frame.time.to_seconds() if frame.time is not None else None
        prims = tuple(
            Prim(QueryHistory(frame.sensor, loc, time_seconds))
            for loc in frame.location.entities
        )
        return Seq(items=prims)
    if frame.location is None:
        return Seq(items=(Prim(MeasureHere(frame.sensor)),))
    # A mobile reading at named places: travel there and measure.
    return _itinerary(frame.location.entities, [Prim(MeasureHere(frame.sensor))])


def _door_prims(frame: RSetDoor) -> list[Script]:
    action = OpenDoor if frame.goal == "open" else CloseDoor
    return [Prim(action(door)) for door in frame.doors.entities]


# -- optimizer --------------------------------------------------------------


def itinerary_loops(node: Script, found: list[Foreach] | None = None) -> list[Foreach]:
    """Foreach nodes that drive the robot (contain a goto)."""
    if found is None:
        found = []
    if isinstance(node, Foreach) and _contains_goto(node.body):
        found.append(node)
    if isinstance(node, Seq):
        for item in node.items:
            itinerary_loops(item, found)
    elif isinstance(node, Foreach):
        pass  # nested foreach-over-gotos not generated by the compiler
    elif isinstance(node, IfThenElse):
        itinerary_loops(node.then, found)
        itinerary_loops(node.otherwise, found)
    return found


def _contains_goto(node: Script) -> bool:
    if isinstance(node, Prim):
        return isinstance(node.action, GoTo)
    if isinstance(node, Seq):
        return any(_contains_goto(item) for item in node.items)
    if isinstance(node, Foreach):
        return _contains_goto(node.body)
    if isinstance(node, IfThenElse):
        return _contains_goto(node.then) or _contains_goto(node.otherwise)
    return False


def _with_values(node: Script, target: Foreach, values: tuple[str, ...]) -> Script:
    if node is target:
        return replace(node, values=values)
    if isinstance(node, Seq):
        return Seq(items=tuple(_with_values(item, target, values) for item in node.items))
    if isinstance(node, Foreach):
        return replace(node, body=_with_values(node.body, target, values))
    if isinstance(node, IfThenElse):
        return replace(
            node,
            then=_with_values(node.then, target, values),
            otherwise=_with_values(node.otherwise, target, values),
        )
    return node


def optimize(script: Script, evaluate: Callable[[Script], float]) -> tuple[Script, list[MetaOutput]]:
    """Reorder the itinerary (if any) to minimize evaluated cost.

    ``evaluate`` maps a script to its cost in seconds from the intended
    start state.  Returns the cheapest permutation of the single
    itinerary foreach, or the script unchanged when there is nothing to
    reorder; the winning cost rides along as a meta-output.
    """
    loops = itinerary_loops(script)
    if len(loops) != 1 or len(loops[0].values) < 2 or len(loops[0].values) > MAX_PERMUTED:
        cost = evaluate(script)
        return script, [MetaOutput("optimize", Cost(cost))]

    loop = loops[0]
    best_script = script
    best_cost = None
    for order in itertools.permutations(loop.values):
        candidate = _with_values(script, loop, order)
        cost = evaluate(candidate)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_script = candidate
    return best_script, [MetaOutput("optimize", Cost(best_cost))]


# -- pretty printer ---------------------------------------------------------


def pretty(script: Script, indent: int = 0) -> str:
    """Render in the trace surface syntax (foreach x (a b) ... end)."""
    pad = "  " * indent
    if isinstance(script, Seq):
        return "\n".join(pretty(item, indent) for item in script.items) or f"{pad}(empty)"
    if isinstance(script, Foreach):
        values = " ".join(script.values)
        body = pretty(script.body, indent + 1)
        return f"{pad}foreach {script.var} ({values})\n{body}\n{pad}end"
    if isinstance(script, IfThenElse):
        test = f"status({script.test.entity}, {script.test.attribute}, {script.test.value})"
        return (
            f"{pad}if_then_else({test},\n"
            f"{pretty(script.then, indent + 1)},\n"
            f"{pretty(script.otherwise, indent + 1)})"
        )
    if isinstance(script, Prim):
        return pad + _action_text(script.action)
    if isinstance(script, PresupFailAction):
        return f"{pad}presupposition_failure({script.payload})"
    if isinstance(script, ChangeStatus):
        return f"{pad}change_status({script.entity}, {script.attribute}, {script.value})"
    raise TypeError(f"not a script node: {script!r}")


def _action_text(action: Action) -> str:
    if isinstance(action, GoTo):
        target = f"${action.location.name}" if isinstance(action.location, Var) else action.location
        return f"go_to {target}"
    if isinstance(action, MeasureHere):
        return f"measure {action.sensor}"
    if isinstance(action, QueryHistory):
        stamp = "now" if action.time_seconds is None else _clock_text(action.time_seconds)
        return f"query_history {action.sensor} {action.location} {stamp}"
    if isinstance(action, OpenDoor):
        return f"open_door {_var_text(action.door)}"
    if isinstance(action, CloseDoor):
        return f"close_door {_var_text(action.door)}"
    if isinstance(action, Report):
        return f'report "{action.text}"'
    if isinstance(action, Halt):
        return "halt"
    if isinstance(action, ReturnTo):
        return f"return_to {action.location}"
    raise TypeError(f"not an action: {action!r}")


def _var_text(value: str | Var) -> str:
    return f"${value.name}" if isinstance(value, Var) else value


def _clock_text(seconds: float) -> str:
    total = int(seconds) % 86400
    return f"{total // 3600:02d}:{(total % 3600) // 60:02d}"
