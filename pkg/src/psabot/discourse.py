"""Discourse level: normalization, context, and reference resolution.

``normalize`` collapses surface variants ("measure the pressure" and
"what is the pressure?" come out identical).  ``resolve`` grounds
noun phrases against the salience list and the world, producing one or
more candidate resolved forms, each paired with the meta-outputs its
construction generated.  Resolution never raises on referential
trouble: failures ride along as meta-outputs and the most recently
mentioned sortally appropriate antecedent is always tried first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .lingform import Clause, LinguisticForm, NounPhrase, TimeRef
from .meta import (
    IncorrectSizeOfSet,
    MetaOutput,
    ResolutionNote,
    UnderspecifiedDefinite,
    UnresolvedPronoun,
)
from .world import WorldModel

MAX_CANDIDATES = 24


# -- discourse frames -------------------------------------------------------


@dataclass(frozen=True)
class Goto:
    targets: tuple[NounPhrase, ...]
    verb_word: str | None = None


@dataclass(frozen=True)
class Measure:
    sensor: str
    location: NounPhrase | None
    time: TimeRef | None
    source: str  # "mobile" | "fixed"


@dataclass(frozen=True)
class SetDoor:
    door: NounPhrase
    goal: str  # "open" | "closed"


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class GoBack:
    pass


@dataclass(frozen=True)
class DoAgain:
    pass


@dataclass(frozen=True)
class DoSameFor:
    np: NounPhrase


@dataclass(frozen=True)
class BareNP:
    np: NounPhrase


@dataclass(frozen=True)
class Answer:
    polarity: str


Frame = Goto | Measure | SetDoor | Stop | GoBack | DoAgain | DoSameFor | BareNP | Answer


@dataclass(frozen=True)
class DiscourseForm:
    frames: tuple[Frame, ...]


def normalize(lf: LinguisticForm) -> DiscourseForm:
    """Map a parse onto canonical frames.  Total on grammar output."""
    if lf.kind == "answer":
        return DiscourseForm(frames=(Answer(lf.polarity),))
    frames: list[Frame] = []
    for clause in lf.clauses:
        frames.append(_normalize_clause(clause))
    return DiscourseForm(frames=tuple(frames))


def _normalize_clause(clause: Clause) -> Frame:
    if clause.verb == "go_to":
        np = clause.np
        targets = np.conjuncts if np.conjuncts else (np,)
        return Goto(targets=targets, verb_word=clause.verb_word)
    if clause.verb == "measure":
        return Measure(
            sensor=clause.sensor,
            location=clause.location,
            time=clause.time,
            source=clause.source,
        )
    if clause.verb in ("open", "close"):
        goal = "open" if clause.verb == "open" else "closed"
        return SetDoor(door=clause.np, goal=goal)
    if clause.verb == "stop":
        return Stop()
    if clause.verb == "go_back":
        return GoBack()
    if clause.verb == "do_again":
        return DoAgain()
    if clause.verb == "do_same_for":
        return DoSameFor(np=clause.np)
    if clause.verb == "frag":
        return BareNP(np=clause.np)
    raise ValueError(f"unknown clause verb {clause.verb!r}")


# -- resolved frames --------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    """Concrete entities filling one referring expression."""

    entities: tuple[str, ...]
    articles: tuple[bool, ...]  # realize each entity with "the"?
    source: str  # "default" | "explicit"
    note: str | None = None  # resolution note kind, None for plain names

    @staticmethod
    def one(entity: str, source: str, note: str | None, article: bool = False) -> "Binding":
        return Binding((entity,), (article,), source, note)


@dataclass(frozen=True)
class Unresolved:
    """A slot resolution could not fill; carries the failure to report."""

    reason: str  # "underspecified_definite" | "unresolved_pronoun" | "incorrect_size_of_set"
    sort: str | None = None
    expression: str = "it"
    claimed: int | None = None
    actual: int | None = None


Slot = Binding | Unresolved


@dataclass(frozen=True)
class RGoto:
    targets: Slot
    verb_word: str | None = None


@dataclass(frozen=True)
class RMeasure:
    sensor: str
    location: Slot | None  # None = at the itinerary stop / current position
    time: TimeRef | None
    source: str


@dataclass(frozen=True)
class RSetDoor:
    doors: Slot
    goal: str


@dataclass(frozen=True)
class RStop:
    pass


@dataclass(frozen=True)
class RGoBack:
    target: Slot


@dataclass(frozen=True)
class RAnswer:
    polarity: str


RFrame = RGoto | RMeasure | RSetDoor | RStop | RGoBack | RAnswer


@dataclass(frozen=True)
class ResolvedForm:
    frames: tuple[RFrame, ...]

    def slots(self):
        for frame in self.frames:
            if isinstance(frame, RGoto):
                yield frame.targets
            elif isinstance(frame, RMeasure):
                if frame.location is not None:
                    yield frame.location
            elif isinstance(frame, RSetDoor):
                yield frame.doors
            elif isinstance(frame, RGoBack):
                yield frame.target

    @property
    def fully_resolved(self) -> bool:
        return bool(self.frames) and all(isinstance(s, Binding) for s in self.slots())

    def bound_entities(self) -> list[str]:
        seen: list[str] = []
        for slot in self.slots():
            if isinstance(slot, Binding):
                for entity in slot.entities:
                    if entity not in seen:
                        seen.append(entity)
        return seen

    @property
    def is_command(self) -> bool:
        return any(isinstance(f, (RGoto, RMeasure, RSetDoor)) for f in self.frames)


# -- dialogue context -------------------------------------------------------


@dataclass(frozen=True)
class SalienceEntry:
    entity: str
    sort: str
    turn: int


@dataclass(frozen=True)
class PendingConfirm:
    script: object  # compiled Script, stored verbatim
    paraphrase: str
    resolved: ResolvedForm


@dataclass(frozen=True)
class PendingClarify:
    frame: Frame  # the held, unfilled discourse frame
    slot: str  # name of the missing slot ("door", "location", ...)
    sort: str  # sort a filler must have


@dataclass
class DialogueContext:
    salience: list[SalienceEntry] = field(default_factory=list)
    last_command: ResolvedForm | None = None
    pending: PendingConfirm | PendingClarify | None = None
    visited_trail: list[str] = field(default_factory=list)
    turn: int = 0

    def salient_entities(self) -> list[str]:
        return [entry.entity for entry in self.salience]


@dataclass(frozen=True)
class TurnOutcome:
    kind: str  # executed | confirmed-pending | clarification-pending | informed | rejected
    pending: PendingConfirm | PendingClarify | None = None
    visited: tuple[str, ...] = ()


def update_context(ctx: DialogueContext, resolved: ResolvedForm | None, outcome: TurnOutcome) -> DialogueContext:
    """Apply one turn's effect to the context (single-writer mutation)."""
    ctx.turn += 1
    if resolved is not None and outcome.kind != "rejected":
        for entity in resolved.bound_entities():
            ctx.salience = [e for e in ctx.salience if e.entity != entity]
            # sort is stamped by the resolver's world; re-derive lazily
            ctx.salience.insert(0, SalienceEntry(entity, _SORT_CACHE.get(entity, "location"), ctx.turn))
    if (
        resolved is not None
        and resolved.is_command
        and outcome.kind in ("executed", "confirmed-pending")
    ):
        ctx.last_command = resolved
    if outcome.kind in ("confirmed-pending", "clarification-pending"):
        ctx.pending = outcome.pending
    else:
        ctx.pending = None
    for location in outcome.visited:
        if not ctx.visited_trail or ctx.visited_trail[-1] != location:
            ctx.visited_trail.append(location)
    return ctx


# update_context is deliberately world-free; the resolver refreshes this
# map so salience entries can carry sorts without threading the world in.
_SORT_CACHE: dict[str, str] = {}


# -- resolution -------------------------------------------------------------


def resolve(
    df: DiscourseForm, ctx: DialogueContext, world: WorldModel
) -> list[tuple[ResolvedForm, list[MetaOutput]]]:
    """All candidate groundings of ``df``, best-first.

    Ordering follows the default strategy: the most recently mentioned
    sortally appropriate antecedent comes first, and an unresolved
    candidate is appended whenever a referring expression had no viable
    antecedent or more than one.
    """
    _SORT_CACHE.update(world.sorts)
    frames = df.frames

    if len(frames) == 1:
        frame = frames[0]
        if isinstance(frame, Answer):
            return [(ResolvedForm(frames=(RAnswer(frame.polarity),)), [])]
        if isinstance(frame, DoAgain):
            return _resolve_do_again(ctx)
        if isinstance(frame, DoSameFor):
            return _resolve_do_same(frame, ctx, world)
        if isinstance(frame, BareNP):
            return _resolve_bare_np(frame, ctx, world)

    candidates = _expand(list(frames), 0, ctx.salient_entities(), [], [], ctx, world)
    return _dedupe(candidates)[:MAX_CANDIDATES]


def _dedupe(candidates):
    seen = set()
    out = []
    for form, metas in candidates:
        key = form.frames
        if key not in seen:
            seen.add(key)
            out.append((form, metas))
    return out


def _unresolved_stub(expression: str) -> list[tuple[ResolvedForm, list[MetaOutput]]]:
    meta = MetaOutput("resolve", UnresolvedPronoun(expression))
    return [(ResolvedForm(frames=()), [meta])]


def _resolve_do_again(ctx: DialogueContext):
    if ctx.last_command is None:
        return _unresolved_stub("that")
    note = MetaOutput(
        "resolve",
        ResolutionNote("ellipsis_filled", tuple(ctx.last_command.bound_entities()), "default"),
    )
    return [(ctx.last_command, [note])]


def _command_location_slot(form: ResolvedForm) -> str | None:
    """Which slot of a stored command counts as 'the location list'."""
    for frame in form.frames:
        if isinstance(frame, RGoto):
            return "goto"
    for frame in form.frames:
        if isinstance(frame, RMeasure):
            return "measure"
    for frame in form.frames:
        if isinstance(frame, RSetDoor):
            return "door"
    return None


def _substitute_locations(
    form: ResolvedForm, binding: Binding, world: WorldModel
) -> ResolvedForm | None:
    """Swap the command's location list for ``binding``; None when the
    binding's sort cannot occupy the slot (a deck is no door)."""
    slot = _command_location_slot(form)
    if slot == "door" and not all(world.sorts.get(e) == "door" for e in binding.entities):
        return None
    new_frames = []
    done = False
    for frame in form.frames:
        if not done and slot == "goto" and isinstance(frame, RGoto):
            new_frames.append(replace(frame, targets=binding))
            done = True
        elif not done and slot == "measure" and isinstance(frame, RMeasure):
            new_frames.append(replace(frame, location=binding))
            done = True
        elif not done and slot == "door" and isinstance(frame, RSetDoor):
            new_frames.append(replace(frame, doors=binding))
            done = True
        else:
            new_frames.append(frame)
    return ResolvedForm(frames=tuple(new_frames))


def _resolve_do_same(frame: DoSameFor, ctx: DialogueContext, world: WorldModel):
    if ctx.last_command is None:
        return _unresolved_stub("the same")
    candidates = []
    for slot, metas in _np_options(frame.np, None, ctx.salient_entities(), world):
        if isinstance(slot, Unresolved):
            candidates.append((ResolvedForm(frames=()), metas + [_failure_meta(slot)]))
            continue
        binding = replace(slot, note="ellipsis_filled")
        new_form = _substitute_locations(ctx.last_command, binding, world)
        if new_form is None:
            continue
        note = MetaOutput(
            "resolve", ResolutionNote("ellipsis_filled", binding.entities, binding.source)
        )
        candidates.append((new_form, [note]))
    if not candidates:
        return _unresolved_stub("the same")
    return _dedupe(candidates)[:MAX_CANDIDATES]


def _resolve_bare_np(frame: BareNP, ctx: DialogueContext, world: WorldModel):
    np = frame.np
    pending = ctx.pending
    salient = ctx.salient_entities()

    if isinstance(pending, PendingClarify):
        candidates = []
        for slot, metas in _np_options(np, pending.sort, salient, world):
            if isinstance(slot, Unresolved):
                continue
            if not all(world.sorts.get(e) == pending.sort for e in slot.entities):
                continue
            binding = replace(slot, source="explicit", note="ellipsis_filled")
            held = pending.frame
            rframe: RFrame
            if isinstance(held, SetDoor):
                rframe = RSetDoor(doors=binding, goal=held.goal)
            elif isinstance(held, Measure):
                rframe = RMeasure(held.sensor, binding, held.time, held.source)
            elif isinstance(held, Goto):
                rframe = RGoto(targets=binding, verb_word=held.verb_word)
            else:
                continue
            note = MetaOutput(
                "resolve", ResolutionNote("ellipsis_filled", binding.entities, "explicit")
            )
            candidates.append((ResolvedForm(frames=(rframe,)), [note]))
        if candidates:
            return _dedupe(candidates)[:MAX_CANDIDATES]

    if ctx.last_command is not None:
        candidates = []
        for slot, metas in _np_options(np, None, salient, world):
            if isinstance(slot, Unresolved):
                candidates.append((ResolvedForm(frames=()), metas + [_failure_meta(slot)]))
                continue
            binding = replace(slot, note="ellipsis_filled")
            new_form = _substitute_locations(ctx.last_command, binding, world)
            if new_form is None:
                continue
            note = MetaOutput(
                "resolve", ResolutionNote("ellipsis_filled", binding.entities, binding.source)
            )
            candidates.append((new_form, [note]))
        if candidates:
            return _dedupe(candidates)[:MAX_CANDIDATES]

    return _unresolved_stub(np.text or "it")


def _failure_meta(slot: Unresolved) -> MetaOutput:
    if slot.reason == "underspecified_definite":
        return MetaOutput("resolve", UnderspecifiedDefinite(slot.sort or "location"))
    if slot.reason == "incorrect_size_of_set":
        return MetaOutput("resolve", IncorrectSizeOfSet(slot.claimed, slot.actual))
    return MetaOutput("resolve", UnresolvedPronoun(slot.expression))


def _np_options(
    np: NounPhrase, slot_sort: str | None, salient: list[str], world: WorldModel
) -> list[tuple[Slot, list[MetaOutput]]]:
    """Ways to ground one NP, preference order.  Each option carries the
    notes/failures that choosing it would emit."""

    def note_meta(binding: Binding) -> list[MetaOutput]:
        if binding.note is None:
            return []
        return [MetaOutput("resolve", ResolutionNote(binding.note, binding.entities, binding.source))]

    if np.variant == "name":
        binding = Binding.one(np.entity, "explicit", None, article=np.article)
        return [(binding, [])]

    if np.variant == "pronoun":
        viable = [
            entity
            for entity in salient
            if entity in world.sorts and (slot_sort is None or world.sorts[entity] == slot_sort)
        ]
        options: list[tuple[Slot, list[MetaOutput]]] = []
        for entity in viable:
            binding = Binding.one(entity, "default", "pronoun_bound")
            options.append((binding, note_meta(binding)))
        if len(viable) != 1:
            unresolved = Unresolved("unresolved_pronoun", expression=np.text or "it")
            options.append((unresolved, [_failure_meta(unresolved)]))
        return options

    if np.variant == "definite":
        extension = world.extension(np.sort)
        if len(extension) == 1:
            binding = Binding.one(extension[0], "explicit", "definite_bound", article=True)
            return [(binding, note_meta(binding))]
        options = []
        for entity in salient:
            if world.sorts.get(entity) == np.sort:
                binding = Binding.one(entity, "default", "definite_bound", article=True)
                options.append((binding, note_meta(binding)))
        unresolved = Unresolved("underspecified_definite", sort=np.sort)
        options.append((unresolved, [_failure_meta(unresolved)]))
        return options

    if np.variant == "quantified":
        extension = world.extension(np.sort)
        if np.claimed == len(extension) and extension:
            binding = Binding(
                entities=tuple(extension),
                articles=tuple(False for _ in extension),
                source="explicit",
                note="set_expanded",
            )
            return [(binding, note_meta(binding))]
        unresolved = Unresolved(
            "incorrect_size_of_set", sort=np.sort, claimed=np.claimed, actual=len(extension)
        )
        return [(unresolved, [_failure_meta(unresolved)])]

    if np.variant == "conj":
        entities: list[str] = []
        articles: list[bool] = []
        metas: list[MetaOutput] = []
        source = "explicit"
        for part in np.conjuncts:
            part_options = _np_options(part, slot_sort, salient, world)
            slot, part_metas = part_options[0]
            if isinstance(slot, Unresolved):
                return [(slot, [_failure_meta(slot)])]
            entities.extend(slot.entities)
            articles.extend(slot.articles)
            metas.extend(part_metas)
            if slot.source == "default":
                source = "default"
        binding = Binding(tuple(entities), tuple(articles), source, note=None)
        return [(binding, metas)]

    raise ValueError(f"unknown NP variant {np.variant!r}")


def _expand(frames, index, salience_now, acc_frames, acc_metas, ctx, world):
    """Depth-first product over per-slot options, threading working
    salience so later pronouns can pick up earlier mentions."""
    if index == len(frames):
        return [(ResolvedForm(frames=tuple(acc_frames)), list(acc_metas))]

    frame = frames[index]
    results = []

    def descend(rframe, slot, metas):
        new_salience = salience_now
        if isinstance(slot, Binding):
            pushed = [e for e in slot.entities]
            new_salience = pushed + [e for e in salience_now if e not in pushed]
        results.extend(
            _expand(frames, index + 1, new_salience, acc_frames + [rframe], acc_metas + metas, ctx, world)
        )

    if isinstance(frame, Goto):
        np = frame.targets[0] if len(frame.targets) == 1 else NounPhrase(
            "conj", conjuncts=tuple(frame.targets)
        )
        for slot, metas in _np_options(np, None, salience_now, world):
            descend(RGoto(targets=slot, verb_word=frame.verb_word), slot, metas)
    elif isinstance(frame, Measure):
        if frame.location is not None:
            for slot, metas in _np_options(frame.location, None, salience_now, world):
                descend(RMeasure(frame.sensor, slot, frame.time, frame.source), slot, metas)
        elif frame.source == "fixed" or frame.time is not None:
            # A past/fixed reading needs a concrete place; default to the
            # most recently mentioned one.
            options: list[tuple[Slot, list[MetaOutput]]] = []
            for entity in salience_now:
                if entity in world.sorts:
                    binding = Binding.one(entity, "default", "default_location_filled", article=True)
                    options.append(
                        (binding, [MetaOutput("resolve", ResolutionNote(
                            "default_location_filled", binding.entities, "default"))])
                    )
            unresolved = Unresolved("underspecified_definite", sort="location")
            options.append((unresolved, [_failure_meta(unresolved)]))
            for slot, metas in options:
                descend(RMeasure(frame.sensor, slot, frame.time, frame.source), slot, metas)
        else:
            descend(RMeasure(frame.sensor, None, frame.time, frame.source), None, [])
    elif isinstance(frame, SetDoor):
        for slot, metas in _np_options(frame.door, "door", salience_now, world):
            descend(RSetDoor(doors=slot, goal=frame.goal), slot, metas)
    elif isinstance(frame, Stop):
        descend(RStop(), None, [])
    elif isinstance(frame, GoBack):
        target = _go_back_target(ctx, world)
        if target is None:
            slot = Unresolved("underspecified_definite", sort="location")
            descend(RGoBack(target=slot), slot, [_failure_meta(slot)])
        else:
            descend(RGoBack(target=Binding.one(target, "explicit", None)), None, [])
    elif isinstance(frame, (BareNP, DoSameFor, DoAgain, Answer)):
        # Only reachable in conjunction with other frames, which the
        # grammar does not produce; treat as unresolvable.
        slot = Unresolved("unresolved_pronoun", expression="that")
        descend(RGoBack(target=slot), slot, [_failure_meta(slot)])
    else:
        raise ValueError(f"unknown frame {frame!r}")

    return results


def _go_back_target(ctx: DialogueContext, world: WorldModel) -> str | None:
    """Last fully visited location that differs from where the robot is."""
    position = world.position
    for name in reversed(ctx.visited_trail):
        if abs(world.locations[name] - position) > 1e-9:
            return name
    return None
