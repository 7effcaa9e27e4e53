"""Dialogue manager: pipeline orchestration, ranking, moves, wording.

A turn runs parse -> misrecognition patterns -> normalize -> resolve
(all candidates) -> compile -> optimize -> evaluate, merging each
stage's meta-outputs into the candidate's bag.  Selection prefers the
candidate whose worst meta-output is least severe, with one twist: an
already-open/already-closed failure that showed up on a binding the
resolver picked *by default* demotes that candidate below a
clarification alternative, so the system asks rather than quibbling
about a door the user never named.

Generation is template-only; the golden transcripts demand byte-exact
strings.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import interpreter
from .discourse import (
    Answer,
    BareNP,
    Binding,
    DialogueContext,
    DiscourseForm,
    Frame,
    Goto,
    Measure,
    PendingClarify,
    PendingConfirm,
    ResolvedForm,
    RGoBack,
    RGoto,
    RMeasure,
    RSetDoor,
    RStop,
    SetDoor,
    TurnOutcome,
    Unresolved,
    normalize,
    resolve,
    update_context,
)
from .lingform import (
    Lexicon,
    LinguisticForm,
    OutOfGrammar,
    detect_dubious,
    parse,
    tokenize,
)
from .meta import (
    AlreadyInState,
    DEMOTED_ALREADY_IN_STATE,
    DubiousLF,
    IncorrectSizeOfSet,
    MetaOutput,
    ResolutionNote,
    UnderspecifiedDefinite,
    UnresolvedPronoun,
)
from .script import Script, UncompilableForm, compile_form, itinerary_loops, optimize, pretty
from .world import NoHistory, Report, WorldModel

MISHEARD = "I'm sorry, I think I misheard you."

_UNITS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"]
_TEENS = ["ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
          "seventeen", "eighteen", "nineteen"]
_TENS = {20: "twenty", 30: "thirty", 40: "forty", 50: "fifty"}


def number_words(n: int) -> str:
    if 0 <= n <= 9:
        return _UNITS[n]
    if 10 <= n <= 19:
        return _TEENS[n - 10]
    if 20 <= n <= 59:
        tens, unit = divmod(n, 10)
        word = _TENS[tens * 10]
        return word if unit == 0 else f"{word} {_UNITS[unit]}"
    return str(n)


def time_words(seconds: float) -> str:
    total = int(seconds) % 86400
    hour, minute = total // 3600, (total % 3600) // 60
    if minute == 0:
        return f"{number_words(hour)} hundred"
    if minute < 10:
        return f"{number_words(hour)} oh {number_words(minute)}"
    return f"{number_words(hour)} {number_words(minute)}"


# -- dialogue moves -----------------------------------------------------------


@dataclass(frozen=True)
class ExecuteNow:
    script: Script
    resolved: ResolvedForm
    realized_meta: tuple[MetaOutput, ...] = ()


@dataclass(frozen=True)
class ConfirmThenExecute:
    script: Script
    paraphrase: str
    resolved: ResolvedForm
    realized_meta: tuple[MetaOutput, ...] = ()


@dataclass(frozen=True)
class Clarify:
    question: str
    slot: str
    sort: str | None
    held: Frame | None
    realized_meta: tuple[MetaOutput, ...] = ()


@dataclass(frozen=True)
class Inform:
    text: str
    realized_meta: tuple[MetaOutput, ...] = ()


@dataclass(frozen=True)
class RejectMisheard:
    text: str = MISHEARD
    realized_meta: tuple[MetaOutput, ...] = ()


@dataclass(frozen=True)
class ReportMove:
    reports: tuple[Report, ...]
    realized_meta: tuple[MetaOutput, ...] = ()


DialogueMove = ExecuteNow | ConfirmThenExecute | Clarify | Inform | RejectMisheard | ReportMove


@dataclass(frozen=True)
class Interpretation:
    resolved: ResolvedForm
    discourse: DiscourseForm | None
    script: Script | None
    metas: tuple[MetaOutput, ...]
    cost: float | None = None
    eval_result: interpreter.EvalResult | None = None
    error: str | None = None


@dataclass(frozen=True)
class TraceRecord:
    stage: str
    summary: str
    meta: tuple[str, ...] = ()


@dataclass(frozen=True)
class TurnPlan:
    """Everything the session engine needs to act one turn out."""

    move: DialogueMove
    text: str | None  # system utterance to speak immediately
    script: Script | None  # script to execute now (ExecuteNow / answered yes)
    resolved: ResolvedForm | None
    outcome_kind: str
    pending: PendingConfirm | PendingClarify | None
    trace: tuple[TraceRecord, ...]


# -- selection ----------------------------------------------------------------


def _default_bound_entities(interp: Interpretation) -> set[str]:
    defaults: set[str] = set()
    for m in interp.metas:
        if isinstance(m.payload, ResolutionNote) and m.payload.source == "default":
            defaults.update(m.payload.entities)
    return defaults


def effective_severity(interp: Interpretation) -> int:
    """Worst meta-output severity, demoting AlreadyInState failures that
    arose on defaulted bindings past the clarification failures."""
    defaults = _default_bound_entities(interp)
    worst = 0
    for m in interp.metas:
        rank = m.severity
        if isinstance(m.payload, AlreadyInState) and m.payload.entity in defaults:
            rank = DEMOTED_ALREADY_IN_STATE
        worst = max(worst, rank)
    return worst


def select(interps: list[Interpretation]) -> Interpretation:
    """Most felicitous interpretation: least severe worst meta-output,
    ties broken by resolution order (recency comes first already)."""
    if not interps:
        raise ValueError("no interpretations to select from")
    return min(interps, key=effective_severity)


def _most_severe(interp: Interpretation) -> MetaOutput | None:
    failures = [m for m in interp.metas if m.is_failure]
    if not failures:
        return None
    return max(failures, key=lambda m: m.severity)


# -- generation ---------------------------------------------------------------


class Realizer:
    """World-aware template renderer."""

    def __init__(self, world: WorldModel):
        self.world = world

    def entity(self, name: str, article: bool) -> str:
        display = self.world.display(name)
        return f"the {display}" if article else display

    def listing(self, items: list[str]) -> str:
        if len(items) == 1:
            return items[0]
        return ", ".join(items[:-1]) + " and then " + items[-1]

    def value(self, sensor: str, value: float) -> str:
        unit = self.world.sensors[sensor].unit
        if unit == "percent":
            if value == int(value):
                return f"{number_words(int(value))} percent"
            return f"{value:g} percent"
        if unit == "celsius":
            return f"{value:.1f} degrees Celsius"
        if unit == "kilopascal":
            return f"{value:g} kilopascals"
        return f"{value:g} {unit}".strip()

    def report(self, report: Report) -> str:
        phrase = self.world.sensors[report.sensor].report_phrase
        place = f"the {self.world.display(report.location)}"
        value = self.value(report.sensor, report.value)
        if report.source == "fixed":
            if report.time_seconds is not None:
                when = time_words(report.time_seconds)
                return f"According to the fixed sensors, at {when} the {phrase} at {place} was {value}."
            return f"According to the fixed sensors, the {phrase} at {place} is {value}."
        return f"The {phrase} at {place} is {value}."

    def paraphrase(self, resolved: ResolvedForm) -> str:
        segments = []
        for frame in resolved.frames:
            segments.extend(self._frame_segments(frame))
        return "I will " + " and I will ".join(segments) + ", okay?"

    def _frame_segments(self, frame) -> list[str]:
        if isinstance(frame, RGoto):
            return [self._travel_segment(frame.targets, frame.verb_word)]
        if isinstance(frame, RMeasure):
            phrase = self.world.sensors[frame.sensor].confirm_phrase
            if frame.source == "fixed":
                return [f"check the {phrase} records"]
            segments = []
            if frame.location is not None:
                segments.append(self._travel_segment(frame.location, None))
            segments.append(f"measure {phrase}")
            return segments
        if isinstance(frame, RSetDoor):
            verb = "open" if frame.goal == "open" else "close"
            items = [
                self.entity(e, a)
                for e, a in zip(frame.doors.entities, frame.doors.articles)
            ]
            return [f"{verb} {self.listing(items)}"]
        if isinstance(frame, RGoBack):
            return [f"return to {self.entity(frame.target.entities[0], False)}"]
        if isinstance(frame, RStop):
            return ["stop"]
        return []

    def _travel_segment(self, binding, verb_word) -> str:
        items = [self.entity(e, a) for e, a in zip(binding.entities, binding.articles)]
        verb = "go" if (
            verb_word == "go" and len(binding.entities) == 1 and binding.note is None
        ) else "move"
        return f"{verb} to {self.listing(items)}"

    def clarification(self, payload) -> str:
        if isinstance(payload, UnderspecifiedDefinite):
            if payload.sort == "location":
                return "Where do you mean?"
            return f"Which {payload.sort} do you mean?"
        if isinstance(payload, UnresolvedPronoun):
            return f"What do you mean by '{payload.expression}'?"
        return "What do you mean?"

    def already(self, payload: AlreadyInState) -> str:
        state = "open" if payload.value == "open" else "closed"
        return f"The {self.world.display(payload.entity)} is already {state}."

    def wrong_size(self, payload: IncorrectSizeOfSet) -> str:
        return f"There are in fact {number_words(payload.actual)} of them."

    def no_history(self) -> str:
        return "I have no recorded reading for that time."


def realize(move: DialogueMove, realizer: Realizer) -> str | None:
    """Surface text of a move; None when the move speaks through
    execution (reports) rather than up front."""
    if isinstance(move, ConfirmThenExecute):
        return move.paraphrase
    if isinstance(move, Clarify):
        return move.question
    if isinstance(move, Inform):
        return move.text
    if isinstance(move, RejectMisheard):
        return move.text
    if isinstance(move, ReportMove):
        return " ".join(realizer.report(r) for r in move.reports)
    return None


# -- the manager --------------------------------------------------------------


class DialogueManager:
    def __init__(self, world: WorldModel):
        self.world = world
        self.lexicon = Lexicon(world)
        self.realizer = Realizer(world)
        self.ctx = DialogueContext()
        if world.position_name:
            # the start position counts as fully occupied for "go back"
            self.ctx.visited_trail.append(world.position_name)

    # .. pipeline ..

    def interpret_turn(self, raw: str) -> tuple[list[Interpretation], list[TraceRecord]]:
        """Full pipeline on one utterance; answers are not handled here."""
        trace: list[TraceRecord] = []
        utt = tokenize(raw)
        try:
            lf = parse(utt, self.lexicon)
        except OutOfGrammar as exc:
            meta = MetaOutput("lingform", DubiousLF("out_of_grammar"))
            trace.append(TraceRecord("parse", f"out of grammar ({exc})", (meta.describe(),)))
            interp = Interpretation(
                resolved=ResolvedForm(frames=()), discourse=None, script=None,
                metas=(meta,), error="out_of_grammar",
            )
            return [interp], trace
        dubious = detect_dubious(lf)
        trace.append(TraceRecord("parse", _lf_text(lf), tuple(m.describe() for m in dubious)))
        df = normalize(lf)
        trace.append(TraceRecord("normalize", _df_text(df)))
        interps = self._interpret_frames(df, dubious, trace)
        return interps, trace

    def _interpret_frames(
        self, df: DiscourseForm, dubious: list[MetaOutput], trace: list[TraceRecord]
    ) -> list[Interpretation]:
        interps: list[Interpretation] = []
        for form, metas in resolve(df, self.ctx, self.world):
            bag = list(dubious) + list(metas)
            script = None
            cost = None
            eval_result = None
            error = None
            if form.fully_resolved:
                try:
                    compiled = compile_form(form)
                    script, opt_metas = optimize(
                        compiled, lambda s: interpreter.evaluate(s, self.world).cost_seconds
                    )
                    bag.extend(opt_metas)
                    eval_result = interpreter.evaluate(script, self.world)
                    bag.extend(eval_result.meta)
                    cost = eval_result.cost_seconds
                except NoHistory:
                    error = "no_history"
                except UncompilableForm:
                    error = "uncompilable"
            interps.append(
                Interpretation(
                    resolved=form, discourse=df, script=script, metas=tuple(bag),
                    cost=cost, eval_result=eval_result, error=error,
                )
            )
            trace.append(
                TraceRecord(
                    "resolve",
                    _rf_text(form),
                    tuple(m.describe() for m in bag),
                )
            )
        return interps

    # .. move choice ..

    def choose_move(self, best: Interpretation) -> DialogueMove:
        if best.error == "out_of_grammar":
            return RejectMisheard(realized_meta=tuple(best.metas[:1]))
        if best.error == "no_history":
            return Inform(self.realizer.no_history())

        worst = _most_severe(best)
        if worst is not None:
            payload = worst.payload
            if isinstance(payload, DubiousLF):
                return RejectMisheard(realized_meta=(worst,))
            if isinstance(payload, IncorrectSizeOfSet):
                return Inform(self.realizer.wrong_size(payload), realized_meta=(worst,))
            if isinstance(payload, (UnderspecifiedDefinite, UnresolvedPronoun)):
                slot, sort, held = self._clarification_target(best, payload)
                return Clarify(
                    question=self.realizer.clarification(payload),
                    slot=slot, sort=sort, held=held, realized_meta=(worst,),
                )
            if isinstance(payload, AlreadyInState):
                return Inform(self.realizer.already(payload), realized_meta=(worst,))

        if best.script is None:
            # No failures and no plan: nothing sensible to do with it.
            return RejectMisheard()

        hazardous = any(isinstance(f, (RStop, RGoBack)) for f in best.resolved.frames)
        if hazardous or best.cost < self.world.confirm_threshold:
            return ExecuteNow(script=best.script, resolved=best.resolved)
        return ConfirmThenExecute(
            script=best.script,
            paraphrase=self.realizer.paraphrase(_in_script_order(best.resolved, best.script)),
            resolved=best.resolved,
        )

    def _clarification_target(self, interp: Interpretation, payload):
        """Locate the discourse frame whose slot needs the answer."""
        slot = "location"
        sort = payload.sort if isinstance(payload, UnderspecifiedDefinite) else None
        held: Frame | None = None
        if interp.discourse is not None:
            resolved_frames = interp.resolved.frames
            for i, rframe in enumerate(resolved_frames):
                slots = []
                if isinstance(rframe, RGoto):
                    slots = [("location", rframe.targets)]
                elif isinstance(rframe, RMeasure):
                    slots = [("location", rframe.location)]
                elif isinstance(rframe, RSetDoor):
                    slots = [("door", rframe.doors)]
                elif isinstance(rframe, RGoBack):
                    slots = [("location", rframe.target)]
                for name, value in slots:
                    if isinstance(value, Unresolved):
                        slot = name
                        if i < len(interp.discourse.frames):
                            held = interp.discourse.frames[i]
                        if sort is None and value.sort:
                            sort = value.sort
                        break
                if held is not None:
                    break
        if sort is None and slot == "door":
            sort = "door"
        return slot, sort, held

    # .. answers ..

    def handle_answer(self, polarity: str, trace: list[TraceRecord]) -> TurnPlan:
        pending = self.ctx.pending
        if not isinstance(pending, PendingConfirm):
            trace.append(TraceRecord("move", "answer with nothing pending"))
            return TurnPlan(
                move=RejectMisheard(), text=MISHEARD, script=None, resolved=None,
                outcome_kind="rejected", pending=None, trace=tuple(trace),
            )
        if polarity == "yes":
            trace.append(TraceRecord("move", "confirmed; executing stored plan"))
            return TurnPlan(
                move=ExecuteNow(script=pending.script, resolved=pending.resolved),
                text=None, script=pending.script, resolved=pending.resolved,
                outcome_kind="executed", pending=None, trace=tuple(trace),
            )
        trace.append(TraceRecord("move", "declined; plan discarded"))
        return TurnPlan(
            move=Inform("Okay."), text="Okay.", script=None, resolved=None,
            outcome_kind="rejected", pending=None, trace=tuple(trace),
        )

    # .. one full turn ..

    def process_utterance(self, raw: str) -> TurnPlan:
        trace: list[TraceRecord] = []
        utt = tokenize(raw)  # EmptyUtterance propagates to the caller
        lf = None
        try:
            lf = parse(utt, self.lexicon)
        except OutOfGrammar:
            pass
        if lf is not None and lf.kind == "answer" and not detect_dubious(lf):
            trace.append(TraceRecord("parse", _lf_text(lf)))
            return self.handle_answer(lf.polarity, trace)

        interps, trace = self.interpret_turn(raw)
        best = select(interps)
        trace.append(
            TraceRecord(
                "select",
                f"candidate {interps.index(best) + 1} of {len(interps)}"
                f" (severity {effective_severity(best)})",
            )
        )
        move = self.choose_move(best)
        if best.script is not None:
            trace.append(TraceRecord("script", pretty(best.script)))
        if best.cost is not None:
            trace.append(
                TraceRecord("evaluate", f"cost {best.cost:g} s", (f"cost({best.cost:g})",))
            )
        trace.append(TraceRecord("move", type(move).__name__, tuple(
            m.describe() for m in getattr(move, "realized_meta", ())
        )))
        return self._plan_for(move, best, trace)

    def _plan_for(self, move: DialogueMove, best: Interpretation, trace) -> TurnPlan:
        text = realize(move, self.realizer)
        if isinstance(move, ExecuteNow):
            return TurnPlan(
                move=move, text=None, script=move.script, resolved=move.resolved,
                outcome_kind="executed", pending=None, trace=tuple(trace),
            )
        if isinstance(move, ConfirmThenExecute):
            pending = PendingConfirm(
                script=move.script, paraphrase=move.paraphrase, resolved=move.resolved
            )
            return TurnPlan(
                move=move, text=text, script=None, resolved=move.resolved,
                outcome_kind="confirmed-pending", pending=pending, trace=tuple(trace),
            )
        if isinstance(move, Clarify):
            pending = PendingClarify(frame=move.held, slot=move.slot, sort=move.sort)
            return TurnPlan(
                move=move, text=text, script=None, resolved=best.resolved,
                outcome_kind="clarification-pending", pending=pending, trace=tuple(trace),
            )
        if isinstance(move, Inform):
            return TurnPlan(
                move=move, text=text, script=None, resolved=best.resolved,
                outcome_kind="informed", pending=None, trace=tuple(trace),
            )
        return TurnPlan(
            move=move, text=text, script=None, resolved=None,
            outcome_kind="rejected", pending=None, trace=tuple(trace),
        )

    def finish_turn(self, plan: TurnPlan, visited: tuple[str, ...] = ()):
        outcome = TurnOutcome(kind=plan.outcome_kind, pending=plan.pending, visited=visited)
        update_context(self.ctx, plan.resolved, outcome)


def _in_script_order(resolved: ResolvedForm, script: Script) -> ResolvedForm:
    """The paraphrase must list the itinerary in the order the optimizer
    chose, not the order the user said it; ``resolved`` itself stays in
    user order so do-that-again can re-optimize from scratch."""
    loops = itinerary_loops(script)
    if len(loops) != 1:
        return resolved
    order = loops[0].values

    new_frames = []
    for frame in resolved.frames:
        binding = None
        if isinstance(frame, RGoto) and not isinstance(frame.targets, Unresolved):
            binding = frame.targets
        elif isinstance(frame, RMeasure) and isinstance(frame.location, Binding):
            binding = frame.location
        if binding is not None and len(binding.entities) > 1 and sorted(binding.entities) == sorted(order):
            style = dict(zip(binding.entities, binding.articles))
            reordered = replace(
                binding, entities=tuple(order), articles=tuple(style[e] for e in order)
            )
            if isinstance(frame, RGoto):
                new_frames.append(replace(frame, targets=reordered))
            else:
                new_frames.append(replace(frame, location=reordered))
            continue
        new_frames.append(frame)
    return ResolvedForm(frames=tuple(new_frames))


# -- trace summaries ------------------------------------------------------------


def _lf_text(lf: LinguisticForm) -> str:
    if lf.kind == "answer":
        return f"answer({lf.polarity})"
    clauses = []
    for clause in lf.clauses:
        bits = [clause.verb]
        if clause.sensor:
            bits.append(clause.sensor)
        if clause.np:
            bits.append(_np_text(clause.np))
        if clause.location:
            bits.append(f"at {_np_text(clause.location)}")
        if clause.time:
            bits.append(f"{clause.time.hour:02d}:{clause.time.minute:02d}")
        if clause.source == "fixed":
            bits.append("fixed")
        clauses.append(" ".join(bits))
    return f"{lf.kind}[" + "; ".join(clauses) + "]"


def _np_text(np) -> str:
    if np.variant == "pronoun":
        return np.text
    if np.variant == "definite":
        return f"the {np.sort}"
    if np.variant == "quantified":
        return f"{np.claimed} x {np.sort}"
    if np.variant == "name":
        return ("the " if np.article else "") + (np.entity or "?")
    if np.variant == "conj":
        return " + ".join(_np_text(p) for p in np.conjuncts)
    return "?"


def _df_text(df: DiscourseForm) -> str:
    parts = []
    for frame in df.frames:
        name = type(frame).__name__
        if isinstance(frame, Measure):
            stamp = "" if frame.time is None else f"@{frame.time.hour:02d}:{frame.time.minute:02d}"
            parts.append(f"{name}({frame.sensor}{stamp},{frame.source})")
        elif isinstance(frame, (Goto, SetDoor, BareNP)):
            parts.append(name)
        elif isinstance(frame, Answer):
            parts.append(f"Answer({frame.polarity})")
        else:
            parts.append(name)
    return " + ".join(parts)


def _rf_text(form: ResolvedForm) -> str:
    if not form.frames:
        return "(unresolved)"
    parts = []
    for frame in form.frames:
        name = type(frame).__name__.lstrip("R")
        slots = []
        if isinstance(frame, RGoto):
            slots.append(_slot_text(frame.targets))
        elif isinstance(frame, RMeasure):
            slots.append(frame.sensor)
            if frame.location is not None:
                slots.append(_slot_text(frame.location))
        elif isinstance(frame, RSetDoor):
            slots.append(_slot_text(frame.doors))
            slots.append(frame.goal)
        elif isinstance(frame, RGoBack):
            slots.append(_slot_text(frame.target))
        parts.append(f"{name}({', '.join(slots)})" if slots else name)
    return " + ".join(parts)


def _slot_text(slot) -> str:
    if isinstance(slot, Unresolved):
        return f"?{slot.reason}"
    return "{" + ",".join(slot.entities) + "}"
