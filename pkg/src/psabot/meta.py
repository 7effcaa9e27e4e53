"""Meta-outputs: the side channel every pipeline stage writes to.

Each translation stage produces its normal output plus zero or more
meta-outputs describing how the translation went: presupposition
failures, resolution notes, estimated costs, and suspicious-parse
flags.  The dialogue manager ranks interpretations and picks dialogue
moves by looking only at these.
"""

from __future__ import annotations

from dataclasses import dataclass


class PresupFailure:
    """Marker base for payloads that signal a failed presupposition."""


@dataclass(frozen=True)
class AlreadyInState(PresupFailure):
    """A change-state action whose target is already in the goal state."""

    entity: str
    attribute: str
    value: str


@dataclass(frozen=True)
class IncorrectSizeOfSet(PresupFailure):
    """The user's cardinality claim disagrees with the world."""

    claimed: int
    actual: int


@dataclass(frozen=True)
class UnderspecifiedDefinite(PresupFailure):
    """A definite description (or required slot) with no unique referent."""

    sort: str


@dataclass(frozen=True)
class UnresolvedPronoun(PresupFailure):
    """A pronoun (or pronoun-like ellipsis) with no usable antecedent."""

    expression: str = "it"


@dataclass(frozen=True)
class DubiousLF(PresupFailure):
    """A parse matching a known misrecognition pattern."""

    pattern: str


@dataclass(frozen=True)
class Cost:
    """Estimated execution time for a plan, in simulated seconds."""

    seconds: float


@dataclass(frozen=True)
class ResolutionNote:
    """Record of one resolution choice: which entities filled which gap.

    ``source`` distinguishes bindings the resolver chose by default
    (recency) from bindings the user named outright or supplied as a
    clarification answer; the dialogue manager's ranking cares.
    """

    kind: str  # pronoun_bound | definite_bound | ellipsis_filled |
    #            default_location_filled | set_expanded
    entities: tuple[str, ...]
    source: str = "explicit"  # "default" | "explicit"


Payload = (
    AlreadyInState
    | IncorrectSizeOfSet
    | UnderspecifiedDefinite
    | UnresolvedPronoun
    | DubiousLF
    | Cost
    | ResolutionNote
)

# Severity ranks, most severe highest.  AlreadyInState sits below the
# clarification-worthy failures, but a candidate whose AlreadyInState
# arose on a *defaulted* binding is demoted past them (see dm.select).
_SEVERITY = {
    Cost: 0,
    ResolutionNote: 1,
    AlreadyInState: 2,
    UnderspecifiedDefinite: 3,
    UnresolvedPronoun: 3,
    IncorrectSizeOfSet: 5,
    DubiousLF: 6,
}

DEMOTED_ALREADY_IN_STATE = 4


def severity(payload: Payload) -> int:
    return _SEVERITY[type(payload)]


@dataclass(frozen=True)
class MetaOutput:
    """One tagged side-channel item, stamped with the stage that made it."""

    stage: str  # lingform | resolve | optimize | evaluate
    payload: Payload

    @property
    def is_failure(self) -> bool:
        return isinstance(self.payload, PresupFailure)

    @property
    def severity(self) -> int:
        return severity(self.payload)

    def describe(self) -> str:
        """Compact single-line rendering for traces."""
        p = self.payload
        if isinstance(p, AlreadyInState):
            return f"presupposition_failure(already_{p.value}({p.entity}))"
        if isinstance(p, IncorrectSizeOfSet):
            return f"presupposition_failure(incorrect_size_of_set({p.claimed},{p.actual}))"
        if isinstance(p, UnderspecifiedDefinite):
            return f"presupposition_failure(underspecified_definite({p.sort}))"
        if isinstance(p, UnresolvedPronoun):
            return f"presupposition_failure(unresolved_pronoun({p.expression}))"
        if isinstance(p, DubiousLF):
            return f"presupposition_failure(dubious_lf({p.pattern}))"
        if isinstance(p, Cost):
            return f"cost({p.seconds:g})"
        if isinstance(p, ResolutionNote):
            return f"{p.kind}({','.join(p.entities)})[{p.source}]"
        return repr(p)
