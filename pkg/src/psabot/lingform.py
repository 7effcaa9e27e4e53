"""Linguistic level: tokenizing, parsing, and misrecognition patterns.

The grammar is fixed and deliberately small, playing the role of a
constrained recognizer: anything it cannot parse is rejected outright
rather than guessed at.  Attachment is longest-match and the grammar is
unambiguous by construction, so parsing is deterministic; all
non-determinism is deferred to the resolution stage.

The full surface grammar is documented in docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .meta import DubiousLF, MetaOutput
from .world import WorldModel


class EmptyUtterance(ValueError):
    pass


class OutOfGrammar(ValueError):
    def __init__(self, position: int, token: str | None, reason: str = ""):
        self.position = position
        self.token = token
        detail = f"at token {position}" + (f" ({token!r})" if token else "")
        super().__init__(detail + (f": {reason}" if reason else ""))


@dataclass(frozen=True)
class Utterance:
    raw: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class TimeRef:
    hour: int
    minute: int

    def __post_init__(self):
        if not (0 <= self.hour <= 23 and 0 <= self.minute <= 59):
            raise ValueError(f"bad clock time {self.hour}:{self.minute}")

    def to_seconds(self) -> float:
        return self.hour * 3600 + self.minute * 60


@dataclass(frozen=True)
class NounPhrase:
    """One referring expression as uttered.

    variant: pronoun | definite | quantified | name | conj
      pronoun    -- "it", "that"; word in ``text``
      definite   -- "the <sort noun>"; sort in ``sort``
      quantified -- "both decks", "all three doors"; claimed count + sort
      name       -- a lexicon entity, with or without "the" (``article``)
      conj       -- juxtaposed/"and"-joined list; members in ``conjuncts``
    """

    variant: str
    text: str = ""
    sort: str | None = None
    claimed: int | None = None
    entity: str | None = None
    article: bool = False
    conjuncts: tuple["NounPhrase", ...] | None = None

    def __post_init__(self):
        if self.conjuncts is not None and len(self.conjuncts) < 2:
            raise ValueError("conjunction of fewer than two phrases")


@dataclass(frozen=True)
class Clause:
    """One verb frame.  Unfilled slots are None, meaning explicitly
    absent at this level; nothing is defaulted before resolution."""

    verb: str  # go_to | measure | open | close | stop | go_back |
    #           do_again | do_same_for | frag
    np: NounPhrase | None = None
    sensor: str | None = None
    location: NounPhrase | None = None
    time: TimeRef | None = None
    source: str = "mobile"  # "mobile" | "fixed"
    verb_word: str | None = None  # surface verb for go_to ("go"/"move")
    query: bool = False  # came from a what-is/what-was form


@dataclass(frozen=True)
class LinguisticForm:
    kind: str  # "command" | "query" | "answer"
    clauses: tuple[Clause, ...] = ()
    polarity: str | None = None  # answers only: "yes" | "no"


AFFIRMATIVES = {"okay", "yes", "yeah", "right", "sure"}
NEGATIVES = {"no", "cancel"}

SORT_NOUNS = {
    "deck": "deck", "decks": "deck",
    "door": "door", "doors": "door",
    "seat": "seat", "seats": "seat",
    "location": "location", "locations": "location",
}
PLURAL_SORT_NOUNS = {"decks", "doors", "seats", "locations"}
PRONOUNS = {"it", "that"}

_UNITS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"]
_TEENS = ["ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
          "seventeen", "eighteen", "nineteen"]
_TENS = {"twenty": 20, "thirty": 30, "forty": 40, "fifty": 50}

WORD_TO_NUMBER = {w: i for i, w in enumerate(_UNITS)}
WORD_TO_NUMBER.update({w: 10 + i for i, w in enumerate(_TEENS)})
WORD_TO_NUMBER.update(_TENS)

# Tokens that can open a clause; an "and" followed by one of these ends
# a noun-phrase list instead of extending it.
CLAUSE_OPENERS = {"go", "move", "measure", "what", "open", "close", "stop", "do"}

_TOKEN_CLEAN = re.compile(r"[^a-z0-9']+")


def tokenize(raw: str) -> Utterance:
    """Lowercase word tokens; punctuation dropped, apostrophes kept
    inside tokens ("pilot's")."""
    words = []
    for chunk in _TOKEN_CLEAN.split(raw.lower()):
        word = chunk.strip("'")
        if word:
            words.append(word)
    if not words:
        raise EmptyUtterance(f"no tokens in {raw!r}")
    return Utterance(raw=raw, tokens=tuple(words))


class Lexicon:
    """Surface forms for entities and sensors, from the world config."""

    def __init__(self, world: WorldModel):
        self.entities: list[tuple[tuple[str, ...], str]] = []
        for entity in world.locations:
            surface = tuple(world.display(entity).lower().split())
            self.entities.append((surface, entity))
        self.entities.sort(key=lambda pair: -len(pair[0]))

        self.sensors: list[tuple[tuple[str, ...], str]] = []
        for sensor_id, spec in world.sensors.items():
            for phrase in spec.surfaces:
                self.sensors.append((tuple(phrase.lower().split()), sensor_id))
        self.sensors.sort(key=lambda pair: -len(pair[0]))

    def match_entity(self, tokens, pos):
        for surface, entity in self.entities:
            if tokens[pos : pos + len(surface)] == surface:
                return entity, len(surface)
        return None, 0

    def match_sensor(self, tokens, pos):
        for surface, sensor in self.sensors:
            if tokens[pos : pos + len(surface)] == surface:
                return sensor, len(surface)
        return None, 0


def _parse_number(tokens, pos):
    """Parse a spoken number at pos; returns (value, consumed) or (None, 0)."""
    if pos >= len(tokens):
        return None, 0
    word = tokens[pos]
    if word in _TENS:
        if pos + 1 < len(tokens) and tokens[pos + 1] in _UNITS[1:]:
            return _TENS[word] + WORD_TO_NUMBER[tokens[pos + 1]], 2
        return _TENS[word], 1
    if word in WORD_TO_NUMBER:
        return WORD_TO_NUMBER[word], 1
    return None, 0


def _parse_time(tokens, pos):
    """Spoken clock time: "fifteen oh five", "nine thirty", "ten hundred"."""
    hour, used = _parse_number(tokens, pos)
    if hour is None or not 0 <= hour <= 23:
        return None, 0
    rest = pos + used
    if rest < len(tokens) and tokens[rest] == "hundred":
        return TimeRef(hour, 0), used + 1
    if rest < len(tokens) and tokens[rest] == "oh":
        unit = tokens[rest + 1] if rest + 1 < len(tokens) else None
        if unit in _UNITS[1:]:
            return TimeRef(hour, WORD_TO_NUMBER[unit]), used + 2
        return None, 0
    minute, mused = _parse_number(tokens, rest)
    if minute is not None and 10 <= minute <= 59:
        return TimeRef(hour, minute), used + mused
    return None, 0


class _Parser:
    def __init__(self, tokens: tuple[str, ...], lexicon: Lexicon):
        self.tokens = tokens
        self.lexicon = lexicon
        self.pos = 0

    def fail(self, reason: str = "") -> OutOfGrammar:
        token = self.tokens[self.pos] if self.pos < len(self.tokens) else None
        return OutOfGrammar(self.pos, token, reason)

    def peek(self, offset: int = 0) -> str | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def take(self) -> str:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, word: str):
        if self.peek() != word:
            raise self.fail(f"expected {word!r}")
        self.pos += 1

    # -- noun phrases ---------------------------------------------------

    def np(self) -> NounPhrase | None:
        word = self.peek()
        if word is None:
            return None
        if word in PRONOUNS:
            self.take()
            return NounPhrase("pronoun", text=word)
        if word == "both":
            self.take()
            return NounPhrase("quantified", claimed=2, sort=self._plural_sort())
        if word == "all":
            self.take()
            count, used = _parse_number(self.tokens, self.pos)
            if count is None:
                raise self.fail("expected a number after 'all'")
            self.pos += used
            return NounPhrase("quantified", claimed=count, sort=self._plural_sort())
        if word == "the":
            nxt = self.peek(1)
            if nxt in SORT_NOUNS and nxt not in PLURAL_SORT_NOUNS:
                self.take()
                return NounPhrase("definite", sort=SORT_NOUNS[self.take()])
            entity, used = self.lexicon.match_entity(self.tokens, self.pos + 1)
            if entity:
                self.pos += 1 + used
                return NounPhrase("name", entity=entity, article=True)
            return None
        entity, used = self.lexicon.match_entity(self.tokens, self.pos)
        if entity:
            self.pos += used
            return NounPhrase("name", entity=entity, article=False)
        return None

    def _plural_sort(self) -> str:
        word = self.peek()
        if word in PLURAL_SORT_NOUNS:
            return SORT_NOUNS[self.take()]
        raise self.fail("expected a plural sort noun")

    def np_list(self) -> NounPhrase:
        """One NP, or a conjunction.  "and" extends the list only when
        what follows cannot open a clause; clause conjunction wins."""
        first = self.np()
        if first is None:
            raise self.fail("expected a noun phrase")
        items = [first]
        while True:
            if self.peek() == "and" and self.peek(1) not in CLAUSE_OPENERS:
                mark = self.pos
                self.take()
                item = self.np()
                if item is None:
                    self.pos = mark
                    break
                items.append(item)
                continue
            mark = self.pos
            item = self.np()
            if item is None:
                self.pos = mark
                break
            items.append(item)
        if len(items) == 1:
            return items[0]
        return NounPhrase("conj", conjuncts=tuple(items))

    # -- clauses ----------------------------------------------------------

    def sensor_phrase(self) -> str:
        if self.peek() == "the":
            self.take()
        sensor, used = self.lexicon.match_sensor(self.tokens, self.pos)
        if not sensor:
            raise self.fail("expected a sensor name")
        self.pos += used
        return sensor

    def _measure_tail(self, sensor: str, query: bool, past: bool) -> Clause:
        location = None
        time = None
        fixed = False
        while True:
            word = self.peek()
            if word == "at":
                self.take()
                parsed, used = _parse_time(self.tokens, self.pos)
                if parsed is not None:
                    if time is not None:
                        raise self.fail("duplicate time")
                    self.pos += used
                    time = parsed
                    continue
                np = self.np()
                if np is None:
                    raise self.fail("expected a time or location after 'at'")
                if location is not None:
                    raise self.fail("duplicate location")
                location = np
                continue
            if word == "according":
                self.take()
                self.expect("to")
                self.expect("the")
                self.expect("fixed")
                self.expect("sensors")
                fixed = True
                continue
            break
        source = "fixed" if (fixed or past or time is not None) else "mobile"
        return Clause(
            verb="measure", sensor=sensor, location=location, time=time,
            source=source, query=query,
        )

    def clause(self) -> Clause:
        word = self.peek()
        if word in ("go", "move"):
            verb_word = self.take()
            if self.peek() == "back":
                if verb_word != "go":
                    raise self.fail("only 'go back' is supported")
                self.take()
                return Clause(verb="go_back")
            self.expect("to")
            return Clause(verb="go_to", np=self.np_list(), verb_word=verb_word)
        if word == "measure":
            self.take()
            return self._measure_tail(self.sensor_phrase(), query=False, past=False)
        if word == "what":
            self.take()
            tense = self.take() if self.peek() in ("is", "was") else None
            if tense is None:
                raise self.fail("expected 'is' or 'was'")
            return self._measure_tail(self.sensor_phrase(), query=True, past=tense == "was")
        if word in ("open", "close"):
            verb = self.take()
            return Clause(verb=verb, np=self.np_list())
        if word == "stop":
            self.take()
            return Clause(verb="stop")
        if word == "do":
            self.take()
            if self.peek() in ("that", "it") and self.peek(1) == "again":
                self.take()
                self.take()
                return Clause(verb="do_again")
            if self.peek() == "the" and self.peek(1) == "same":
                self.take()
                self.take()
                self.expect("for")
                np = self.np()
                if np is None:
                    raise self.fail("expected a noun phrase after 'do the same for'")
                return Clause(verb="do_same_for", np=np)
            raise self.fail("expected 'that again' or 'the same for'")
        # Fragment: a bare noun phrase (or conjunction) as the utterance.
        np = self.np_list()
        return Clause(verb="frag", np=np)

    def parse(self) -> LinguisticForm:
        if len(self.tokens) == 1:
            word = self.tokens[0]
            if word in AFFIRMATIVES:
                return LinguisticForm(kind="answer", polarity="yes")
            if word in NEGATIVES:
                return LinguisticForm(kind="answer", polarity="no")
        clauses = [self.clause()]
        while self.peek() == "and":
            self.take()
            clauses.append(self.clause())
        if self.pos != len(self.tokens):
            raise self.fail("trailing words")
        kind = "query" if all(c.query for c in clauses if c.verb == "measure") and any(
            c.query for c in clauses
        ) else "command"
        return LinguisticForm(kind=kind, clauses=tuple(clauses))


def parse(utterance: Utterance, lexicon: Lexicon) -> LinguisticForm:
    return _Parser(utterance.tokens, lexicon).parse()


# -- misrecognition patterns ----------------------------------------------


def _pronoun_in_conjunction(lf: LinguisticForm) -> bool:
    for clause in lf.clauses:
        for np in (clause.np, clause.location):
            if np is not None and np.conjuncts:
                if any(part.variant == "pronoun" for part in np.conjuncts):
                    return True
    return False


# Extend by adding entries; each is checked independently and reports
# its own pattern name.
MISRECOGNITION_PATTERNS = {
    "pronoun_conjunction": _pronoun_in_conjunction,
}


def detect_dubious(lf: LinguisticForm) -> list[MetaOutput]:
    """Flag parses that usually mean the input was garbled.  Pure: the
    form itself is never touched."""
    found = []
    for name, matches in MISRECOGNITION_PATTERNS.items():
        if matches(lf):
            found.append(MetaOutput(stage="lingform", payload=DubiousLF(name)))
    return found
