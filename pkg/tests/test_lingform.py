"""Tokenizer, grammar, and misrecognition-pattern tests."""

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from psabot.lingform import (
    EmptyUtterance,
    NounPhrase,
    OutOfGrammar,
    TimeRef,
    detect_dubious,
    parse,
    tokenize,
)
from psabot.meta import DubiousLF

GOLDEN = Path(__file__).resolve().parents[1] / "dialogues" / "psa_section5.txt"


# -- tokenize ----------------------------------------------------------------


def test_tokenize_splits_and_strips_punctuation():
    utt = tokenize("Go to crew hatch and close it.")
    assert utt.tokens == ("go", "to", "crew", "hatch", "and", "close", "it")


def test_tokenize_single_word():
    assert tokenize("Stop.").tokens == ("stop",)


def test_tokenize_blank_raises():
    with pytest.raises(EmptyUtterance):
        tokenize("   ")


def test_tokenize_keeps_inner_apostrophes():
    assert tokenize("the pilot's seat").tokens == ("the", "pilot's", "seat")


@given(st.text(max_size=80))
def test_tokenize_deterministic_and_clean(raw):
    try:
        first = tokenize(raw)
    except EmptyUtterance:
        return
    second = tokenize(raw)
    assert first == second
    for token in first.tokens:
        assert token == token.lower()
        assert not any(ch in token for ch in ".,?!;:()[]\"")


# -- parse -------------------------------------------------------------------


def test_parse_quantified_command(lexicon):
    lf = parse(tokenize("go to all three decks and measure carbon dioxide"), lexicon)
    assert lf.kind == "command"
    assert [c.verb for c in lf.clauses] == ["go_to", "measure"]
    goto = lf.clauses[0]
    assert goto.np.variant == "quantified"
    assert goto.np.claimed == 3
    assert goto.np.sort == "deck"
    measure = lf.clauses[1]
    assert measure.sensor == "co2"
    assert measure.location is None
    assert measure.source == "mobile"


def test_parse_what_is_query(lexicon):
    lf = parse(tokenize("what is the pressure?"), lexicon)
    assert lf.kind == "query"
    assert lf.clauses[0].verb == "measure"
    assert lf.clauses[0].sensor == "pressure"
    assert lf.clauses[0].location is None


def test_parse_out_of_lexicon(lexicon):
    with pytest.raises(OutOfGrammar):
        parse(tokenize("frobnicate the deck"), lexicon)


def test_parse_fixed_sensor_history_query(lexicon):
    lf = parse(
        tokenize("What was the carbon dioxide level at fifteen oh five according to the fixed sensors?"),
        lexicon,
    )
    clause = lf.clauses[0]
    assert clause.sensor == "co2"
    assert clause.time == TimeRef(15, 5)
    assert clause.source == "fixed"


def test_parse_and_prefers_clause_conjunction(lexicon):
    lf = parse(tokenize("go to crew hatch and close it"), lexicon)
    assert [c.verb for c in lf.clauses] == ["go_to", "close"]
    assert lf.clauses[0].np.conjuncts is None


def test_parse_np_list_inside_goto(lexicon):
    lf = parse(
        tokenize("Move to storage lockers, commander's seat and flight deck and measure temperature."),
        lexicon,
    )
    assert [c.verb for c in lf.clauses] == ["go_to", "measure"]
    np = lf.clauses[0].np
    assert np.variant == "conj"
    assert [p.entity for p in np.conjuncts] == ["storage_lockers", "commander_seat", "flight_deck"]


def test_parse_answers(lexicon):
    for word in ("okay", "yes", "yeah", "right", "sure"):
        lf = parse(tokenize(word), lexicon)
        assert lf.kind == "answer" and lf.polarity == "yes"
    for word in ("no", "cancel"):
        lf = parse(tokenize(word), lexicon)
        assert lf.kind == "answer" and lf.polarity == "no"


def test_parse_deterministic(lexicon):
    utt = tokenize("go to crew hatch and close it")
    assert parse(utt, lexicon) == parse(utt, lexicon)


def test_parse_reports_error_position(lexicon):
    with pytest.raises(OutOfGrammar) as err:
        parse(tokenize("go to the warp core"), lexicon)
    assert err.value.position >= 2


def test_golden_user_lines_all_parse(lexicon):
    lines = [
        line.strip()[5:].strip()
        for line in GOLDEN.read_text().splitlines()
        if line.strip().startswith("USER:")
    ]
    assert lines, "golden transcript should contain USER lines"
    for line in lines:
        parse(tokenize(line), lexicon)  # must not raise


# -- misrecognition patterns ---------------------------------------------------


def test_pronoun_conjunction_is_dubious(lexicon):
    lf = parse(tokenize("it and flight deck"), lexicon)
    found = detect_dubious(lf)
    assert [m.payload for m in found] == [DubiousLF("pronoun_conjunction")]


def test_clause_level_pronoun_is_not_dubious(lexicon):
    lf = parse(tokenize("go to crew hatch and close it"), lexicon)
    assert detect_dubious(lf) == []


def test_open_it_and_it_is_dubious(lexicon):
    # Independent check of the pattern definition: the parse must hold a
    # conjunction NP with a pronoun conjunct, and the matcher must agree.
    lf = parse(tokenize("open it and it"), lexicon)
    conj = lf.clauses[0].np
    assert conj.variant == "conj"
    assert any(p.variant == "pronoun" for p in conj.conjuncts)
    assert [m.payload for m in detect_dubious(lf)] == [DubiousLF("pronoun_conjunction")]


def test_detect_dubious_leaves_form_alone(lexicon):
    lf = parse(tokenize("it and flight deck"), lexicon)
    before = lf
    detect_dubious(lf)
    assert lf == before


def test_conjunction_requires_two_members():
    with pytest.raises(ValueError):
        NounPhrase("conj", conjuncts=(NounPhrase("pronoun", text="it"),))
