"""Session service tests: engine semantics and the HTTP transport."""

import threading
import time

import pytest
from fastapi.testclient import TestClient

from psabot.service import (
    Pacing,
    ProtocolError,
    SessionEngine,
    SessionManager,
    UnknownSession,
)
from psabot.webapi import build_app
from psabot.world import default_config_text, load_default


def make_engine(**kwargs):
    return SessionEngine(load_default(), Pacing.parse("instant"), **kwargs)


def utterances(events):
    return [e.payload["text"] for e in events if e.type == "system_utterance"]


# -- engine ---------------------------------------------------------------------


def test_inform_turn_produces_trace_then_utterance():
    engine = make_engine()
    events = engine.post_utterance("Close both doors.")
    types = [e.type for e in events]
    assert types[-1] == "system_utterance"
    assert "trace_record" in types
    assert types.index("trace_record") < types.index("system_utterance")
    assert utterances(events) == ["There are in fact three of them."]


def test_confirmed_plan_reports_in_execution_order():
    engine = make_engine()
    engine.post_utterance("Go to all three decks and measure carbon dioxide.")
    events = engine.post_utterance("okay")
    reports = [e.payload["location"] for e in events if e.type == "report_issued"]
    assert reports == ["flight_deck", "mid_deck", "lower_deck"]
    moved = [e.payload["location"] for e in events if e.type == "robot_moved"]
    assert moved == ["flight_deck", "mid_deck", "lower_deck"]


def test_event_seq_is_dense_and_ordered():
    engine = make_engine()
    engine.post_utterance("What is the pressure?")
    engine.post_utterance("Close both doors.")
    seqs = [e.seq for e in engine.events]
    assert seqs == list(range(len(seqs)))


def test_replay_determinism():
    lines = [
        "Go to all three decks and measure carbon dioxide.",
        "okay",
        "Do the same for the pilot's seat.",
        "right",
        "Close both doors.",
        "Go to crew hatch and close it.",
        "yeah",
        "Close the door.",
        "The crew hatch.",
    ]
    streams = []
    for _ in range(2):
        engine = make_engine()
        for line in lines:
            engine.post_utterance(line)
        streams.append([(e.type, tuple(sorted(e.payload.items())), e.seq)
                        for e in engine.events if e.type != "trace_record"])
        # trace summaries are compared too, but separately: they include
        # candidate listings whose formatting is also deterministic
        streams[-1].extend(
            (e.type, e.payload["stage"], e.payload["summary"]) for e in engine.events
            if e.type == "trace_record"
        )
    assert streams[0] == streams[1]


def test_empty_utterance_is_protocol_error():
    engine = make_engine()
    with pytest.raises(ProtocolError) as err:
        engine.post_utterance("   ")
    assert err.value.code == "EmptyUtterance"


def test_stop_interrupts_stepped_execution():
    engine = make_engine(auto_drain=False)
    engine.post_utterance("Move to storage lockers, commander's seat and flight deck and measure temperature.")
    engine.post_utterance("sure")
    # step past the first arrival and its report, into the second leg
    seen_travels = 0
    while seen_travels < 2:
        events, _ = engine.step()
        assert events, "execution ended before the second leg"
        seen_travels += sum(1 for e in events if e.type == "travel_started")
    events = engine.post_utterance("Stop.")
    statuses = [e.payload["status"] for e in events if e.type == "execution_status"]
    assert "interrupted" in statuses
    assert utterances(events) == []  # obeys silently
    assert not engine.execution_active

    events = engine.post_utterance("Go back.")
    while engine.execution_active:
        stepped, _ = engine.step()
        events.extend(stepped)
    moved = [e.payload for e in events if e.type == "robot_moved" and e.payload.get("location")]
    assert moved[-1]["location"] == "flight_deck"  # the only completed stop so far


def test_get_state_snapshot():
    engine = make_engine()
    state = engine.get_state()
    assert state["location"] == "crew_hatch"
    assert state["clock"] == "15:10"
    assert state["doors"] == {"crew_hatch": "open", "mid_hatch": "open", "lower_hatch": "open"}
    engine.post_utterance("Go to crew hatch and close it.")
    engine.post_utterance("yeah")
    assert engine.get_state()["doors"]["crew_hatch"] == "closed"
    assert engine.get_state()["pending"] is None


def test_scaled_pacing_interrupts_mid_travel():
    engine = SessionEngine(load_default(), Pacing.parse("scaled:60"))
    engine.post_utterance("Move to storage lockers, commander's seat and flight deck and measure temperature.")
    engine.post_utterance("sure")
    pump = threading.Thread(target=engine.run_pump, daemon=True)
    pump.start()
    time.sleep(0.2)  # first leg lasts 0.5 s of real time at scaled:60
    engine.post_utterance("Stop.")
    pump.join(timeout=5)
    assert not engine.execution_active
    statuses = [e.payload["status"] for e in engine.events if e.type == "execution_status"]
    assert statuses[-1] == "interrupted"
    state = engine.get_state()
    assert state["location"] is None  # between named places
    assert 0.0 < state["position"] < 1.0


# -- session manager ---------------------------------------------------------------


def test_sessions_are_isolated():
    manager = SessionManager(default_config_text())
    a = manager.create_session()
    b = manager.create_session()
    manager.post_utterance(a, "Go to crew hatch and close it.")
    manager.post_utterance(a, "yeah")
    assert manager.get_state(a)["doors"]["crew_hatch"] == "closed"
    assert manager.get_state(b)["doors"]["crew_hatch"] == "open"


def test_unknown_session_raises():
    manager = SessionManager(default_config_text())
    with pytest.raises(UnknownSession):
        manager.post_utterance("nope", "Stop.")


# -- HTTP API ------------------------------------------------------------------------


@pytest.fixture
def client():
    manager = SessionManager(default_config_text())
    return TestClient(build_app(manager, ui_dist=None))


def test_http_round_trip(client):
    created = client.post("/api/sessions", json={})
    assert created.status_code == 200
    session = created.json()["session"]

    answer = client.post("/api/utterance", json={"session": session, "utterance": "Close both doors."})
    events = answer.json()["events"]
    texts = [e["payload"]["text"] for e in events if e["type"] == "system_utterance"]
    assert texts == ["There are in fact three of them."]
    assert all(set(e) == {"type", "payload", "seq"} for e in events)

    state = client.get("/api/state", params={"session": session}).json()
    assert state["location"] == "crew_hatch"

    stream = client.get("/api/events", params={"session": session, "since": 0}).json()
    assert [e["seq"] for e in stream["events"]] == list(range(len(stream["events"])))


def test_http_error_schema(client):
    missing = client.post("/api/utterance", json={"session": "nope", "utterance": "hi"})
    assert missing.status_code == 404
    assert missing.json() == {
        "error": "UnknownSession", "detail": "no session 'nope'",
    }
    empty_session = client.post("/api/sessions", json={}).json()["session"]
    empty = client.post("/api/utterance", json={"session": empty_session, "utterance": "  "})
    assert empty.status_code == 400
    assert empty.json()["error"] == "EmptyUtterance"
