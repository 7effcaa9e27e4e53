"""Acceptance suite.

One test per acceptance criterion; each prints a PASS/FAIL line so a
plain ``pytest -s tests/test_acceptance.py`` reads as a checklist.
Tolerances are pinned here: transcript strings are byte-exact,
optimizer costs are exactly equal to the brute-force oracle, purity is
bit-identity of the world digest, and the stop window is 50-500 ms of
real time at scaled pacing.
"""

import itertools
import random
import threading
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from script_gen import random_script

from psabot import interpreter
from psabot.cli import run_transcript
from psabot.discourse import RGoto, RMeasure
from psabot.dm import MISHEARD, DialogueManager
from psabot.lingform import Lexicon, OutOfGrammar, detect_dubious, parse, tokenize
from psabot.script import itinerary_loops, optimize
from psabot.service import Pacing, SessionEngine
from psabot.world import load_config, load_default

GOLDEN = Path(__file__).resolve().parents[1] / "dialogues" / "psa_section5.txt"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {name}: PASS")


# -- 1. golden transcript ---------------------------------------------------------


def test_criterion_golden_transcript():
    with criterion("golden-transcript"):
        started = time.perf_counter()
        code, report = run_transcript(GOLDEN, load_default())
        elapsed = time.perf_counter() - started
        assert code == 0, f"transcript diff:\n{report}"
        assert elapsed < 1.0, f"took {elapsed:.2f}s, budget is 1s"


# -- 2. optimizer oracle ------------------------------------------------------------


def _random_line_world(rng, n):
    coords = {f"site_{i}": round(rng.uniform(0.0, 10.0), 3) for i in range(n)}
    start = rng.choice(list(coords))
    lines = ["[locations]"]
    lines += [f"{name} = {coord}" for name, coord in coords.items()]
    lines.append("[sorts]")
    lines += [f"{name} = location" for name in coords]
    lines += ["[doors]", "[robot]", f"start = {start}", "[clock]", "initial = 15:10"]
    lines += ["[sensors.temperature]", "default = 19.9", "unit = celsius"]
    return load_config("\n".join(lines))


def _table_cost(world, order):
    """Straight off the cost table, no interpreter involved."""
    here = world.position
    cost = 0.0
    for place in order:
        cost += 30.0 * abs(world.locations[place] - here) + 5.0
        here = world.locations[place]
    return cost


def _itinerary(places):
    from psabot.discourse import Binding, ResolvedForm
    from psabot.script import compile_form

    return compile_form(ResolvedForm(frames=(
        RGoto(Binding(tuple(places), (False,) * len(places), "explicit", None)),
        RMeasure("temperature", None, None, "mobile"),
    )))


def test_criterion_optimizer_oracle():
    with criterion("optimizer-oracle"):
        rng = random.Random(2024)
        for _ in range(200):
            world = _random_line_world(rng, rng.randint(4, 6))
            places = tuple(world.locations)

            def evaluator(script):
                return interpreter.evaluate(script, world).cost_seconds

            script, metas = optimize(_itinerary(places), evaluator)
            chosen = itinerary_loops(script)[0].values
            chosen_cost = metas[0].payload.seconds

            # Oracle: enumerate every permutation, evaluate each, take
            # the minimum.  Exact equality is required.
            oracle_min = min(
                evaluator(_itinerary(order)) for order in itertools.permutations(places)
            )
            assert chosen_cost == oracle_min, (
                f"order {chosen} costs {chosen_cost}, oracle minimum {oracle_min}"
            )
            # Cross-check the evaluator's cost model against the raw
            # table formula (different summation order: approximate).
            assert chosen_cost == pytest.approx(_table_cost(world, chosen), rel=1e-9)


# -- 3. evaluate purity ---------------------------------------------------------------


def test_criterion_evaluate_purity():
    with criterion("evaluate-purity"):
        rng = random.Random(11)
        world = load_default()
        for _ in range(500):
            script = random_script(rng, world)
            digest = world.digest()
            applies = world.apply_count
            interpreter.evaluate(script, world)
            assert world.digest() == digest, "evaluation touched the live world"
            assert world.apply_count == applies, "evaluation sent effector events"


# -- 4. evaluate/execute consistency ---------------------------------------------------


def test_criterion_evaluate_execute_consistency():
    with criterion("evaluate-execute-consistency"):
        rng = random.Random(12)
        checked = 0
        for _ in range(500):
            probe = load_default()
            script = random_script(rng, probe)
            prediction = interpreter.evaluate(script, probe)
            if any(m.is_failure for m in prediction.meta):
                continue
            interpreter.run(script, interpreter.EXECUTE, probe)
            final = probe.snapshot()
            assert final.position == prediction.final_state.position
            assert final.doors == prediction.final_state.doors
            assert final.clock == prediction.final_state.clock
            checked += 1
        assert checked >= 100, f"only {checked} failure-free scripts; widen the generator"


# -- 5. meta-output discipline ----------------------------------------------------------


def _random_turns(rng, world, count):
    places = list(world.locations)
    doors = list(world.doors)
    sensors = {"co2": "carbon dioxide", "temperature": "temperature", "pressure": "pressure"}
    display = {name: world.display(name) for name in world.locations}

    def place():
        return display[rng.choice(places)]

    def door():
        return display[rng.choice(doors)]

    makers = [
        lambda: f"go to {place()}",
        lambda: f"move to {place()} and {place()}",
        lambda: f"go to {place()} and close {door()}",
        lambda: f"measure {rng.choice(list(sensors.values()))}",
        lambda: f"what is the {rng.choice(list(sensors.values()))}",
        lambda: f"open the {door()}",
        lambda: f"close {door()}",
        lambda: "close the door",
        lambda: "open it",
        lambda: "close both doors",
        lambda: "go to all three decks",
        lambda: "go back",
        lambda: "stop",
        lambda: "do that again",
        lambda: f"do the same for the {place()}",
        lambda: f"the {place()}",
        lambda: "yes",
        lambda: "no",
        lambda: "it and flight deck",
        lambda: f"go to it and {place()}",
        lambda: "open it and it",
        lambda: "purge the warp core",
        lambda: "hello hello",
    ]
    return [rng.choice(makers)() for _ in range(count)]


def _is_dubious_input(text, lexicon):
    try:
        lf = parse(tokenize(text), lexicon)
    except OutOfGrammar:
        return True
    return bool(detect_dubious(lf))


def test_criterion_meta_output_discipline():
    with criterion("meta-output-discipline"):
        world = load_default()
        dm = DialogueManager(world)
        lexicon = Lexicon(world)
        golden_users = [
            line.strip()[5:].strip()
            for line in GOLDEN.read_text().splitlines()
            if line.strip().startswith("USER:")
        ]
        rng = random.Random(31)
        turns = golden_users + _random_turns(rng, world, 500)
        assert "it and flight deck" in turns
        for text in turns:
            plan = dm.process_utterance(text)
            assert len(plan.move.realized_meta) <= 1, (
                f"{text!r} realized {len(plan.move.realized_meta)} meta-outputs"
            )
            if _is_dubious_input(text, lexicon):
                assert plan.text == MISHEARD, f"{text!r} -> {plan.text!r}"
            visited = ()
            if plan.script is not None:
                outcome = interpreter.run(plan.script, interpreter.EXECUTE, world)
                visited = tuple(
                    e.location for e in outcome.events if isinstance(e, interpreter.Arrived)
                )
            dm.finish_turn(plan, visited=visited)


# -- 6. hazard bypass ----------------------------------------------------------------------


def test_criterion_hazard_bypass():
    with criterion("hazard-bypass"):
        for delay in (0.05, 0.11, 0.2, 0.34, 0.5):
            engine = SessionEngine(load_default(), Pacing.parse("scaled:60"))
            engine.post_utterance(
                "Move to storage lockers, commander's seat and flight deck and measure temperature."
            )
            engine.post_utterance("sure")
            pump = threading.Thread(target=engine.run_pump, daemon=True)
            pump.start()
            time.sleep(delay)  # plan runs ~2.2 s of real time at scaled:60
            stop_events = engine.post_utterance("Stop.")
            pump.join(timeout=5)
            texts = [e.payload for e in stop_events if e.type == "system_utterance"]
            assert texts == [], f"stop at {delay}s spoke: {texts}"
            statuses = [
                e.payload["status"] for e in stop_events if e.type == "execution_status"
            ]
            assert "interrupted" in statuses, f"stop at {delay}s did not interrupt"

            # Independent derivation of "the last fully visited location":
            # the start plus every arrival the event stream reported,
            # ignoring wherever the robot halted.
            visited = ["crew_hatch"] + [
                e.payload["location"] for e in engine.events
                if e.type == "robot_moved" and e.payload.get("location")
            ]
            position = engine.world.position
            expected = next(
                name for name in reversed(visited)
                if abs(engine.world.locations[name] - position) > 1e-9
            )

            back_events = engine.post_utterance("Go back.")
            while engine.execution_active:
                stepped, _pause = engine.step()
                back_events.extend(stepped)
            confirmations = [
                e for e in back_events
                if e.type == "system_utterance" and e.payload["text"].endswith("okay?")
            ]
            assert confirmations == [], "go back must not ask for confirmation"
            assert engine.world.position_name == expected, (
                f"expected return to {expected}, at {engine.world.position_name}"
            )


# -- 7. clarification override ----------------------------------------------------------------


def test_criterion_clarification_override():
    with criterion("clarification-override"):
        engine = SessionEngine(load_default(), Pacing.parse("instant"))
        # Make the crew hatch closed and salient.
        engine.post_utterance("Go to crew hatch and close it.")
        assert engine.world.doors["crew_hatch"] == "closed"

        first = engine.post_utterance("Close the door.")
        texts = [e.payload["text"] for e in first if e.type == "system_utterance"]
        assert texts == ["Which door do you mean?"], texts

        second = engine.post_utterance("The crew hatch.")
        texts = [e.payload["text"] for e in second if e.type == "system_utterance"]
        assert texts == ["The crew hatch is already closed."], texts
