import assert from 'node:assert/strict'
import { test } from 'node:test'

import {
  appendUserTurn,
  applyEvent,
  awaitingYesNo,
  costEntriesForTurn,
  initialViewState,
  withSnapshot,
} from '../src/state.js'
import type { ServerEvent, ViewState, WorldSnapshot } from '../src/types.js'

const SNAPSHOT: WorldSnapshot = {
  position: 0,
  location: 'crew_hatch',
  clock: '15:10',
  doors: { crew_hatch: 'open', mid_hatch: 'open' },
  sensors: { co2: { crew_hatch: 1.0, flight_deck: 1.0 } },
  locations: { crew_hatch: 0.0, flight_deck: 1.0 },
  display_names: { crew_hatch: 'crew hatch', flight_deck: 'flight deck' },
  pending: null,
  execution: 'idle',
  trail: ['crew_hatch'],
}

function seeded(): ViewState {
  return withSnapshot(initialViewState(), SNAPSHOT)
}

function ev(seq: number, type: string, payload: object): ServerEvent {
  return { type, payload, seq } as ServerEvent
}

test('events apply in seq order even when delivered shuffled', () => {
  const events = [
    ev(0, 'execution_status', { status: 'running' }),
    ev(1, 'travel_started', { origin: 'crew_hatch', destination: 'flight_deck', duration_seconds: 30 }),
    ev(2, 'robot_moved', { position: 1.0, location: 'flight_deck', returning: false }),
    ev(3, 'execution_status', { status: 'idle' }),
  ]
  const inOrder = events.reduce(applyEvent, seeded())
  const shuffled = [events[2], events[0], events[3], events[1]].reduce(applyEvent, seeded())
  assert.deepEqual(shuffled, inOrder)
  assert.equal(inOrder.robot.location, 'flight_deck')
  assert.equal(inOrder.status, 'idle')
})

test('duplicate events are dropped', () => {
  const move = ev(0, 'robot_moved', { position: 1.0, location: 'flight_deck', returning: false })
  const once = applyEvent(seeded(), move)
  const twice = applyEvent(once, move)
  assert.deepEqual(twice, once)
  assert.deepEqual(twice.markerTrail, ['flight_deck'])
})

test('replaying the same log reproduces the same state', () => {
  const log = [
    ev(0, 'trace_record', { stage: 'parse', summary: 'x', meta: [] }),
    ev(1, 'system_utterance', { text: 'Which door do you mean?' }),
  ]
  const a = log.reduce(applyEvent, seeded())
  const b = log.reduce(applyEvent, seeded())
  assert.deepEqual(a, b)
})

test('unknown location shows an error badge without crashing', () => {
  const state = applyEvent(
    seeded(),
    ev(0, 'robot_moved', { position: 9.9, location: 'cargo_bay', returning: false }),
  )
  assert.equal(state.errorBadge, 'unknown location cargo_bay')
  assert.equal(state.robot.position, 9.9)
})

test('door change flips the badge source of truth', () => {
  const state = applyEvent(seeded(), ev(0, 'door_changed', { door: 'crew_hatch', status: 'closed' }))
  assert.equal(state.doors.crew_hatch, 'closed')
})

test('reports update the sensor panel', () => {
  const state = applyEvent(
    seeded(),
    ev(0, 'report_issued', { sensor: 'co2', location: 'flight_deck', time: null, value: 2.5, source: 'mobile' }),
  )
  assert.equal(state.sensors.co2.flight_deck, 2.5)
})

test('confirmation questions raise the yes/no quick replies', () => {
  let state = appendUserTurn(seeded(), 'Go to all three decks and measure carbon dioxide.')
  state = applyEvent(state, ev(0, 'system_utterance', { text: 'I will move to flight deck, okay?' }))
  assert.equal(awaitingYesNo(state), true)
  state = applyEvent(state, ev(1, 'system_utterance', { text: 'The carbon dioxide level at the flight deck is one percent.' }))
  assert.equal(awaitingYesNo(state), false)
})

test('traces attribute to the turn that produced them and carry costs', () => {
  let state = appendUserTurn(seeded(), 'What is the pressure?')
  state = applyEvent(state, ev(0, 'trace_record', { stage: 'evaluate', summary: 'cost 5 s', meta: ['cost(5)'] }))
  state = applyEvent(state, ev(1, 'execution_status', { status: 'running' }))
  assert.deepEqual(state.executedTurns, [1])
  assert.deepEqual(costEntriesForTurn(state, 1), ['cost(5)'])
})
