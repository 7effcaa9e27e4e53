// Pure view-state reducer.  Every rendered fact traces back to a server
// event (or the initial snapshot); there is no client-side world
// simulation.  Events are applied strictly in seq order: gaps are
// buffered, duplicates dropped, so replaying any log of the same events
// reproduces the same state.

import type { ServerEvent, ViewState, WorldSnapshot } from './types.js'

export function initialViewState(): ViewState {
  return {
    chat: [],
    robot: { position: 0, location: null, movingToward: null },
    markerTrail: [],
    doors: {},
    sensors: {},
    locations: {},
    displayNames: {},
    traces: [],
    status: 'idle',
    executedTurns: [],
    turnCount: 0,
    nextSeq: 0,
    buffered: {},
    errorBadge: null,
    connected: true,
  }
}

export function withSnapshot(state: ViewState, snap: WorldSnapshot): ViewState {
  return {
    ...state,
    robot: { position: snap.position, location: snap.location, movingToward: null },
    doors: { ...snap.doors },
    sensors: structuredClone(snap.sensors),
    locations: { ...snap.locations },
    displayNames: { ...snap.display_names },
    status: snap.execution,
  }
}

export function appendUserTurn(state: ViewState, text: string): ViewState {
  const turn = state.turnCount + 1
  return {
    ...state,
    turnCount: turn,
    chat: [...state.chat, { role: 'user', text, turn }],
  }
}

export function applyEvent(state: ViewState, event: ServerEvent): ViewState {
  if (event.seq < state.nextSeq) return state // duplicate delivery
  if (event.seq > state.nextSeq) {
    return { ...state, buffered: { ...state.buffered, [event.seq]: event } }
  }
  let next = applyInOrder(state, event)
  next = { ...next, nextSeq: state.nextSeq + 1 }
  // drain anything that was waiting on this gap
  while (next.buffered[next.nextSeq]) {
    const queued = next.buffered[next.nextSeq]
    const rest = { ...next.buffered }
    delete rest[next.nextSeq]
    next = { ...applyInOrder(next, queued), buffered: rest, nextSeq: next.nextSeq + 1 }
  }
  return next
}

function applyInOrder(state: ViewState, event: ServerEvent): ViewState {
  switch (event.type) {
    case 'system_utterance':
      return {
        ...state,
        chat: [...state.chat, { role: 'psa', text: event.payload.text, turn: state.turnCount }],
      }
    case 'robot_moved': {
      const { position, location } = event.payload
      const known = location === null || location in state.locations
      return {
        ...state,
        robot: { position, location, movingToward: null },
        markerTrail: location ? [...state.markerTrail, location] : state.markerTrail,
        errorBadge: known ? state.errorBadge : `unknown location ${location}`,
      }
    }
    case 'travel_started': {
      const dest = event.payload.destination
      const known = dest in state.locations
      return {
        ...state,
        robot: { ...state.robot, movingToward: dest },
        errorBadge: known ? state.errorBadge : `unknown location ${dest}`,
      }
    }
    case 'door_changed': {
      const { door, status } = event.payload
      const known = door in state.locations
      return {
        ...state,
        doors: { ...state.doors, [door]: status },
        errorBadge: known ? state.errorBadge : `unknown door ${door}`,
      }
    }
    case 'report_issued': {
      const { sensor, location, value } = event.payload
      const bySensor = { ...(state.sensors[sensor] ?? {}), [location]: value }
      return { ...state, sensors: { ...state.sensors, [sensor]: bySensor } }
    }
    case 'trace_record':
      return {
        ...state,
        traces: [
          ...state.traces,
          {
            turn: state.turnCount,
            stage: event.payload.stage,
            summary: event.payload.summary,
            meta: [...event.payload.meta],
          },
        ],
      }
    case 'execution_status': {
      const status = event.payload.status
      const executedTurns =
        status === 'running' && !state.executedTurns.includes(state.turnCount)
          ? [...state.executedTurns, state.turnCount]
          : state.executedTurns
      return { ...state, status, executedTurns }
    }
  }
}

// The confirmation template always ends ", okay?"; offer quick replies.
export function awaitingYesNo(state: ViewState): boolean {
  const last = state.chat[state.chat.length - 1]
  return last !== undefined && last.role === 'psa' && last.text.endsWith('okay?')
}

export function costEntriesForTurn(state: ViewState, turn: number): string[] {
  const costs: string[] = []
  for (const trace of state.traces) {
    if (trace.turn <= turn) {
      for (const meta of trace.meta) {
        if (meta.startsWith('cost(')) costs.push(meta)
      }
    }
  }
  return costs
}
