// Wire types for the session service, mirroring the server schemas.

export type ServerEvent =
  | { type: 'system_utterance'; payload: { text: string }; seq: number }
  | {
      type: 'robot_moved'
      payload: { position: number; location: string | null; returning: boolean }
      seq: number
    }
  | {
      type: 'travel_started'
      payload: { origin: string | null; destination: string; duration_seconds: number }
      seq: number
    }
  | { type: 'door_changed'; payload: { door: string; status: string }; seq: number }
  | {
      type: 'report_issued'
      payload: {
        sensor: string
        location: string
        time: string | null
        value: number
        source: string
      }
      seq: number
    }
  | {
      type: 'trace_record'
      payload: { stage: string; summary: string; meta: string[] }
      seq: number
    }
  | { type: 'execution_status'; payload: { status: ExecStatus }; seq: number }

export type ExecStatus = 'idle' | 'running' | 'interrupted'

export interface WorldSnapshot {
  position: number
  location: string | null
  clock: string
  doors: Record<string, string>
  sensors: Record<string, Record<string, number>>
  locations: Record<string, number>
  display_names: Record<string, string>
  pending: { kind: string; detail: string | null } | null
  execution: ExecStatus
  trail: string[]
}

export interface ChatTurn {
  role: 'user' | 'psa'
  text: string
  turn: number
}

export interface TraceEntry {
  turn: number
  stage: string
  summary: string
  meta: string[]
}

export interface ViewState {
  chat: ChatTurn[]
  robot: {
    position: number
    location: string | null
    movingToward: string | null
  }
  markerTrail: string[]
  doors: Record<string, string>
  sensors: Record<string, Record<string, number>>
  locations: Record<string, number>
  displayNames: Record<string, string>
  traces: TraceEntry[]
  status: ExecStatus
  executedTurns: number[]
  turnCount: number
  nextSeq: number
  buffered: Record<number, ServerEvent>
  errorBadge: string | null
  connected: boolean
}
