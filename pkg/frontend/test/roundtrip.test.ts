// Round trip against the real service: every USER line of the shipped
// dialogue goes through the console's client and reducer, and the test
// asserts the exact PSA strings appear in the chat, the robot marker
// follows the action annotations, and the trace drawer holds a cost
// entry for every executed plan.
//
// The server runs at scaled pacing so the mid-travel "Stop." exchange
// is real: the test posts it the moment the marker starts moving toward
// the commander's seat, exactly as a human operator would.

import assert from 'node:assert/strict'
import { test } from 'node:test'
import { spawn } from 'node:child_process'
import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import { SessionClient } from '../src/client.js'
import {
  appendUserTurn,
  applyEvent,
  costEntriesForTurn,
  initialViewState,
  withSnapshot,
} from '../src/state.js'
import type { ViewState } from '../src/types.js'

const HERE = dirname(fileURLToPath(import.meta.url))
const REPO = join(HERE, '..', '..', '..')
const GOLDEN = join(REPO, 'dialogues', 'psa_section5.txt')
const PORT = 18000 + Math.floor(Math.random() * 10000)
const BASE = `http://127.0.0.1:${PORT}`

type Expect =
  | { kind: 'psa'; text: string }
  | { kind: 'moves'; place: string }
  | { kind: 'starts'; place: string }
  | { kind: 'stops' }
  | { kind: 'door'; place: string; status: string }
type Entry = { kind: 'user'; text: string } | Expect

function parseTranscript(text: string, byDisplay: Map<string, string>): Entry[] {
  const entries: Entry[] = []
  const placeOf = (display: string): string => {
    const entity = byDisplay.get(display.replace(/^the /, '').trim())
    assert.ok(entity, `unknown place in transcript: ${display}`)
    return entity
  }
  for (const raw of text.split('\n')) {
    const line = raw.trim()
    if (!line || line.startsWith('#')) continue
    if (line.startsWith('USER:')) entries.push({ kind: 'user', text: line.slice(5).trim() })
    else if (line.startsWith('PSA:')) entries.push({ kind: 'psa', text: line.slice(4).trim() })
    else if (line.startsWith('[') && line.endsWith(']')) {
      const inner = line.slice(1, -1)
      let m: RegExpMatchArray | null
      if ((m = inner.match(/^PSA starts moving to (.+)$/)))
        entries.push({ kind: 'starts', place: placeOf(m[1]) })
      else if ((m = inner.match(/^PSA (?:moves|returns) to (.+)$/)))
        entries.push({ kind: 'moves', place: placeOf(m[1]) })
      else if (inner === 'PSA stops') entries.push({ kind: 'stops' })
      else if ((m = inner.match(/^PSA (opens|closes) (.+)$/)))
        entries.push({
          kind: 'door',
          place: placeOf(m[2]),
          status: m[1] === 'opens' ? 'open' : 'closed',
        })
      else assert.fail(`unrecognized annotation: ${line}`)
    } else assert.fail(`unrecognized transcript line: ${line}`)
  }
  return entries
}

class Harness {
  state: ViewState = initialViewState()
  private polled = 0

  constructor(
    private readonly client: SessionClient,
    private readonly session: string,
  ) {}

  async seed(): Promise<void> {
    this.state = withSnapshot(this.state, await this.client.getState(this.session))
  }

  async send(text: string): Promise<void> {
    this.state = appendUserTurn(this.state, text)
    const events = await this.client.sendUtterance(this.session, text)
    for (const event of events) this.state = applyEvent(this.state, event)
  }

  async pump(): Promise<void> {
    const events = await this.client.pollEvents(this.session, this.polled, 200)
    for (const event of events) {
      this.polled = Math.max(this.polled, event.seq + 1)
      this.state = applyEvent(this.state, event)
    }
  }

  async waitFor(what: string, predicate: (s: ViewState) => boolean, timeoutMs = 15000): Promise<void> {
    const deadline = Date.now() + timeoutMs
    while (Date.now() < deadline) {
      if (predicate(this.state)) return
      await this.pump()
      await new Promise((resolve) => setTimeout(resolve, 40))
    }
    assert.fail(`timed out waiting for ${what}`)
  }
}

async function startServer(): Promise<() => void> {
  const child = spawn(
    'python3',
    ['-m', 'psabot', '--serve', '--host', '127.0.0.1', '--port', String(PORT), '--pacing', 'scaled:60'],
    { cwd: REPO, stdio: ['ignore', 'pipe', 'pipe'] },
  )
  const stderr: string[] = []
  child.stderr.on('data', (chunk) => stderr.push(String(chunk)))
  const client = new SessionClient(BASE)
  const deadline = Date.now() + 20000
  for (;;) {
    try {
      const probe = await client.createSession()
      assert.ok(probe)
      break
    } catch {
      if (Date.now() > deadline) {
        child.kill()
        assert.fail(`server did not come up: ${stderr.join('')}`)
      }
      await new Promise((resolve) => setTimeout(resolve, 150))
    }
  }
  return () => child.kill()
}

test('golden dialogue round trip through the console', { timeout: 180000 }, async () => {
  const stopServer = await startServer()
  try {
    const client = new SessionClient(BASE)
    const session = await client.createSession()
    const harness = new Harness(client, session)
    await harness.seed()

    const byDisplay = new Map(
      Object.entries(harness.state.displayNames).map(([id, display]) => [display, id]),
    )
    const entries = parseTranscript(readFileSync(GOLDEN, 'utf-8'), byDisplay)

    let psaSeen = 0
    let arrivalsSeen = 0
    for (const entry of entries) {
      if (entry.kind === 'user') {
        await harness.send(entry.text)
      } else if (entry.kind === 'psa') {
        const index = psaSeen
        await harness.waitFor(`PSA line ${JSON.stringify(entry.text)}`, (s) => {
          const psa = s.chat.filter((t) => t.role === 'psa')
          return psa.length > index
        })
        const psa = harness.state.chat.filter((t) => t.role === 'psa')
        assert.equal(psa[index].text, entry.text)
        psaSeen += 1
      } else if (entry.kind === 'moves') {
        const index = arrivalsSeen
        await harness.waitFor(`marker at ${entry.place}`, (s) => s.markerTrail.length > index)
        assert.equal(harness.state.markerTrail[index], entry.place)
        arrivalsSeen += 1
      } else if (entry.kind === 'starts') {
        await harness.waitFor(
          `marker moving toward ${entry.place}`,
          (s) => s.robot.movingToward === entry.place,
        )
      } else if (entry.kind === 'stops') {
        await harness.waitFor('interrupted status', (s) => s.status === 'interrupted')
      } else {
        await harness.waitFor(
          `door ${entry.place} ${entry.status}`,
          (s) => s.doors[entry.place] === entry.status,
        )
      }
    }

    // No stray PSA lines beyond the golden expectations.
    await harness.pump()
    const psa = harness.state.chat.filter((t) => t.role === 'psa')
    assert.equal(psa.length, psaSeen)

    // Every executed plan left a cost entry in the trace drawer.
    assert.ok(harness.state.executedTurns.length >= 5)
    for (const turn of harness.state.executedTurns) {
      assert.ok(
        costEntriesForTurn(harness.state, turn).length > 0,
        `no cost trace for executed turn ${turn}`,
      )
    }
  } finally {
    stopServer()
  }
})
