// Thin fetch client for the session service; the only data source the
// console has.

import type { ServerEvent, WorldSnapshot } from './types.js'

export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`)
  }
}

async function check(response: Response): Promise<any> {
  const body = await response.json()
  if (!response.ok) {
    throw new ApiError(body.error ?? `http_${response.status}`, body.detail ?? '')
  }
  return body
}

export class SessionClient {
  constructor(readonly base: string = '') {}

  async createSession(pacing?: string): Promise<string> {
    const body = await check(
      await fetch(`${this.base}/api/sessions`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(pacing ? { pacing } : {}),
      }),
    )
    return body.session
  }

  async sendUtterance(session: string, utterance: string): Promise<ServerEvent[]> {
    const body = await check(
      await fetch(`${this.base}/api/utterance`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({ session, utterance }),
      }),
    )
    return body.events
  }

  async getState(session: string): Promise<WorldSnapshot> {
    return check(await fetch(`${this.base}/api/state?session=${encodeURIComponent(session)}`))
  }

  async pollEvents(session: string, since: number, waitMs = 400): Promise<ServerEvent[]> {
    const url =
      `${this.base}/api/events?session=${encodeURIComponent(session)}` +
      `&since=${since}&wait_ms=${waitMs}`
    const body = await check(await fetch(url))
    return body.events
  }
}
