// Browser wiring: one event loop, one state object, full re-render on
// change.  User input never blocks rendering; the poll loop applies
// server events in seq order and a lost connection shows a banner while
// retrying.

import { SessionClient } from './client.js'
import {
  appendUserTurn,
  applyEvent,
  awaitingYesNo,
  initialViewState,
  withSnapshot,
} from './state.js'
import { renderChat, renderMap, renderSensors, renderStatus, renderTrace } from './render.js'
import type { ViewState } from './types.js'

export class ConsoleApp {
  state: ViewState = initialViewState()
  private session = ''
  private polled = 0

  constructor(
    private readonly client: SessionClient,
    private readonly root: Document,
  ) {}

  async start(): Promise<void> {
    this.session = await this.client.createSession()
    this.state = withSnapshot(this.state, await this.client.getState(this.session))
    this.bindInput()
    this.render()
    void this.pollLoop()
  }

  private bindInput(): void {
    const form = this.root.getElementById('say') as HTMLFormElement
    const input = this.root.getElementById('utterance') as HTMLInputElement
    form.addEventListener('submit', (event) => {
      event.preventDefault()
      const text = input.value.trim()
      if (!text) return
      input.value = ''
      void this.send(text)
    })
    this.root.getElementById('chat-panel')!.addEventListener('click', (event) => {
      const target = event.target as HTMLElement
      if (target.dataset.reply) void this.send(target.dataset.reply)
    })
  }

  async send(text: string): Promise<void> {
    this.state = appendUserTurn(this.state, text)
    this.render() // the user's turn shows immediately
    try {
      const events = await this.client.sendUtterance(this.session, text)
      for (const event of events) this.state = applyEvent(this.state, event)
      this.state = { ...this.state, connected: true }
    } catch (error) {
      this.state = { ...this.state, connected: false }
    }
    this.render()
  }

  private async pollLoop(): Promise<void> {
    for (;;) {
      try {
        const events = await this.client.pollEvents(this.session, this.polled, 800)
        for (const event of events) {
          this.polled = Math.max(this.polled, event.seq + 1)
          this.state = applyEvent(this.state, event)
        }
        if (!this.state.connected) this.state = { ...this.state, connected: true }
        this.render()
      } catch (error) {
        this.state = { ...this.state, connected: false }
        this.render()
        await new Promise((resolve) => setTimeout(resolve, 1000))
      }
    }
  }

  render(): void {
    const set = (id: string, html: string) => {
      const node = this.root.getElementById(id)
      if (node && node.innerHTML !== html) node.innerHTML = html
    }
    set('chat', renderChat(this.state))
    set('quick-replies', this.quickReplies())
    set('map', renderMap(this.state))
    set('sensors', renderSensors(this.state))
    set('trace', renderTrace(this.state))
    set('exec-status', renderStatus(this.state))
    const log = this.root.getElementById('chat')
    if (log) log.scrollTop = log.scrollHeight
  }

  private quickReplies(): string {
    if (!awaitingYesNo(this.state)) return ''
    // The buttons speak the literal words through the ordinary path;
    // the grammar stays the single entry point.
    return (
      '<button data-reply="yes">yes</button>' +
      '<button data-reply="no">no</button>'
    )
  }
}
