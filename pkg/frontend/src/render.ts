// HTML renderers: pure functions of ViewState, so re-rendering the same
// state always yields the same markup.

import type { ViewState } from './types.js'

function esc(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
}

export function renderChat(state: ViewState): string {
  const bubbles = state.chat.map(
    (turn) => `<div class="bubble ${turn.role}">${esc(turn.text)}</div>`,
  )
  return bubbles.join('\n')
}

// The shuttle is a 1-D line; place markers by coordinate percentage.
export function mapPercent(state: ViewState, coordinate: number): number {
  const coords = Object.values(state.locations)
  if (coords.length === 0) return 0
  const lo = Math.min(...coords)
  const hi = Math.max(...coords)
  if (hi === lo) return 50
  return ((coordinate - lo) / (hi - lo)) * 100
}

export function renderMap(state: ViewState): string {
  const stops = Object.entries(state.locations)
    .sort((a, b) => a[1] - b[1])
    .map(([name, coord]) => {
      const left = mapPercent(state, coord).toFixed(1)
      const door = state.doors[name]
      const badge =
        door !== undefined
          ? `<span class="door ${door}" data-door="${esc(name)}">${door === 'open' ? '▢' : '▣'}</span>`
          : ''
      return (
        `<div class="stop" style="left:${left}%" data-location="${esc(name)}">` +
        `<span class="tick"></span>${badge}` +
        `<span class="label">${esc(state.displayNames[name] ?? name)}</span></div>`
      )
    })
  const robotLeft = mapPercent(state, state.robot.position).toFixed(1)
  const moving = state.robot.movingToward
  const robot =
    `<div class="robot ${moving ? 'moving' : ''}" style="left:${robotLeft}%" ` +
    `data-location="${esc(state.robot.location ?? '')}" ` +
    `data-toward="${esc(moving ?? '')}">●</div>`
  const badge = state.errorBadge
    ? `<div class="error-badge">${esc(state.errorBadge)}</div>`
    : ''
  return `<div class="line"></div>\n${stops.join('\n')}\n${robot}\n${badge}`
}

export function renderSensors(state: ViewState): string {
  const rows: string[] = []
  const locations = Object.keys(state.locations)
  for (const [sensor, byLocation] of Object.entries(state.sensors)) {
    const cells = locations
      .map((loc) => `<td>${byLocation[loc] !== undefined ? byLocation[loc] : '—'}</td>`)
      .join('')
    rows.push(`<tr><th>${esc(sensor)}</th>${cells}</tr>`)
  }
  const heads = locations
    .map((loc) => `<th class="loc">${esc(state.displayNames[loc] ?? loc)}</th>`)
    .join('')
  return `<table><tr><th></th>${heads}</tr>${rows.join('')}</table>`
}

export function renderTrace(state: ViewState): string {
  const rows = state.traces.map((trace) => {
    const meta = trace.meta.length
      ? ` <span class="meta">[${trace.meta.map(esc).join(', ')}]</span>`
      : ''
    const dubious = trace.meta.some((m) => m.includes('dubious_lf')) ? ' dubious' : ''
    return (
      `<div class="trace-row${dubious}" data-turn="${trace.turn}">` +
      `<span class="stage">${esc(trace.stage)}</span> ` +
      `<pre class="summary">${esc(trace.summary)}</pre>${meta}</div>`
    )
  })
  return rows.join('\n')
}

export function renderStatus(state: ViewState): string {
  const connection = state.connected ? '' : '<span class="banner">connection lost, retrying…</span>'
  return `<span class="status ${state.status}">${state.status}</span>${connection}`
}
