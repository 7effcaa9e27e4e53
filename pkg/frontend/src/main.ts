import { ConsoleApp } from './app.js'
import { SessionClient } from './client.js'

const app = new ConsoleApp(new SessionClient(''), document)
app.start().catch((error) => {
  const banner = document.getElementById('exec-status')
  if (banner) banner.innerHTML = `<span class="banner">failed to start: ${String(error)}</span>`
})
