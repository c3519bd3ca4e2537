// Ranking app: one annotator per browser session walks the task queue.

import {
  fetchNextTask,
  submitBallot,
  LABELS,
  type Label,
  type TaskPayload,
} from './api.js'
import {
  emptyAssignment,
  isComplete,
  setRank,
  toOrdering,
  type RankAssignment,
  type RankValue,
} from './ranking.js'

const APP_HTML = `
  <header>
    <h1>Translation Quality Ranking</h1>
    <span id="progress"></span>
  </header>
  <section id="login">
    <p>Rank the three translations of each sentence from best (1) to worst (3).</p>
    <label>Annotator ID <input id="annotator-input" autocomplete="off"></label>
    <button id="start-btn">Start</button>
  </section>
  <section id="banner" hidden>
    <span id="banner-text"></span>
    <button id="retry-btn" hidden>Retry</button>
  </section>
  <section id="task-view" hidden>
    <div class="source-block">
      <h2>Source sentence</h2>
      <p id="source-text"></p>
    </div>
    <div id="outputs"></div>
    <p id="inline-error" class="error" hidden></p>
    <button id="submit-btn" disabled>Submit ranking</button>
  </section>
  <section id="done-view" hidden>
    <h2>All tasks completed</h2>
    <p id="done-note"></p>
  </section>
`

function cardHtml(label: Label): string {
  return `
    <div class="output-card" data-label="${label}">
      <h3>Translation ${label}</h3>
      <p class="output-text" id="output-${label}"></p>
      <div class="ranks">
        ${[1, 2, 3]
          .map(
            (rank) => `
          <label>
            <input type="radio" name="rank-${label}" data-label="${label}" value="${rank}">
            ${rank}${rank === 1 ? ' (best)' : rank === 3 ? ' (worst)' : ''}
          </label>`,
          )
          .join('')}
      </div>
    </div>`
}

export function mountApp(root: HTMLElement, base = ''): void {
  root.innerHTML = APP_HTML
  const el = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`)
    if (!node) throw new Error(`missing element #${id}`)
    return node
  }

  const login = el<HTMLElement>('login')
  const banner = el<HTMLElement>('banner')
  const bannerText = el<HTMLElement>('banner-text')
  const retryBtn = el<HTMLButtonElement>('retry-btn')
  const taskView = el<HTMLElement>('task-view')
  const doneView = el<HTMLElement>('done-view')
  const outputs = el<HTMLElement>('outputs')
  const submitBtn = el<HTMLButtonElement>('submit-btn')
  const inlineError = el<HTMLElement>('inline-error')
  const progress = el<HTMLElement>('progress')
  const annotatorInput = el<HTMLInputElement>('annotator-input')

  let annotatorId = ''
  let task: TaskPayload | null = null
  let assignment: RankAssignment = emptyAssignment()

  try {
    annotatorInput.value = window.localStorage.getItem('annotator_id') ?? ''
  } catch {
    // storage unavailable (private mode); id must be retyped
  }

  function show(section: 'login' | 'task' | 'done'): void {
    login.hidden = section !== 'login'
    taskView.hidden = section !== 'task'
    doneView.hidden = section !== 'done'
  }

  function showBanner(text: string, retry: (() => void) | null): void {
    bannerText.textContent = text
    banner.hidden = false
    retryBtn.hidden = retry === null
    retryBtn.onclick = retry
  }

  function clearBanner(): void {
    banner.hidden = true
    retryBtn.onclick = null
  }

  function renderRanks(): void {
    for (const label of LABELS) {
      const chosen = assignment[label]
      root
        .querySelectorAll<HTMLInputElement>(`input[name="rank-${label}"]`)
        .forEach((radio) => {
          radio.checked = chosen !== undefined && Number(radio.value) === chosen
        })
    }
    submitBtn.disabled = !isComplete(assignment)
  }

  function renderTask(payload: TaskPayload): void {
    task = payload
    assignment = emptyAssignment()
    el<HTMLElement>('source-text').textContent = payload.source_text
    outputs.innerHTML = LABELS.map(cardHtml).join('')
    for (const label of LABELS) {
      el<HTMLElement>(`output-${label}`).textContent = payload.outputs[label]
    }
    outputs.querySelectorAll<HTMLInputElement>('input[type="radio"]').forEach((radio) => {
      radio.addEventListener('change', () => {
        const label = radio.dataset.label as Label
        assignment = setRank(assignment, label, Number(radio.value) as RankValue)
        renderRanks()
      })
    })
    inlineError.hidden = true
    progress.textContent = `${payload.completed} / ${payload.total} done`
    renderRanks()
    show('task')
  }

  async function loadNext(): Promise<void> {
    clearBanner()
    inlineError.hidden = true
    try {
      const next = await fetchNextTask(base, annotatorId)
      if (next.kind === 'done') {
        const total = task ? task.total : 0
        el<HTMLElement>('done-note').textContent = total
          ? `You ranked all ${total} sentences. Thank you!`
          : 'Nothing left to rank. Thank you!'
        show('done')
        return
      }
      renderTask(next.task)
    } catch (err) {
      // the current view stays intact; a retry re-fetches with no data loss
      showBanner(`Could not reach the server (${String(err)})`, () => void loadNext())
    }
  }

  async function submit(): Promise<void> {
    if (!task || !isComplete(assignment)) return
    const ordering = toOrdering(assignment)
    submitBtn.disabled = true
    try {
      const result = await submitBallot(base, annotatorId, task.task_id, ordering)
      if (result.kind === 'ok') {
        await loadNext()
        return
      }
      if (result.kind === 'duplicate') {
        showBanner('Already submitted — advancing.', null)
        await loadNext()
        return
      }
      // invalid ordering: keep the ranks so the annotator can adjust
      inlineError.textContent = `Rejected: ${result.detail}`
      inlineError.hidden = false
      renderRanks()
    } catch (err) {
      showBanner(`Submission failed (${String(err)})`, () => void submit())
      renderRanks()
    }
  }

  el<HTMLButtonElement>('start-btn').addEventListener('click', () => {
    const value = annotatorInput.value.trim()
    if (!value) {
      annotatorInput.focus()
      return
    }
    annotatorId = value
    try {
      window.localStorage.setItem('annotator_id', value)
    } catch {
      // best effort only
    }
    void loadNext()
  })

  submitBtn.addEventListener('click', () => void submit())
}
