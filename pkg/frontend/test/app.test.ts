// Scripted end-to-end session against an in-memory fake of the ranking API.

import { beforeEach, describe, expect, it, vi } from 'vitest'

import { mountApp } from '../src/app.js'
import type { Label } from '../src/api.js'

const SYSTEMS = ['zero_shot', 'single_agent', 'maats'] as const
type System = (typeof SYSTEMS)[number]

interface FakeTask {
  task_id: string
  source_text: string
  outputs: Record<Label, string>
  assignment: Record<Label, System> // server-side only
}

class FakeServer {
  tasks: FakeTask[]
  ballots: { annotator: string; task_id: string; ordering: Label[] }[] = []
  failNextGet = false

  constructor(count: number) {
    this.tasks = Array.from({ length: count }, (_, i) => {
      const labels: Label[] = ['A', 'B', 'C']
      const rotated = [...SYSTEMS.slice(i % 3), ...SYSTEMS.slice(0, i % 3)]
      const assignment = Object.fromEntries(
        labels.map((label, j) => [label, rotated[j]]),
      ) as Record<Label, System>
      return {
        task_id: `t-${String(i + 1).padStart(4, '0')}`,
        source_text: `source sentence ${i + 1}`,
        outputs: Object.fromEntries(
          labels.map((label) => [label, `translation ${label} of ${i + 1}`]),
        ) as Record<Label, string>,
        assignment,
      }
    })
  }

  private answered(annotator: string): Set<string> {
    return new Set(
      this.ballots.filter((b) => b.annotator === annotator).map((b) => b.task_id),
    )
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input)
    const respond = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), { status })

    if (url.startsWith('/api/tasks/next')) {
      if (this.failNextGet) {
        this.failNextGet = false
        throw new TypeError('network down')
      }
      const annotator = new URLSearchParams(url.split('?')[1]).get('annotator') ?? ''
      const answered = this.answered(annotator)
      const task = this.tasks.find((t) => !answered.has(t.task_id))
      if (!task) {
        return respond(404, { error: 'no_tasks_remaining', detail: 'all done' })
      }
      return respond(200, {
        task_id: task.task_id,
        source_text: task.source_text,
        outputs: task.outputs,
        completed: answered.size,
        total: this.tasks.length,
      })
    }

    if (url.startsWith('/api/ballots')) {
      const body = JSON.parse(String(init?.body))
      const ordering = body.ordering as Label[]
      if ([...new Set(ordering)].sort().join('') !== 'ABC') {
        return respond(422, { error: 'invalid_ordering', detail: 'not a permutation' })
      }
      const annotator = body.annotator_id as string
      if (this.answered(annotator).has(body.task_id)) {
        return respond(409, { error: 'duplicate_ballot', detail: 'already ranked' })
      }
      if (!this.tasks.some((t) => t.task_id === body.task_id)) {
        return respond(404, { error: 'unknown_task', detail: body.task_id })
      }
      this.ballots.push({ annotator, task_id: body.task_id, ordering })
      return respond(200, {
        status: 'ok',
        completed: this.answered(annotator).size,
        total: this.tasks.length,
      })
    }
    return respond(404, { error: 'unknown_route', detail: url })
  }

  bordaPoints(): Record<System, number> {
    const points: Record<System, number> = { zero_shot: 0, single_agent: 0, maats: 0 }
    for (const ballot of this.ballots) {
      const task = this.tasks.find((t) => t.task_id === ballot.task_id)!
      ballot.ordering.forEach((label, position) => {
        points[task.assignment[label]] += 2 - position
      })
    }
    return points
  }
}

function rankRadio(label: Label, rank: number): HTMLInputElement {
  const radio = document.querySelector<HTMLInputElement>(
    `input[name="rank-${label}"][value="${rank}"]`,
  )
  if (!radio) throw new Error(`no radio for ${label}=${rank}`)
  return radio
}

function submitButton(): HTMLButtonElement {
  return document.querySelector<HTMLButtonElement>('#submit-btn')!
}

async function startSession(server: FakeServer, annotator = 'a1'): Promise<void> {
  vi.stubGlobal('fetch', server.fetch)
  document.body.innerHTML = '<div id="app"></div>'
  mountApp(document.getElementById('app')!)
  const input = document.querySelector<HTMLInputElement>('#annotator-input')!
  input.value = annotator
  document.querySelector<HTMLButtonElement>('#start-btn')!.click()
  await vi.waitFor(() => {
    expect(document.querySelector<HTMLElement>('#task-view')!.hidden).toBe(false)
  })
}

async function rankAndSubmit(ranks: Record<Label, number>): Promise<void> {
  const before = document.querySelector('#source-text')!.textContent
  for (const [label, rank] of Object.entries(ranks)) {
    rankRadio(label as Label, rank).click()
  }
  expect(submitButton().disabled).toBe(false)
  submitButton().click()
  await vi.waitFor(() => {
    const done = !document.querySelector<HTMLElement>('#done-view')!.hidden
    const advanced = document.querySelector('#source-text')!.textContent !== before
    expect(done || advanced).toBe(true)
  })
}

beforeEach(() => {
  vi.unstubAllGlobals()
  window.localStorage.clear()
})

describe('ranking app', () => {
  it('walks a five-task session and the server tally matches a hand computation', async () => {
    const server = new FakeServer(5)
    await startSession(server)

    const sessionRanks: Record<Label, number>[] = [
      { A: 1, B: 2, C: 3 },
      { B: 1, A: 2, C: 3 },
      { C: 1, B: 2, A: 3 },
      { A: 1, C: 2, B: 3 },
      { B: 1, C: 2, A: 3 },
    ]
    for (const ranks of sessionRanks) {
      // anonymization: no system name ever appears in the document
      for (const system of SYSTEMS) {
        expect(document.body.innerHTML).not.toContain(system)
      }
      await rankAndSubmit(ranks)
    }

    expect(document.querySelector<HTMLElement>('#done-view')!.hidden).toBe(false)
    expect(server.ballots).toHaveLength(5)
    expect(server.ballots.map((b) => b.ordering)).toEqual([
      ['A', 'B', 'C'],
      ['B', 'A', 'C'],
      ['C', 'B', 'A'],
      ['A', 'C', 'B'],
      ['B', 'C', 'A'],
    ])

    // Borda hand computation: resolve each ballot through the assignment
    const expected: Record<System, number> = { zero_shot: 0, single_agent: 0, maats: 0 }
    server.ballots.forEach((ballot) => {
      const task = server.tasks.find((t) => t.task_id === ballot.task_id)!
      ballot.ordering.forEach((label, position) => {
        expected[task.assignment[label]] += 2 - position
      })
    })
    expect(server.bordaPoints()).toEqual(expected)
    expect(Object.values(server.bordaPoints()).reduce((a, b) => a + b, 0)).toBe(15)
  })

  it('submit stays disabled until the ranking is a strict permutation', async () => {
    const server = new FakeServer(1)
    await startSession(server)
    expect(submitButton().disabled).toBe(true)
    rankRadio('A', 1).click()
    rankRadio('B', 2).click()
    expect(submitButton().disabled).toBe(true)
    // stealing an assigned rank keeps the assignment partial
    rankRadio('C', 2).click()
    expect(submitButton().disabled).toBe(true)
    rankRadio('B', 3).click()
    expect(submitButton().disabled).toBe(false)
  })

  it('shows a retry banner on connection failure and recovers without data loss', async () => {
    const server = new FakeServer(2)
    server.failNextGet = true
    vi.stubGlobal('fetch', server.fetch)
    document.body.innerHTML = '<div id="app"></div>'
    mountApp(document.getElementById('app')!)
    const input = document.querySelector<HTMLInputElement>('#annotator-input')!
    input.value = 'a1'
    document.querySelector<HTMLButtonElement>('#start-btn')!.click()

    await vi.waitFor(() => {
      expect(document.querySelector<HTMLElement>('#banner')!.hidden).toBe(false)
    })
    document.querySelector<HTMLButtonElement>('#retry-btn')!.click()
    await vi.waitFor(() => {
      expect(document.querySelector<HTMLElement>('#task-view')!.hidden).toBe(false)
    })
    expect(server.ballots).toHaveLength(0)
  })

  it('surfaces duplicate ballots as already-submitted and advances', async () => {
    const server = new FakeServer(2)
    // pre-seed the first task as answered, then force the app to resubmit it
    await startSession(server)
    server.ballots.push({ annotator: 'a1', task_id: 't-0001', ordering: ['A', 'B', 'C'] })
    rankRadio('A', 1).click()
    rankRadio('B', 2).click()
    rankRadio('C', 3).click()
    submitButton().click()
    await vi.waitFor(() => {
      expect(document.querySelector('#banner-text')!.textContent).toContain(
        'Already submitted',
      )
      expect(document.querySelector('#source-text')!.textContent).toContain('sentence 2')
    })
  })

  it('keeps ranks on an invalid-ordering rejection', async () => {
    const server = new FakeServer(1)
    const realFetch = server.fetch
    let rejectOnce = true
    vi.stubGlobal('fetch', async (input: RequestInfo | URL, init?: RequestInit) => {
      if (String(input).startsWith('/api/ballots') && rejectOnce) {
        rejectOnce = false
        return new Response(
          JSON.stringify({ error: 'invalid_ordering', detail: 'not a permutation' }),
          { status: 422 },
        )
      }
      return realFetch(input, init)
    })
    document.body.innerHTML = '<div id="app"></div>'
    mountApp(document.getElementById('app')!)
    document.querySelector<HTMLInputElement>('#annotator-input')!.value = 'a1'
    document.querySelector<HTMLButtonElement>('#start-btn')!.click()
    await vi.waitFor(() => {
      expect(document.querySelector<HTMLElement>('#task-view')!.hidden).toBe(false)
    })

    rankRadio('A', 1).click()
    rankRadio('B', 2).click()
    rankRadio('C', 3).click()
    submitButton().click()
    await vi.waitFor(() => {
      expect(document.querySelector<HTMLElement>('#inline-error')!.hidden).toBe(false)
    })
    // ranks preserved for correction
    expect(rankRadio('A', 1).checked).toBe(true)
    expect(rankRadio('B', 2).checked).toBe(true)
    expect(rankRadio('C', 3).checked).toBe(true)
    expect(submitButton().disabled).toBe(false)
  })
})
