// Typed client for the three ranking endpoints.

export type Label = 'A' | 'B' | 'C'
export const LABELS: Label[] = ['A', 'B', 'C']

export interface TaskPayload {
  task_id: string
  source_text: string
  outputs: Record<Label, string>
  completed: number
  total: number
}

export interface Progress {
  annotator_id: string
  completed: number
  total: number
}

export type NextTask = { kind: 'task'; task: TaskPayload } | { kind: 'done' }

export type SubmitResult =
  | { kind: 'ok'; completed: number; total: number }
  | { kind: 'duplicate' }
  | { kind: 'invalid'; detail: string }

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code)
  }
}

async function errorBody(resp: Response): Promise<{ error: string; detail: string }> {
  try {
    const body = await resp.json()
    return { error: body.error ?? 'unknown_error', detail: body.detail ?? '' }
  } catch {
    return { error: 'unknown_error', detail: `http ${resp.status}` }
  }
}

export async function fetchNextTask(base: string, annotator: string): Promise<NextTask> {
  const resp = await fetch(`${base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`)
  if (resp.ok) {
    return { kind: 'task', task: (await resp.json()) as TaskPayload }
  }
  const body = await errorBody(resp)
  if (resp.status === 404 && body.error === 'no_tasks_remaining') {
    return { kind: 'done' }
  }
  throw new ApiError(resp.status, body.error, body.detail)
}

export async function submitBallot(
  base: string,
  annotatorId: string,
  taskId: string,
  ordering: Label[],
): Promise<SubmitResult> {
  const resp = await fetch(`${base}/api/ballots`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ annotator_id: annotatorId, task_id: taskId, ordering }),
  })
  if (resp.ok) {
    const body = await resp.json()
    return { kind: 'ok', completed: body.completed, total: body.total }
  }
  const body = await errorBody(resp)
  if (resp.status === 409 && body.error === 'duplicate_ballot') {
    return { kind: 'duplicate' }
  }
  if (resp.status === 422 && body.error === 'invalid_ordering') {
    return { kind: 'invalid', detail: body.detail }
  }
  throw new ApiError(resp.status, body.error, body.detail)
}

export async function fetchProgress(base: string, annotator: string): Promise<Progress> {
  const resp = await fetch(`${base}/api/progress?annotator=${encodeURIComponent(annotator)}`)
  if (!resp.ok) {
    const body = await errorBody(resp)
    throw new ApiError(resp.status, body.error, body.detail)
  }
  return (await resp.json()) as Progress
}
