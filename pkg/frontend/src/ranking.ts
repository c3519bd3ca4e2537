// Pure rank-assignment state: three exclusive rank selectors over labels A/B/C.

import { LABELS, type Label } from './api.js'

export type RankValue = 1 | 2 | 3
export type RankAssignment = Partial<Record<Label, RankValue>>

export function emptyAssignment(): RankAssignment {
  return {}
}

// Assigning rank r to a label steals r from whichever label held it, so the
// assignment can never contain a duplicate rank.
export function setRank(current: RankAssignment, label: Label, rank: RankValue): RankAssignment {
  const next: RankAssignment = { ...current }
  for (const other of LABELS) {
    if (other !== label && next[other] === rank) {
      delete next[other]
    }
  }
  next[label] = rank
  return next
}

export function isComplete(assignment: RankAssignment): boolean {
  const ranks = LABELS.map((label) => assignment[label])
  if (ranks.some((rank) => rank === undefined)) return false
  return new Set(ranks).size === 3
}

// Labels best to worst; only valid on a complete strict permutation.
export function toOrdering(assignment: RankAssignment): Label[] {
  if (!isComplete(assignment)) {
    throw new Error('ranking is incomplete')
  }
  return [...LABELS].sort((a, b) => (assignment[a] as number) - (assignment[b] as number))
}
