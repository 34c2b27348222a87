/** Pure view-state helpers: badge layout, selection math, history ordering. */

import type { AnnotationEvent, SpanView, TokenSelection } from './types.js';

/** Feature badges per token of one turn; a token may carry several. */
export function badgesForTurn(spans: SpanView[], turnIndex: number, nTokens: number): string[][] {
  const out: string[][] = Array.from({ length: nTokens }, () => []);
  for (const span of spans) {
    if (span.turn_index !== turnIndex) continue;
    const [start, end] = span.token_range;
    for (let t = start; t < end && t < nTokens; t++) {
      if (!out[t].includes(span.feature_id)) out[t].push(span.feature_id);
    }
  }
  return out;
}

/** Spans (with their delete handles) covering one token. */
export function spansAtToken(spans: SpanView[], turnIndex: number, token: number): SpanView[] {
  return spans.filter(
    (s) => s.turn_index === turnIndex && s.token_range[0] <= token && token < s.token_range[1],
  );
}

/** Drag selection: anchor/focus in either order, half-open result. */
export function normalizeSelection(
  turnIndex: number,
  anchorToken: number,
  focusToken: number,
): TokenSelection {
  const start = Math.min(anchorToken, focusToken);
  const end = Math.max(anchorToken, focusToken) + 1;
  return { turnIndex, start, end };
}

export function historyNewestFirst(events: AnnotationEvent[]): AnnotationEvent[] {
  return [...events].sort((a, b) => b.event_id - a.event_id);
}

export function describeEvent(event: AnnotationEvent, featureNames: Record<string, string>): string {
  const p = event.payload as Record<string, unknown>;
  switch (event.kind) {
    case 'span_added': {
      const range = p.token_range as [number, number];
      const name = featureNames[p.feature_id as string] ?? p.feature_id;
      return `#${event.event_id} ${event.annotator_id} marked ${name} on turn ${p.turn_index} [${range[0]}, ${range[1]})`;
    }
    case 'span_removed':
      return `#${event.event_id} ${event.annotator_id} removed span #${event.supersedes}`;
    case 'label_set':
      return `#${event.event_id} ${event.annotator_id} scored ${p.label_id} = ${p.score}`;
  }
}

/** Valid scores are exactly 1..5; the control never submits anything else. */
export const SCORE_VALUES = [1, 2, 3, 4, 5] as const;

export function isValidScore(value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= 5;
}
