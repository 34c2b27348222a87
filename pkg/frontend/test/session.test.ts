import { describe, expect, it } from 'vitest';

import { ApiClient, ServiceError } from '../src/api.js';
import { AnnotationSession } from '../src/session.js';
import type { FetchLike } from '../src/api.js';

/** Minimal in-memory stand-in for the service: event log + folded reads. */
function mockService() {
  interface Ev {
    event_id: number;
    kind: string;
    payload: Record<string, unknown>;
    supersedes?: number;
  }
  const events: Ev[] = [];
  const requests: string[] = [];
  let nextId = 1;

  const folded = () => {
    const removed = new Set(events.filter((e) => e.kind === 'span_removed').map((e) => e.supersedes));
    const spans = events
      .filter((e) => e.kind === 'span_added' && !removed.has(e.event_id))
      .map((e) => ({
        event_id: e.event_id,
        feature_id: e.payload.feature_id,
        turn_index: e.payload.turn_index,
        token_range: e.payload.token_range,
      }));
    const scores: Record<string, number> = {};
    for (const e of events) {
      if (e.kind === 'label_set') scores[e.payload.label_id as string] = e.payload.score as number;
    }
    return { spans, scores };
  };

  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? 'GET';
    const path = url.replace('http://svc', '');
    requests.push(`${method} ${path}`);
    const respond = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), { status });

    if (method === 'GET' && path === '/dialogues/d1') {
      return respond(200, {
        dialogue: {
          id: 'd1',
          topic: '',
          speakers: [{ speaker_id: 's', proficiency: null }],
          turns: [{ index: 0, speaker_id: 's', tokens: ['a', 'b', 'c', 'd'], raw_text: 'a b c d' }],
        },
        registry: [{ id: 'backchannels', name: 'Backchannels', level: 'utterance', description: '' }],
        labels: [{ id: 'topic', name: 'Topic', rubric: {} }],
        annotations: folded(),
      });
    }
    if (method === 'GET' && path === '/history/d1') {
      return respond(200, { events });
    }
    if (method === 'POST' && path === '/annotations/span') {
      const payload = JSON.parse(init!.body as string);
      const [start, end] = payload.token_range;
      if (start < 0 || end > 4 || start >= end) return respond(409, { detail: 'range outside turn' });
      events.push({ event_id: nextId, kind: 'span_added', payload });
      return respond(201, { event_id: nextId++ });
    }
    if (method === 'POST' && path === '/annotations/label') {
      events.push({ event_id: nextId, kind: 'label_set', payload: JSON.parse(init!.body as string) });
      return respond(201, { event_id: nextId++ });
    }
    if (method === 'DELETE' && path.startsWith('/annotations/span/')) {
      const target = Number(path.split('/').pop());
      const added = events.find((e) => e.event_id === target && e.kind === 'span_added');
      if (!added) return respond(404, { detail: 'no active span event' });
      events.push({ event_id: nextId, kind: 'span_removed', payload: added.payload, supersedes: target });
      return respond(200, { event_id: nextId++, removed: target });
    }
    return respond(404, { detail: `unhandled ${method} ${path}` });
  };

  return { fetchImpl, requests, events };
}

function session(svc = mockService()) {
  const api = new ApiClient('http://svc', 'tok', svc.fetchImpl);
  return { svc, s: new AnnotationSession(api, 'd1') };
}

describe('AnnotationSession', () => {
  it('mark span: one POST, then state mirrors the folded service state', async () => {
    const { svc, s } = session();
    await s.open();
    const eventId = await s.markSpan('backchannels', { turnIndex: 0, start: 1, end: 3 });
    expect(eventId).toBe(1);
    expect(svc.requests.filter((r) => r.startsWith('POST'))).toHaveLength(1);
    expect(s.spans).toEqual([
      { event_id: 1, feature_id: 'backchannels', turn_index: 0, token_range: [1, 3] },
    ]);
  });

  it('remove span: badge disappears after the service acknowledges', async () => {
    const { s } = session();
    await s.open();
    const eventId = await s.markSpan('backchannels', { turnIndex: 0, start: 0, end: 2 });
    await s.removeSpan(eventId);
    expect(s.spans).toEqual([]);
    expect(s.events.map((e) => e.kind)).toEqual(['span_added', 'span_removed']);
  });

  it('scorecard is last-write-wins and history keeps both events', async () => {
    const { s } = session();
    await s.open();
    await s.setScore('topic', 4);
    await s.setScore('topic', 5);
    expect(s.scores.topic).toBe(5);
    const labelEvents = s.events.filter((e) => e.kind === 'label_set');
    expect(labelEvents.map((e) => e.payload.score)).toEqual([4, 5]);
  });

  it('rejects out-of-range scores before any request is made', async () => {
    const { svc, s } = session();
    await s.open();
    const before = svc.requests.length;
    await expect(s.setScore('topic', 9)).rejects.toThrow('1..5');
    await expect(s.setScore('topic', 2.5)).rejects.toThrow('1..5');
    expect(svc.requests.length).toBe(before);
  });

  it('surfaces service errors with status codes', async () => {
    const { s } = session();
    await s.open();
    await expect(s.markSpan('backchannels', { turnIndex: 0, start: 2, end: 9 })).rejects.toThrow(
      ServiceError,
    );
  });
});
