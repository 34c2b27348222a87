/** Typed fetch client for the annotation service. The UI talks to nothing else. */

import type { AnnotationEvent, DialogueDetail, DialogueSummary } from './types.js';

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        'Content-Type': 'application/json',
        ...(init.headers ?? {}),
      },
    });
    if (!res.ok) {
      const body = await res.json().catch(() => ({ detail: res.statusText }));
      const detail = typeof body.detail === 'string' ? body.detail : JSON.stringify(body.detail);
      throw new ServiceError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  listDialogues(): Promise<{ annotator_id: string; dialogues: DialogueSummary[] }> {
    return this.request('/dialogues');
  }

  getDialogue(id: string): Promise<DialogueDetail> {
    return this.request(`/dialogues/${encodeURIComponent(id)}`);
  }

  postSpan(
    dialogueId: string,
    featureId: string,
    turnIndex: number,
    tokenRange: [number, number],
  ): Promise<{ event_id: number }> {
    return this.request('/annotations/span', {
      method: 'POST',
      body: JSON.stringify({
        dialogue_id: dialogueId,
        feature_id: featureId,
        turn_index: turnIndex,
        token_range: tokenRange,
      }),
    });
  }

  postLabel(dialogueId: string, labelId: string, score: number): Promise<{ event_id: number }> {
    return this.request('/annotations/label', {
      method: 'POST',
      body: JSON.stringify({ dialogue_id: dialogueId, label_id: labelId, score }),
    });
  }

  deleteSpan(eventId: number): Promise<{ event_id: number; removed: number }> {
    return this.request(`/annotations/span/${eventId}`, { method: 'DELETE' });
  }

  history(dialogueId: string): Promise<{ events: AnnotationEvent[] }> {
    return this.request(`/history/${encodeURIComponent(dialogueId)}`);
  }

  export(): Promise<unknown> {
    return this.request('/export');
  }
}
