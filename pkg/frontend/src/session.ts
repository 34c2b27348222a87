/**
 * One annotator's working session over one dialogue.
 *
 * Every mutation is exactly one service request; after the service
 * acknowledges, the session re-fetches the folded state so the local view
 * never drifts from the server (no client-only state survives a reload).
 */

import { ApiClient } from './api.js';
import type { DialogueDetail, AnnotationEvent, TokenSelection } from './types.js';
import { isValidScore } from './state.js';

export class AnnotationSession {
  detail: DialogueDetail | null = null;
  events: AnnotationEvent[] = [];

  constructor(
    readonly api: ApiClient,
    readonly dialogueId: string,
  ) {}

  async open(): Promise<DialogueDetail> {
    this.detail = await this.api.getDialogue(this.dialogueId);
    this.events = (await this.api.history(this.dialogueId)).events;
    return this.detail;
  }

  private async refresh(): Promise<void> {
    this.detail = await this.api.getDialogue(this.dialogueId);
    this.events = (await this.api.history(this.dialogueId)).events;
  }

  async markSpan(featureId: string, selection: TokenSelection): Promise<number> {
    const { event_id } = await this.api.postSpan(this.dialogueId, featureId, selection.turnIndex, [
      selection.start,
      selection.end,
    ]);
    await this.refresh();
    return event_id;
  }

  async removeSpan(eventId: number): Promise<void> {
    await this.api.deleteSpan(eventId);
    await this.refresh();
  }

  async setScore(labelId: string, score: number): Promise<number> {
    if (!isValidScore(score)) {
      throw new Error(`score must be an integer 1..5, got ${score}`);
    }
    const { event_id } = await this.api.postLabel(this.dialogueId, labelId, score);
    await this.refresh();
    return event_id;
  }

  async exportCorpus(): Promise<unknown> {
    return this.api.export();
  }

  get scores(): Record<string, number> {
    return this.detail?.annotations.scores ?? {};
  }

  get spans() {
    return this.detail?.annotations.spans ?? [];
  }
}
