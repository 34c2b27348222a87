/** HTML renderers. Pure string builders so they are testable without a DOM. */

import type { DialogueDetail, AnnotationEvent, FeatureDef, LabelDef } from './types.js';
import { badgesForTurn, describeEvent, historyNewestFirst, SCORE_VALUES } from './state.js';

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderFeaturePicker(registry: FeatureDef[], selected: string | null): string {
  const groups: Record<string, FeatureDef[]> = { token: [], utterance: [] };
  for (const f of registry) groups[f.level].push(f);
  const option = (f: FeatureDef) =>
    `<label class="feature${f.id === selected ? ' selected' : ''}" title="${esc(f.description)}">
      <input type="radio" name="feature" value="${esc(f.id)}"${f.id === selected ? ' checked' : ''}>
      ${esc(f.name)}
    </label>`;
  return `
    <fieldset id="feature-picker">
      <legend>Micro-level features</legend>
      <div class="feature-group"><h4>Token-level</h4>${groups.token.map(option).join('')}</div>
      <div class="feature-group"><h4>Utterance-level</h4>${groups.utterance.map(option).join('')}</div>
    </fieldset>`;
}

export function renderTurns(detail: DialogueDetail): string {
  const spans = detail.annotations.spans;
  const turns = detail.dialogue.turns.map((turn) => {
    const badges = badgesForTurn(spans, turn.index, turn.tokens.length);
    const tokens = turn.tokens
      .map((tok, t) => {
        const marks = badges[t];
        const badgeHtml = marks
          .map((fid) => `<sup class="badge" data-feature="${esc(fid)}">${esc(fid)}</sup>`)
          .join('');
        return `<span class="token${marks.length ? ' marked' : ''}" data-turn="${turn.index}" data-token="${t}">${esc(tok)}${badgeHtml}</span>`;
      })
      .join(' ');
    return `<div class="turn" data-turn="${turn.index}">
      <span class="speaker">${esc(turn.speaker_id)}</span> ${tokens}
    </div>`;
  });
  return `<div id="turns">${turns.join('')}</div>`;
}

export function renderScorecard(labels: LabelDef[], scores: Record<string, number>): string {
  const rows = labels.map((label) => {
    const current = scores[label.id];
    const cells = SCORE_VALUES.map(
      (v) =>
        `<label class="score-cell" title="${esc(label.rubric[String(v)] ?? '')}">
          <input type="radio" name="score-${esc(label.id)}" value="${v}"${current === v ? ' checked' : ''}>
          ${v}
        </label>`,
    ).join('');
    const rubric = SCORE_VALUES.map((v) => `<li><b>${v}</b>: ${esc(label.rubric[String(v)] ?? '')}</li>`).join('');
    return `<div class="label-row" data-label="${esc(label.id)}">
      <h4>${esc(label.name || label.id)}</h4>
      <div class="score-cells">${cells}</div>
      <ul class="rubric">${rubric}</ul>
    </div>`;
  });
  return `<div id="scorecard">${rows.join('')}</div>`;
}

export function renderHistory(events: AnnotationEvent[], registry: FeatureDef[]): string {
  const names = Object.fromEntries(registry.map((f) => [f.id, f.name]));
  const items = historyNewestFirst(events)
    .map((e) => `<li class="event event-${e.kind}">${esc(describeEvent(e, names))}</li>`)
    .join('');
  return `<ol id="history">${items}</ol>`;
}
