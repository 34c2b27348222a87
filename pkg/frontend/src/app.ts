/** DOM glue: wires drag selection, scorecard clicks, history, and export. */

import { ApiClient, ServiceError } from './api.js';
import { AnnotationSession } from './session.js';
import { renderFeaturePicker, renderHistory, renderScorecard, renderTurns } from './render.js';
import { normalizeSelection, spansAtToken } from './state.js';

interface DragState {
  turnIndex: number;
  anchorToken: number;
}

export function startApp(root: HTMLElement, baseUrl: string, token: string): void {
  const api = new ApiClient(baseUrl, token);
  let session: AnnotationSession | null = null;
  let selectedFeature: string | null = null;
  let drag: DragState | null = null;

  const errorBox = document.createElement('div');
  errorBox.id = 'error';
  const picker = document.createElement('div');
  const main = document.createElement('div');
  main.id = 'main';
  root.append(errorBox, picker, main);

  function showError(err: unknown): void {
    errorBox.textContent = err instanceof ServiceError ? `service: ${err.message}` : String(err);
  }

  function redraw(): void {
    if (!session?.detail) return;
    const detail = session.detail;
    picker.innerHTML = renderFeaturePicker(detail.registry, selectedFeature);
    main.innerHTML = `
      ${renderTurns(detail)}
      ${renderScorecard(detail.labels, session.scores)}
      <button id="export">Export corpus</button>
      <h3>History</h3>
      ${renderHistory(session.events, detail.registry)}`;
  }

  async function act(fn: () => Promise<unknown>): Promise<void> {
    errorBox.textContent = '';
    try {
      await fn();
      redraw();
    } catch (err) {
      showError(err);
    }
  }

  root.addEventListener('change', (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.name === 'feature') {
      selectedFeature = input.value;
      redraw();
    } else if (input.name?.startsWith('score-') && session) {
      const labelId = input.name.slice('score-'.length);
      void act(() => session!.setScore(labelId, Number(input.value)));
    }
  });

  root.addEventListener('mousedown', (ev) => {
    const el = (ev.target as HTMLElement).closest<HTMLElement>('.token');
    if (!el) return;
    drag = { turnIndex: Number(el.dataset.turn), anchorToken: Number(el.dataset.token) };
  });

  root.addEventListener('mouseup', (ev) => {
    const badge = (ev.target as HTMLElement).closest<HTMLElement>('.badge');
    const el = (ev.target as HTMLElement).closest<HTMLElement>('.token');
    if (badge && el && session) {
      // click a badge: remove the newest removable span with that feature there
      const candidates = spansAtToken(
        session.spans,
        Number(el.dataset.turn),
        Number(el.dataset.token),
      ).filter((s) => s.feature_id === badge.dataset.feature && s.event_id !== null);
      const target = candidates[candidates.length - 1];
      if (target?.event_id != null) void act(() => session!.removeSpan(target.event_id!));
      drag = null;
      return;
    }
    if (!drag || !el || !session || !selectedFeature) {
      drag = null;
      return;
    }
    if (Number(el.dataset.turn) === drag.turnIndex) {
      const selection = normalizeSelection(
        drag.turnIndex,
        drag.anchorToken,
        Number(el.dataset.token),
      );
      void act(() => session!.markSpan(selectedFeature!, selection));
    }
    drag = null;
  });

  root.addEventListener('click', (ev) => {
    if ((ev.target as HTMLElement).id === 'export' && session) {
      void session.exportCorpus().then((corpus) => {
        const blob = new Blob([JSON.stringify(corpus, null, 2)], { type: 'application/json' });
        const a = document.createElement('a');
        a.href = URL.createObjectURL(blob);
        a.download = 'corpus-export.json';
        a.click();
        URL.revokeObjectURL(a.href);
      }, showError);
    }
  });

  void (async () => {
    try {
      const listing = await api.listDialogues();
      const first = listing.dialogues[0];
      if (!first) {
        errorBox.textContent = 'no dialogues assigned to this token';
        return;
      }
      session = new AnnotationSession(api, first.id);
      await session.open();
      redraw();
    } catch (err) {
      showError(err);
    }
  })();
}
