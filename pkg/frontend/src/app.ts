/** DOM wiring: session controls, question form, and the rendered views. */

import { askQuestion, createSession, getTable, listTables } from './api.js';
import { AskResponse, TableData } from './types.js';
import { renderResponseView, renderTableHtml, renderTranscriptHtml, TranscriptEntry } from './view.js';

interface AppState {
  sessionId: string | null;
  table: TableData | null;
  transcript: TranscriptEntry[];
  inFlight: boolean;
}

const state: AppState = { sessionId: null, table: null, transcript: [], inFlight: false };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(message: string, retry: () => void): void {
  const banner = el<HTMLDivElement>('error');
  banner.hidden = false;
  banner.textContent = message + ' ';
  const button = document.createElement('button');
  button.textContent = 'retry';
  button.addEventListener('click', () => {
    banner.hidden = true;
    retry();
  });
  banner.appendChild(button);
}

function clearError(): void {
  el<HTMLDivElement>('error').hidden = true;
}

function renderFreshTable(): void {
  if (state.table) {
    el<HTMLDivElement>('table-view').innerHTML = renderTableHtml(
      state.table,
      new Set(),
      new Array(state.table.cells.length).fill(false),
      null,
    );
  }
  el<HTMLDivElement>('transcript-view').innerHTML = renderTranscriptHtml(state.transcript);
}

async function startSession(): Promise<void> {
  clearError();
  const tableId = el<HTMLSelectElement>('table-select').value;
  const engine = el<HTMLSelectElement>('engine-select').value;
  const policy = el<HTMLSelectElement>('policy-select').value;
  if (!tableId) {
    return;
  }
  try {
    const [session, table] = await Promise.all([
      createSession(tableId, engine, policy),
      getTable(tableId),
    ]);
    state.sessionId = session.session_id;
    state.table = table;
    state.transcript = [];
    renderFreshTable();
  } catch (error) {
    showError(`could not start session: ${(error as Error).message}`, startSession);
  }
}

function showResponse(response: AskResponse): void {
  if (!state.table) {
    return;
  }
  state.transcript.push({
    question: response.question,
    answerTexts: response.answer_texts,
  });
  el<HTMLDivElement>('table-view').innerHTML = renderResponseView(state.table, response);
  el<HTMLDivElement>('transcript-view').innerHTML = renderTranscriptHtml(state.transcript);
}

async function submitQuestion(): Promise<void> {
  const input = el<HTMLInputElement>('question-input');
  const question = input.value.trim();
  if (!question || !state.sessionId || state.inFlight) {
    return;
  }
  clearError();
  state.inFlight = true;
  input.disabled = true;
  el<HTMLButtonElement>('ask-button').disabled = true;
  try {
    const response = await askQuestion(state.sessionId, question);
    showResponse(response);
    input.value = '';
  } catch (error) {
    showError(`question failed: ${(error as Error).message}`, submitQuestion);
  } finally {
    state.inFlight = false;
    input.disabled = false;
    el<HTMLButtonElement>('ask-button').disabled = false;
    input.focus();
  }
}

async function init(): Promise<void> {
  clearError();
  try {
    const tables = await listTables();
    const select = el<HTMLSelectElement>('table-select');
    select.innerHTML = tables
      .map(
        (t) =>
          `<option value="${t.table_id}">${t.table_id} (${t.n_rows}×${t.n_cols})</option>`,
      )
      .join('');
    await startSession();
  } catch (error) {
    showError(`server unreachable: ${(error as Error).message}`, init);
  }
}

document.addEventListener('DOMContentLoaded', () => {
  el<HTMLSelectElement>('table-select').addEventListener('change', startSession);
  el<HTMLSelectElement>('engine-select').addEventListener('change', startSession);
  el<HTMLSelectElement>('policy-select').addEventListener('change', startSession);
  el<HTMLFormElement>('question-form').addEventListener('submit', (event) => {
    event.preventDefault();
    void submitQuestion();
  });
  void init();
});
