/** Pure view logic: no DOM access, no fetches, deterministic output.
 *
 * Everything the contract tests pin lives here. The UI never computes
 * answers; it renders exactly what the server returned.
 */

import { AskResponse, AttentionSummary, Coordinate, TableData } from './types.js';

export const MODULE_LABELS = ['column', 'row', 'cell'] as const;

export interface AttentionBar {
  label: string;
  weight: number;
  /** Display width; the bars of one response always total exactly 100. */
  percent: number;
}

export function highlightKeys(coords: Coordinate[]): Set<string> {
  return new Set(coords.map(([r, c]) => `${r}:${c}`));
}

/** Module-mix bars whose rounded display widths still total 100%. */
export function attentionBars(attention: AttentionSummary): AttentionBar[] {
  const weights = attention.m_att;
  const bars: AttentionBar[] = [];
  let used = 0;
  for (let i = 0; i < weights.length; i++) {
    const label = MODULE_LABELS[i] ?? `module ${i}`;
    let percent = Math.round(weights[i] * 1000) / 10;
    if (i === weights.length - 1) {
      percent = Math.round((100 - used) * 10) / 10;
    }
    used += percent;
    bars.push({ label, weight: weights[i], percent });
  }
  return bars;
}

/** Which rows to dim: exactly those the rewrite excluded, none otherwise. */
export function rowDimming(nRows: number, keptRows: number[] | null): boolean[] {
  if (keptRows === null) {
    return new Array(nRows).fill(false);
  }
  const kept = new Set(keptRows);
  const dimmed = new Array<boolean>(nRows);
  for (let r = 0; r < nRows; r++) {
    dimmed[r] = !kept.has(r);
  }
  return dimmed;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** The table grid with the highlight layer baked into cell classes. */
export function renderTableHtml(
  table: TableData,
  highlights: Set<string>,
  dimmed: boolean[],
  topColumn: number | null,
): string {
  const parts: string[] = ['<table class="grid">', '<thead><tr>'];
  table.headers.forEach((header, c) => {
    const cls = c === topColumn ? ' class="top-col"' : '';
    parts.push(`<th${cls}>${escapeHtml(header)}</th>`);
  });
  parts.push('</tr></thead>', '<tbody>');
  table.cells.forEach((row, r) => {
    parts.push(dimmed[r] ? '<tr class="dim">' : '<tr>');
    row.forEach((cell, c) => {
      const cls = highlights.has(`${r}:${c}`) ? ' class="hl"' : '';
      parts.push(`<td${cls}>${escapeHtml(cell)}</td>`);
    });
    parts.push('</tr>');
  });
  parts.push('</tbody>', '</table>');
  return parts.join('');
}

export function renderAttentionHtml(attention: AttentionSummary | null): string {
  if (attention === null) {
    return '';
  }
  const rows = attentionBars(attention).map(
    (bar) =>
      `<div class="att-row"><span class="att-label">${bar.label}</span>` +
      `<span class="att-bar" style="width: ${bar.percent}%"></span>` +
      `<span class="att-value">${bar.percent}%</span></div>`,
  );
  return `<div class="attention">${rows.join('')}</div>`;
}

export interface TranscriptEntry {
  question: string;
  answerTexts: string[];
}

export function renderTranscriptHtml(entries: TranscriptEntry[]): string {
  const items = entries.map(
    (entry) =>
      '<li><span class="q">' +
      escapeHtml(entry.question) +
      '</span><span class="a">' +
      (entry.answerTexts.length
        ? entry.answerTexts.map(escapeHtml).join(', ')
        : '(no cells)') +
      '</span></li>',
  );
  return `<ol class="transcript">${items.join('')}</ol>`;
}

/** Full per-response view: grid with highlights and dimming, plus bars.
 *
 * Replaying a transcript calls this once per recorded response; it depends
 * only on the response and the table, so identical inputs give identical
 * markup.
 */
export function renderResponseView(table: TableData, response: AskResponse): string {
  const highlights = highlightKeys(response.highlights);
  const dimmed = rowDimming(table.cells.length, response.rewritten_table_rows);
  const topColumn = response.attention ? response.attention.top_columns[0] ?? null : null;
  return (
    renderTableHtml(table, highlights, dimmed, topColumn) +
    renderAttentionHtml(response.attention)
  );
}
