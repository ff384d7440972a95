/** Thin typed client for the qa-service JSON endpoints. */

import { AskResponse, SessionInfo, TableData, TableSummary } from './types.js';

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) {
    let detail = `HTTP ${res.status}: ${res.statusText}`;
    try {
      const body = await res.json();
      if (body && typeof body.detail === 'string') {
        detail = body.detail;
      }
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new Error(detail);
  }
  return res.json() as Promise<T>;
}

function post<T>(path: string, body?: unknown): Promise<T> {
  return request<T>(path, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
}

export function listTables(): Promise<TableSummary[]> {
  return request<TableSummary[]>('/tables');
}

export function getTable(tableId: string): Promise<TableData> {
  return request<TableData>(`/tables/${encodeURIComponent(tableId)}`);
}

export function createSession(
  tableId: string,
  engine: string,
  policy: string,
): Promise<SessionInfo> {
  return post<SessionInfo>('/sessions', {
    table_id: tableId,
    engine,
    policy,
  });
}

export function askQuestion(sessionId: string, question: string): Promise<AskResponse> {
  return post<AskResponse>(
    `/sessions/${encodeURIComponent(sessionId)}/questions`,
    { question },
  );
}

export function resetSession(sessionId: string): Promise<SessionInfo> {
  return post<SessionInfo>(`/sessions/${encodeURIComponent(sessionId)}/reset`);
}
