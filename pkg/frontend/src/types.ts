/** JSON shapes of the qa-service endpoints this UI consumes. */

export type Coordinate = [number, number];

export interface TableSummary {
  table_id: string;
  n_rows: number;
  n_cols: number;
  headers: string[];
}

export interface TableData {
  table_id: string;
  headers: string[];
  cells: string[][];
  column_kinds: string[];
}

export interface SessionInfo {
  session_id: string;
  table_id: string;
  engine: string;
  policy: string;
  history_length: number;
}

export interface AttentionSummary {
  m_att: number[];
  m_col: number[];
  top_columns: number[];
}

export interface AskResponse {
  session_id: string;
  position: number;
  question: string;
  answer_coordinates: Coordinate[];
  answer_texts: string[];
  highlights: Coordinate[];
  attention: AttentionSummary | null;
  rewritten_table_rows: number[] | null;
}
