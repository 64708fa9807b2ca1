export type Decision = "accept" | "corrected" | "reject";

export interface ReviewExample {
  qa_id: string;
  index: number;
  total: number;
  title: string;
  question: string;
  context: string;
  answer_text: string;
  answer_start: number;
  is_impossible: boolean;
  score?: number | null;
}

export interface Progress {
  total: number;
  reviewed: number;
  remaining: number;
  accepted: number;
  corrected: number;
  rejected: number;
}

export interface NextResponse {
  done: boolean;
  example?: ReviewExample;
  reviewed?: number;
  total?: number;
}

export interface VerdictPayload {
  decision: Decision;
  corrected_text?: string;
  corrected_start?: number;
  reviewer?: string;
}

export interface VerdictResponse {
  ok: boolean;
  progress: Progress;
}

export interface SpanRejection {
  error: string;
  expected: string;
  actual: string;
  start: number;
}
