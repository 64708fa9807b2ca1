import type {
  NextResponse,
  Progress,
  ReviewExample,
  VerdictPayload,
  VerdictResponse,
} from "./types.js";

/** The server answered with a non-success status. */
export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: unknown) {
    super(`request failed with status ${status}`);
  }
}

/** The server could not be reached at all; safe to retry. */
export class NetworkError extends Error {}

const request = async <T>(path: string, init?: RequestInit): Promise<T> => {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch (err) {
    throw new NetworkError(err instanceof Error ? err.message : String(err));
  }
  if (!response.ok) {
    let detail: unknown = null;
    try {
      detail = ((await response.json()) as { detail?: unknown }).detail ?? null;
    } catch {
      // non-JSON error body; keep null
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
};

export const fetchNext = (): Promise<NextResponse> =>
  request<NextResponse>("/api/queue/next");

export const fetchExample = (qaId: string): Promise<{ example: ReviewExample }> =>
  request<{ example: ReviewExample }>(
    `/api/examples/${encodeURIComponent(qaId)}`
  );

export const postVerdict = (
  qaId: string,
  verdict: VerdictPayload
): Promise<VerdictResponse> =>
  request<VerdictResponse>(
    `/api/examples/${encodeURIComponent(qaId)}/verdict`,
    {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(verdict),
    }
  );

export const fetchProgress = (): Promise<Progress> =>
  request<Progress>("/api/progress");
