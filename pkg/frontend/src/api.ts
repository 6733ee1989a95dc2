import type {
  LabelToken,
  MatchCandidate,
  QueueItem,
  QueuePage,
  ReviewDecision,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error envelope shared by every /v1 endpoint. */
export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

/** 409: another reviewer got there first; carries the server's current item. */
export class ConflictError extends ApiRequestError {
  serverItem: QueueItem | null;

  constructor(status: number, code: string, message: string, detail: unknown) {
    super(status, code, message, detail);
    this.name = "ConflictError";
    const d = detail as { item?: QueueItem } | null;
    this.serverItem = d && d.item ? d.item : null;
  }
}

/** Network-level failure (service unreachable); the UI shows the offline banner. */
export class OfflineError extends Error {
  constructor(cause: unknown) {
    super("service unreachable");
    this.name = "OfflineError";
    this.cause = cause;
  }
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let code = "unknown_error";
  let message = `HTTP ${response.status}`;
  let detail: unknown = null;
  try {
    const body = (await response.json()) as { code?: string; message?: string; detail?: unknown };
    code = body.code ?? code;
    message = body.message ?? message;
    detail = body.detail ?? null;
  } catch {
    // non-JSON error body; keep the fallbacks
  }
  if (response.status === 409) {
    return new ConflictError(response.status, code, message, detail);
  }
  return new ApiRequestError(response.status, code, message, detail);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new OfflineError(err);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  static async fromRuntimeConfig(fetchFn?: FetchLike): Promise<ApiClient> {
    const bootstrap = new ApiClient("", fetchFn);
    const config = await bootstrap.request<{ api_base: string }>("GET", "/v1/ui-config");
    return new ApiClient(config.api_base ?? "", fetchFn);
  }

  getQueue(params: {
    status?: string;
    limit?: number;
    cursor?: string | null;
    sort?: "score" | "recency";
  } = {}): Promise<QueuePage> {
    const query = new URLSearchParams();
    query.set("status", params.status ?? "pending");
    query.set("limit", String(params.limit ?? 10));
    query.set("sort", params.sort ?? "score");
    if (params.cursor) query.set("cursor", params.cursor);
    return this.request<QueuePage>("GET", `/v1/review/queue?${query.toString()}`);
  }

  submitReview(pairId: string, decision: ReviewDecision): Promise<QueueItem> {
    return this.request<QueueItem>("POST", `/v1/review/${encodeURIComponent(pairId)}`, decision);
  }

  match(postText: string, topK: number, classify: boolean): Promise<{ candidates: MatchCandidate[] }> {
    return this.request("POST", "/v1/match", {
      post_text: postText,
      top_k: topK,
      classify,
    });
  }

  sendToQueue(postText: string, claimId: string, classify = true): Promise<QueueItem> {
    return this.request<QueueItem>("POST", "/v1/review/queue", {
      post_text: postText,
      claim_id: claimId,
      classify,
    });
  }

  ingestClaims(claims: { text: string; source?: string }[]): Promise<{ ingested: number }> {
    return this.request("POST", "/v1/claims", claims);
  }
}

export type { LabelToken };
