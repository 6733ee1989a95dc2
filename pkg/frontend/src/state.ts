import { ApiClient, ConflictError, OfflineError } from "./api.js";
import type { ItemStatus, LabelToken, MatchCandidate, QueueItem } from "./types.js";

export type StatusFilter = ItemStatus | "all";
export type SortOrder = "score" | "recency";

export interface ConflictNotice {
  pairId: string;
  message: string;
  serverStatus: ItemStatus;
}

/**
 * Review-queue state: a page of items plus optimistic adjudication.
 *
 * The controller never computes labels or scores itself; every transition
 * round-trips through the /v1 API and any optimistic change is rolled back
 * when the server disagrees.
 */
export class QueueController {
  items: QueueItem[] = [];
  nextCursor: string | null = null;
  total = 0;
  filter: StatusFilter = "pending";
  sort: SortOrder = "score";
  selectedIndex = 0;
  loading = false;
  offline = false;
  errorMessage: string | null = null;
  conflict: ConflictNotice | null = null;

  private cursorStack: (string | null)[] = [];
  private currentCursor: string | null = null;

  constructor(
    private api: ApiClient,
    public pageSize = 10,
    public reviewer = "reviewer",
  ) {}

  async load(cursor: string | null = null): Promise<void> {
    this.loading = true;
    this.errorMessage = null;
    try {
      const page = await this.api.getQueue({
        status: this.filter,
        limit: this.pageSize,
        cursor,
        sort: this.sort,
      });
      this.items = page.items;
      this.nextCursor = page.next_cursor;
      this.total = page.total;
      this.currentCursor = cursor;
      this.offline = false;
      this.selectedIndex = Math.min(this.selectedIndex, Math.max(this.items.length - 1, 0));
    } catch (err) {
      if (err instanceof OfflineError) {
        this.offline = true;
      } else {
        this.errorMessage = (err as Error).message;
      }
    } finally {
      this.loading = false;
    }
  }

  async retry(): Promise<void> {
    await this.load(this.currentCursor);
  }

  async setFilter(filter: StatusFilter): Promise<void> {
    this.filter = filter;
    this.cursorStack = [];
    await this.load(null);
  }

  async setSort(sort: SortOrder): Promise<void> {
    this.sort = sort;
    this.cursorStack = [];
    await this.load(null);
  }

  get pageCount(): number {
    return Math.max(1, Math.ceil(this.total / this.pageSize));
  }

  get hasNextPage(): boolean {
    return this.nextCursor !== null;
  }

  get hasPrevPage(): boolean {
    return this.cursorStack.length > 0;
  }

  async nextPage(): Promise<void> {
    if (this.nextCursor === null) return;
    this.cursorStack.push(this.currentCursor);
    await this.load(this.nextCursor);
  }

  async prevPage(): Promise<void> {
    if (!this.hasPrevPage) return;
    await this.load(this.cursorStack.pop() ?? null);
  }

  selectNext(): void {
    if (this.items.length) this.selectedIndex = Math.min(this.selectedIndex + 1, this.items.length - 1);
  }

  selectPrev(): void {
    if (this.items.length) this.selectedIndex = Math.max(this.selectedIndex - 1, 0);
  }

  get selected(): QueueItem | null {
    return this.items[this.selectedIndex] ?? null;
  }

  /**
   * Optimistically apply a decision, then reconcile with the server.
   *
   * Success replaces the optimistic item with the server's version (and
   * drops it from a pending-filtered view). A 409 restores the item to the
   * server's state and surfaces a conflict notice; any other failure rolls
   * back to the exact pre-optimistic snapshot.
   */
  async adjudicate(
    pairId: string,
    decision: "confirm" | "override",
    label?: LabelToken,
    force = false,
  ): Promise<boolean> {
    const index = this.items.findIndex((item) => item.pair_id === pairId);
    if (index < 0) return false;
    const snapshot = this.items[index]!;
    const optimistic: QueueItem = {
      ...snapshot,
      status: decision === "confirm" ? "confirmed" : "overridden",
    };
    this.conflict = null;
    this.errorMessage = null;
    this.applyItem(index, optimistic);

    try {
      const serverItem = await this.api.submitReview(pairId, {
        decision,
        reviewer: this.reviewer,
        ...(label !== undefined ? { label } : {}),
        ...(force ? { force } : {}),
      });
      this.reconcile(pairId, serverItem);
      this.total = Math.max(0, this.filter === "pending" ? this.total - 1 : this.total);
      return true;
    } catch (err) {
      if (err instanceof ConflictError) {
        // restore the server's truth, never auto-resolve
        const serverItem = err.serverItem;
        if (serverItem) {
          this.restoreItem(pairId, snapshot, serverItem);
          this.conflict = {
            pairId,
            message: err.message,
            serverStatus: serverItem.status,
          };
        } else {
          this.restoreItem(pairId, snapshot, snapshot);
          this.conflict = { pairId, message: err.message, serverStatus: snapshot.status };
        }
      } else {
        this.restoreItem(pairId, snapshot, snapshot);
        this.errorMessage = (err as Error).message;
        if (err instanceof OfflineError) this.offline = true;
      }
      return false;
    }
  }

  private applyItem(index: number, item: QueueItem): void {
    if (this.filter !== "all" && item.status !== this.filter) {
      this.items = this.items.slice(0, index).concat(this.items.slice(index + 1));
      this.selectedIndex = Math.min(this.selectedIndex, Math.max(this.items.length - 1, 0));
    } else {
      this.items = this.items.slice();
      this.items[index] = item;
    }
  }

  private reconcile(pairId: string, serverItem: QueueItem): void {
    const index = this.items.findIndex((item) => item.pair_id === pairId);
    if (index >= 0) this.applyItem(index, serverItem);
  }

  private restoreItem(pairId: string, snapshot: QueueItem, serverItem: QueueItem): void {
    const index = this.items.findIndex((item) => item.pair_id === pairId);
    const restored = serverItem;
    if (index >= 0) {
      this.applyItem(index, restored);
      return;
    }
    // the optimistic update removed it from view; put the server state back
    if (this.filter === "all" || restored.status === this.filter) {
      this.items = this.items.concat(restored).sort((a, b) =>
        this.sort === "score"
          ? b.scores.combined_score - a.scores.combined_score ||
            a.pair_id.localeCompare(b.pair_id)
          : 0,
      );
    }
  }
}

/** Live match probe: free text in, ranked + labeled candidates out. */
export class MatchProbe {
  postText = "";
  topK = 1;
  candidates: MatchCandidate[] = [];
  providerFailed = false;
  errorMessage: string | null = null;
  loading = false;

  constructor(private api: ApiClient) {}

  get canSubmit(): boolean {
    return this.postText.trim().length > 0 && !this.loading;
  }

  async submit(): Promise<void> {
    if (!this.canSubmit) return;
    this.loading = true;
    this.errorMessage = null;
    this.providerFailed = false;
    try {
      const response = await this.api.match(this.postText, this.topK, true);
      this.candidates = response.candidates;
    } catch (err) {
      if (err instanceof ConflictError || !(err as ApiErrorLike).detail) {
        this.candidates = [];
        this.errorMessage = (err as Error).message;
      } else {
        // provider failure: candidates still come back, labels null
        const detail = (err as ApiErrorLike).detail as { candidates?: MatchCandidate[] };
        this.candidates = detail.candidates ?? [];
        this.providerFailed = true;
        this.errorMessage = (err as Error).message;
      }
    } finally {
      this.loading = false;
    }
  }

  async sendToQueue(candidateIndex: number): Promise<QueueItem | null> {
    const candidate = this.candidates[candidateIndex];
    if (!candidate) return null;
    return this.api.sendToQueue(this.postText, candidate.claim.id, true);
  }
}

interface ApiErrorLike {
  detail: unknown;
}
