import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { MatchProbe, QueueController } from "../src/state.js";
import { FakeServer } from "./fakeServer.js";

function makeController(server: FakeServer, pageSize = 10) {
  return new QueueController(new ApiClient("", server.fetch), pageSize, "tester");
}

describe("QueueController", () => {
  it("loads the pending queue sorted by combined score", async () => {
    const server = new FakeServer(12);
    const queue = makeController(server);
    await queue.load();
    expect(queue.items).toHaveLength(10);
    const scores = queue.items.map((i) => i.scores.combined_score);
    expect(scores).toEqual([...scores].sort((a, b) => b - a));
  });

  it("pages 12 pending items as 2 pages of size 10", async () => {
    const server = new FakeServer(12);
    const queue = makeController(server, 10);
    await queue.load();
    expect(queue.total).toBe(12);
    expect(queue.pageCount).toBe(2);
    expect(queue.hasNextPage).toBe(true);
    await queue.nextPage();
    expect(queue.items).toHaveLength(2);
    expect(queue.hasNextPage).toBe(false);
    expect(queue.hasPrevPage).toBe(true);
    await queue.prevPage();
    expect(queue.items).toHaveLength(10);
  });

  it("shows the empty state message condition when there is nothing to review", async () => {
    const server = new FakeServer(0);
    const queue = makeController(server);
    await queue.load();
    expect(queue.items).toHaveLength(0);
    expect(queue.total).toBe(0);
  });

  it("confirm removes the item from the pending view and persists server-side", async () => {
    const server = new FakeServer(12);
    const queue = makeController(server);
    await queue.load();
    const target = queue.items[0]!.pair_id;
    const ok = await queue.adjudicate(target, "confirm");
    expect(ok).toBe(true);
    expect(queue.items.map((i) => i.pair_id)).not.toContain(target);
    expect(server.statusOf(target)).toBe("confirmed");

    // hard refresh: a brand-new controller sees the server-persisted state
    const fresh = makeController(server);
    await fresh.load();
    expect(fresh.items.map((i) => i.pair_id)).not.toContain(target);
    await fresh.setFilter("confirmed");
    expect(fresh.items.map((i) => i.pair_id)).toContain(target);
  });

  it("override records the reviewer label server-side", async () => {
    const server = new FakeServer(3);
    const queue = makeController(server);
    await queue.load();
    const target = queue.items[1]!.pair_id;
    const ok = await queue.adjudicate(target, "override", "NEUTRAL");
    expect(ok).toBe(true);
    expect(server.statusOf(target)).toBe("overridden");
    const history = server.pairs.get(target)!.item.history;
    expect(history[history.length - 1]).toMatchObject({ decision: "override", label: "NEUTRAL" });
  });

  it("409 conflict rolls back the optimistic update to the server state", async () => {
    const server = new FakeServer(5);
    const queue = makeController(server, 10);
    await queue.load();
    const target = queue.items[0]!.pair_id;
    // another reviewer confirms behind our back
    server.adjudicateDirectly(target, "confirm", "someone-else");

    const ok = await queue.adjudicate(target, "override", "CONTRADICTION");
    expect(ok).toBe(false);
    // never auto-resolved: the server keeps the other reviewer's decision
    expect(server.statusOf(target)).toBe("confirmed");
    // the optimistic "overridden" state is gone from the pending view,
    // replaced by the server's confirmed item (filtered out of pending)
    expect(queue.items.map((i) => i.pair_id)).not.toContain(target);
    expect(queue.conflict).not.toBeNull();
    expect(queue.conflict!.pairId).toBe(target);
    expect(queue.conflict!.serverStatus).toBe("confirmed");

    // and in the "all" view the item shows the server state, not ours
    await queue.setFilter("all");
    const restored = queue.items.find((i) => i.pair_id === target)!;
    expect(restored.status).toBe("confirmed");
  });

  it("non-conflict failures roll back to the exact snapshot", async () => {
    const server = new FakeServer(2);
    const api = new ApiClient("", (input, init) => {
      if (init?.method === "POST") return Promise.reject(new TypeError("fetch failed"));
      return server.fetch(input, init);
    });
    const queue = new QueueController(api, 10, "tester");
    await queue.load();
    const before = queue.items.map((i) => ({ ...i }));
    const ok = await queue.adjudicate(before[0]!.pair_id, "confirm");
    expect(ok).toBe(false);
    expect(queue.offline).toBe(true);
    expect(queue.items.map((i) => i.pair_id)).toEqual(before.map((i) => i.pair_id));
    expect(queue.items[0]!.status).toBe("pending");
  });

  it("flags offline on load failure and recovers on retry", async () => {
    const server = new FakeServer(3);
    let down = true;
    const api = new ApiClient("", (input, init) => {
      if (down) return Promise.reject(new TypeError("fetch failed"));
      return server.fetch(input, init);
    });
    const queue = new QueueController(api, 10, "tester");
    await queue.load();
    expect(queue.offline).toBe(true);
    down = false;
    await queue.retry();
    expect(queue.offline).toBe(false);
    expect(queue.items).toHaveLength(3);
  });

  it("recency sort asks the server rather than sorting locally", async () => {
    const server = new FakeServer(4);
    const queue = makeController(server);
    await queue.setSort("recency");
    const sortedCalls = server.requestLog.filter((r) => r.path === "/v1/review/queue");
    expect(sortedCalls.length).toBeGreaterThan(0);
    expect(queue.items[0]!.pair_id).toBe("pair-003"); // newest first
  });
});

describe("MatchProbe", () => {
  it("disables submit on empty input", () => {
    const probe = new MatchProbe(new ApiClient("", new FakeServer(1).fetch));
    probe.postText = "   ";
    expect(probe.canSubmit).toBe(false);
    probe.postText = "a real post";
    expect(probe.canSubmit).toBe(true);
  });

  it("top_k of 3 yields 3 candidate rows", async () => {
    const probe = new MatchProbe(new ApiClient("", new FakeServer(1).fetch));
    probe.postText = "a post about claims";
    probe.topK = 3;
    await probe.submit();
    expect(probe.candidates).toHaveLength(3);
    expect(probe.candidates[0]!.label).toBeDefined();
  });

  it("keeps unlabeled candidates and shows a note on provider failure", async () => {
    const server = new FakeServer(1);
    server.providerDown = true;
    const probe = new MatchProbe(new ApiClient("", server.fetch));
    probe.postText = "a post";
    probe.topK = 2;
    await probe.submit();
    expect(probe.providerFailed).toBe(true);
    expect(probe.candidates.length).toBeGreaterThan(0);
    expect(probe.candidates.every((c) => c.label === null)).toBe(true);
  });

  it("send to queue persists the pair for team review", async () => {
    const server = new FakeServer(2);
    const probe = new MatchProbe(new ApiClient("", server.fetch));
    probe.postText = "new suspicious post";
    await probe.submit();
    const item = await probe.sendToQueue(0);
    expect(item).not.toBeNull();
    expect(server.pairs.has(item!.pair_id)).toBe(true);
    expect(server.statusOf(item!.pair_id)).toBe("pending");
  });
});
