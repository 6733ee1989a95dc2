import { ApiClient } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { MatchProbe, QueueController, type StatusFilter } from "./state.js";
import {
  LABEL_COLORS,
  LABEL_DEFINITIONS,
  LABELS,
  LEGEND_HEADER,
  displayLabel,
  type LabelToken,
  type QueueItem,
} from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labelBadge(label: LabelToken | "unlabeled"): HTMLElement {
  const badge = el("span", "label-badge", label);
  if (label !== "unlabeled") badge.style.backgroundColor = LABEL_COLORS[label];
  return badge;
}

function legend(): HTMLElement {
  const box = el("div", "legend");
  box.appendChild(el("div", "legend-header", LEGEND_HEADER));
  for (const label of LABELS) {
    const row = el("div", "legend-row", LABEL_DEFINITIONS[label]);
    row.style.borderLeft = `4px solid ${LABEL_COLORS[label]}`;
    box.appendChild(row);
  }
  return box;
}

class App {
  private overridePreselect: LabelToken | null = null;

  constructor(
    private root: HTMLElement,
    private queue: QueueController,
    private probe: MatchProbe,
  ) {}

  async start(): Promise<void> {
    await this.queue.load();
    this.render();
    document.addEventListener("keydown", (event) => void this.onKey(event));
  }

  private async onKey(event: KeyboardEvent): Promise<void> {
    if ((event.target as HTMLElement)?.tagName === "INPUT") return;
    if ((event.target as HTMLElement)?.tagName === "TEXTAREA") return;
    const action = actionForKey(event.key);
    if (!action) return;
    event.preventDefault();
    const item = this.queue.selected;
    if (action.kind === "next") this.queue.selectNext();
    else if (action.kind === "prev") this.queue.selectPrev();
    else if (action.kind === "cancel") this.overridePreselect = null;
    else if (action.kind === "confirm" && item) await this.queue.adjudicate(item.pair_id, "confirm");
    else if (action.kind === "override" && item) {
      // dialog preselects the pressed label; Enter inside it submits
      this.overridePreselect = action.label;
      const confirmed = window.confirm(
        `Override ${item.pair_id} to ${action.label}? (${LABEL_DEFINITIONS[action.label]})`,
      );
      if (confirmed) await this.queue.adjudicate(item.pair_id, "override", action.label);
      this.overridePreselect = null;
    }
    this.render();
  }

  private render(): void {
    this.root.replaceChildren();
    this.root.appendChild(this.renderProbe());
    this.root.appendChild(legend());
    if (this.queue.offline) {
      const banner = el("div", "banner offline", "Service unreachable.");
      const retry = el("button", "retry", "Retry");
      retry.onclick = async () => {
        await this.queue.retry();
        this.render();
      };
      banner.appendChild(retry);
      this.root.appendChild(banner);
    }
    if (this.queue.conflict) {
      this.root.appendChild(
        el(
          "div",
          "banner conflict",
          `Conflict on ${this.queue.conflict.pairId}: already ${this.queue.conflict.serverStatus} on the server. ${this.queue.conflict.message}`,
        ),
      );
    }
    if (this.queue.errorMessage) {
      this.root.appendChild(el("div", "banner error", this.queue.errorMessage));
    }
    this.root.appendChild(this.renderControls());
    this.root.appendChild(this.renderQueue());
  }

  private renderControls(): HTMLElement {
    const bar = el("div", "controls");
    const filter = el("select");
    for (const value of ["pending", "confirmed", "overridden", "all"]) {
      const option = el("option", undefined, value);
      option.setAttribute("value", value);
      if (value === this.queue.filter) option.setAttribute("selected", "selected");
      filter.appendChild(option);
    }
    filter.onchange = async () => {
      await this.queue.setFilter(filter.value as StatusFilter);
      this.render();
    };
    bar.appendChild(filter);

    const sort = el("select");
    for (const value of ["score", "recency"]) {
      const option = el("option", undefined, value);
      option.setAttribute("value", value);
      if (value === this.queue.sort) option.setAttribute("selected", "selected");
      sort.appendChild(option);
    }
    sort.onchange = async () => {
      await this.queue.setSort(sort.value as "score" | "recency");
      this.render();
    };
    bar.appendChild(sort);

    const prev = el("button", undefined, "Prev");
    prev.disabled = !this.queue.hasPrevPage;
    prev.onclick = async () => {
      await this.queue.prevPage();
      this.render();
    };
    const next = el("button", undefined, "Next");
    next.disabled = !this.queue.hasNextPage;
    next.onclick = async () => {
      await this.queue.nextPage();
      this.render();
    };
    bar.appendChild(prev);
    bar.appendChild(next);
    bar.appendChild(el("span", "page-info", `${this.queue.total} items / ${this.queue.pageCount} pages`));
    return bar;
  }

  private renderQueue(): HTMLElement {
    const list = el("div", "queue");
    if (!this.queue.items.length && !this.queue.loading) {
      list.appendChild(el("div", "empty", "Queue is empty. Nothing to review."));
      return list;
    }
    this.queue.items.forEach((item, index) => {
      list.appendChild(this.renderItem(item, index === this.queue.selectedIndex));
    });
    return list;
  }

  private renderItem(item: QueueItem, selected: boolean): HTMLElement {
    const card = el("div", selected ? "item selected" : "item");
    const texts = el("div", "texts");
    const postBox = el("div", "post");
    postBox.appendChild(el("h4", undefined, "TWEET"));
    postBox.appendChild(el("p", undefined, item.post?.text ?? "(missing post)"));
    const claimBox = el("div", "claim");
    claimBox.appendChild(el("h4", undefined, "CLAIM"));
    claimBox.appendChild(el("p", undefined, item.claim?.text ?? "(missing claim)"));
    if (item.claim?.source || item.claim?.debunked_on) {
      claimBox.appendChild(
        el("p", "provenance", [item.claim?.source, item.claim?.debunked_on].filter(Boolean).join(" / ")),
      );
    }
    texts.appendChild(postBox);
    texts.appendChild(claimBox);
    card.appendChild(texts);

    const meta = el("div", "meta");
    meta.appendChild(labelBadge(displayLabel(item)));
    meta.appendChild(el("span", "status", item.status));
    const s = item.scores;
    meta.appendChild(
      el(
        "span",
        "scores",
        `token ${s.token_score.toFixed(3)} / semantic ${s.semantic_score.toFixed(3)} / combined ${s.combined_score.toFixed(3)}`,
      ),
    );
    card.appendChild(meta);

    const actions = el("div", "actions");
    const confirm = el("button", undefined, "Confirm (Enter)");
    confirm.onclick = async () => {
      await this.queue.adjudicate(item.pair_id, "confirm");
      this.render();
    };
    actions.appendChild(confirm);
    for (const label of LABELS) {
      const button = el("button", undefined, `Override ${label[0]}`);
      button.style.borderColor = LABEL_COLORS[label];
      button.onclick = async () => {
        await this.queue.adjudicate(item.pair_id, "override", label);
        this.render();
      };
      actions.appendChild(button);
    }
    card.appendChild(actions);

    if (item.history.length) {
      const history = el("div", "history");
      for (const record of item.history) {
        history.appendChild(
          el(
            "div",
            "history-row",
            `${record.reviewer}: ${record.decision}${record.label ? ` -> ${record.label}` : ""} at ${record.created_at}`,
          ),
        );
      }
      card.appendChild(history);
    }
    return card;
  }

  private renderProbe(): HTMLElement {
    const box = el("div", "probe");
    box.appendChild(el("h3", undefined, "Live match probe"));
    const input = el("textarea") as HTMLTextAreaElement;
    input.placeholder = "Paste a post to match against the claim store";
    input.value = this.probe.postText;
    input.oninput = () => {
      this.probe.postText = input.value;
      submit.disabled = !this.probe.canSubmit;
    };
    box.appendChild(input);

    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "1";
    slider.max = "5";
    slider.value = String(this.probe.topK);
    slider.oninput = () => {
      this.probe.topK = Number(slider.value);
      sliderLabel.textContent = `top_k = ${slider.value}`;
    };
    const sliderLabel = el("span", undefined, `top_k = ${this.probe.topK}`);
    box.appendChild(slider);
    box.appendChild(sliderLabel);

    const submit = el("button", undefined, "Match");
    submit.disabled = !this.probe.canSubmit;
    submit.onclick = async () => {
      await this.probe.submit();
      this.render();
    };
    box.appendChild(submit);

    if (this.probe.providerFailed) {
      box.appendChild(el("div", "banner warning", "Provider failed; candidates shown without labels."));
    } else if (this.probe.errorMessage) {
      box.appendChild(el("div", "banner error", this.probe.errorMessage));
    }

    this.probe.candidates.forEach((candidate, index) => {
      const row = el("div", "candidate");
      row.appendChild(labelBadge(candidate.label ?? "unlabeled"));
      row.appendChild(el("span", undefined, candidate.claim.text));
      row.appendChild(el("span", "scores", candidate.combined_score.toFixed(3)));
      const send = el("button", undefined, "Send to queue");
      send.onclick = async () => {
        await this.probe.sendToQueue(index);
        await this.queue.load();
        this.render();
      };
      row.appendChild(send);
      box.appendChild(row);
    });
    return box;
  }
}

export async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const api = await ApiClient.fromRuntimeConfig().catch(() => new ApiClient(""));
  const app = new App(root, new QueueController(api), new MatchProbe(api));
  await app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
