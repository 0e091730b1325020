import { gainPolyline } from "./gain";
import type { SessionStore } from "./store";
import type { TopicInfo } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface ViewCallbacks {
  onPickTopic: (topicId: string) => void;
  onJudge: (label: 0 | 1) => void;
  onReconnect: () => void;
  onExport: (mode: "human_only" | "hybrid") => void;
}

/** Render the whole app into `root` from the store snapshot. */
export function render(
  root: HTMLElement,
  store: SessionStore,
  topics: TopicInfo[],
  callbacks: ViewCallbacks,
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  if (!store.state) {
    const picker = el(doc, "section", { id: "topic-picker" });
    picker.appendChild(el(doc, "h2", {}, "Pick a topic"));
    for (const topic of topics) {
      const btn = el(
        doc,
        "button",
        { class: "topic", "data-topic": topic.topic_id },
        `${topic.topic_id} (${topic.pool_size} docs)`,
      );
      btn.addEventListener("click", () => callbacks.onPickTopic(topic.topic_id));
      picker.appendChild(btn);
    }
    root.appendChild(picker);
    return;
  }

  const state = store.state;
  const panel = el(doc, "section", { id: "session" });
  panel.appendChild(el(doc, "h2", {}, `Topic ${state.topic_id}`));
  panel.appendChild(
    el(doc, "p", { id: "phase", "data-phase": state.phase }, `Phase: ${state.phase}`),
  );
  const spent = state.initial_budget - state.budget_remaining;
  panel.appendChild(
    el(
      doc,
      "p",
      { id: "progress" },
      `Budget: ${spent}/${state.initial_budget} spent - ` +
        `${state.counts.relevant} relevant, ${state.counts.nonrelevant} non-relevant`,
    ),
  );

  if (store.offline) {
    const banner = el(doc, "div", { id: "offline" }, "Offline: judgments queued. ");
    const retry = el(doc, "button", { id: "reconnect" }, "Reconnect");
    retry.addEventListener("click", () => callbacks.onReconnect());
    banner.appendChild(retry);
    panel.appendChild(banner);
  }

  if (state.phase === "discarded") {
    panel.appendChild(
      el(
        doc,
        "div",
        { id: "notice", class: "discarded" },
        "Topic discarded: the seed walk found only one class.",
      ),
    );
  } else if (state.phase === "exhausted") {
    panel.appendChild(
      el(doc, "div", { id: "notice", class: "exhausted" }, "Budget exhausted. Export below."),
    );
  }

  const judging = state.phase === "seeding" || state.phase === "active";
  if (store.currentDoc && judging) {
    const docBox = el(doc, "article", { id: "doc" });
    docBox.appendChild(el(doc, "h3", { id: "doc-id" }, store.currentDoc.doc_id));
    docBox.appendChild(el(doc, "pre", { id: "doc-text" }, store.currentDoc.text));
    panel.appendChild(docBox);
  }
  const relBtn = el(doc, "button", { id: "judge-relevant" }, "Relevant (R)");
  const nonBtn = el(doc, "button", { id: "judge-nonrelevant" }, "Non-relevant (N)");
  const disabled = !store.currentDoc || !judging;
  if (disabled) {
    relBtn.setAttribute("disabled", "");
    nonBtn.setAttribute("disabled", "");
  } else {
    relBtn.addEventListener("click", () => callbacks.onJudge(1));
    nonBtn.addEventListener("click", () => callbacks.onJudge(0));
  }
  panel.appendChild(relBtn);
  panel.appendChild(nonBtn);

  panel.appendChild(renderGainCurve(doc, store));

  const exports = el(doc, "div", { id: "exports" });
  const humanBtn = el(doc, "button", { id: "export-human" }, "Export human qrels");
  humanBtn.addEventListener("click", () => callbacks.onExport("human_only"));
  exports.appendChild(humanBtn);
  if (state.has_model) {
    const hybridBtn = el(doc, "button", { id: "export-hybrid" }, "Export hybrid qrels");
    hybridBtn.addEventListener("click", () => callbacks.onExport("hybrid"));
    exports.appendChild(hybridBtn);
  }
  panel.appendChild(exports);
  root.appendChild(panel);
}

/** Monotone step chart of relevant found vs judgments made. */
export function renderGainCurve(doc: Document, store: SessionStore): HTMLElement {
  const box = el(doc, "figure", { id: "gain" });
  box.appendChild(el(doc, "figcaption", {}, "Relevant found vs judgments"));
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 200 100");
  svg.setAttribute("width", "200");
  svg.setAttribute("height", "100");
  const points = store.gainPoints();
  const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  line.setAttribute("points", gainPolyline(points, 200, 100));
  line.setAttribute("data-count", String(points.length));
  svg.appendChild(line);
  box.appendChild(svg as unknown as Node);
  return box;
}
