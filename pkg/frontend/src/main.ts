import { ApiClient } from "./api";
import { bindKeyboard } from "./keyboard";
import { SessionStore } from "./store";
import type { TopicInfo } from "./types";
import { render } from "./view";

function download(doc: Document, name: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain" });
  const url = URL.createObjectURL(blob);
  const a = doc.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

export async function boot(root: HTMLElement, api: ApiClient = new ApiClient("")): Promise<SessionStore> {
  const store = new SessionStore(api);
  let topics: TopicInfo[] = [];

  const callbacks = {
    onPickTopic: (topicId: string) => {
      void store.start(topicId, `tab-${topicId}`);
    },
    onJudge: (label: 0 | 1) => {
      void store.judge(label);
    },
    onReconnect: () => {
      void store.reconnect();
    },
    onExport: (mode: "human_only" | "hybrid") => {
      void store.exportQrels(mode).then((text) => {
        download(root.ownerDocument, `qrels_${mode}.txt`, text);
      });
    },
  };

  const repaint = () => render(root, store, topics, callbacks);
  store.subscribe(repaint);
  bindKeyboard(root.ownerDocument, {
    onRelevant: () => callbacks.onJudge(1),
    onNonrelevant: () => callbacks.onJudge(0),
  });

  topics = await api.topics();
  repaint();
  return store;
}

declare global {
  interface Window {
    poolforgeStore?: SessionStore;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app") as HTMLElement).then((store) => {
    window.poolforgeStore = store;
  });
}
