/** R / N shortcuts for judging; ignored while typing in form fields. */

export interface ShortcutHandlers {
  onRelevant: () => void;
  onNonrelevant: () => void;
}

export function bindKeyboard(target: EventTarget, handlers: ShortcutHandlers): () => void {
  const listener = (event: Event) => {
    const e = event as KeyboardEvent;
    if (e.repeat) return;
    const el = e.target as HTMLElement | null;
    if (el && ("value" in el || el.isContentEditable)) return;
    const key = e.key.toLowerCase();
    if (key === "r") {
      e.preventDefault();
      handlers.onRelevant();
    } else if (key === "n") {
      e.preventDefault();
      handlers.onNonrelevant();
    }
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}
