/** DOM wiring for the studio page. Logic lives in the imported modules. */

import { StudioClient } from "./api.js";
import { beginDrag, DragGesture, moveDrag } from "./editor.js";
import { renderGallery } from "./gallery.js";
import { StudioStore } from "./store.js";

function requireElement<T extends Element>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (el === null) {
    throw new Error(`missing studio element: ${selector}`);
  }
  return el;
}

export async function startStudio(baseUrl: string, projectId: string): Promise<void> {
  const client = new StudioClient(baseUrl);
  const store = new StudioStore(client, projectId);

  const gallery = requireElement<HTMLDivElement>("#gallery");
  const canvas = requireElement<HTMLDivElement>("#canvas");
  const preview = requireElement<HTMLIFrameElement>("#preview");
  const undoButton = requireElement<HTMLButtonElement>("#undo");

  const render = () => {
    if (store.summary === null) {
      return;
    }
    gallery.innerHTML = renderGallery(store.summary);
    // cache-bust so the iframe reflects the latest composition
    preview.src = `${client.previewUrl(projectId)}?t=${Date.now()}`;
    canvas.innerHTML =
      `<object type="image/svg+xml" data="${client.compositionUrl(projectId)}?t=${Date.now()}">` +
      "</object>";
    undoButton.disabled = !store.canUndo();
  };

  gallery.addEventListener("click", async (event) => {
    const card = (event.target as Element).closest("[data-plan-index]");
    if (card === null) {
      return;
    }
    await store.selectPlan(Number(card.getAttribute("data-plan-index")));
    render();
  });

  undoButton.addEventListener("click", async () => {
    await store.undo();
    render();
  });

  let gesture: DragGesture | null = null;
  canvas.addEventListener("pointerdown", (event) => {
    const mark = (event.target as Element).closest("[class*='mark-']");
    if (mark === null || store.summary === null) {
      return;
    }
    const markClass = Array.from(mark.classList).find((c) => /^mark-\d+$/.test(c));
    const bounds = markClass ? store.markBounds(markClass) : null;
    if (markClass && bounds) {
      gesture = beginDrag(markClass, bounds, event.clientX, event.clientY);
    }
  });
  canvas.addEventListener("pointermove", (event) => {
    if (gesture !== null) {
      gesture = moveDrag(gesture, event.clientX, event.clientY);
    }
  });
  canvas.addEventListener("pointerup", async () => {
    if (gesture === null) {
      return;
    }
    const finished = gesture;
    gesture = null;
    await store.commitDrag(finished);
    render();
  });

  await store.load();
  render();
}
