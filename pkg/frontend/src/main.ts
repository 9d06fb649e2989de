// Browser entry point: wires the controller into the page and polls the
// inbox. Served by the pipeline service alongside the API.

import { ApiClient } from "./api.js";
import { ReviewController, ViewSink } from "./controller.js";
import { renderBundle, renderInbox } from "./render.js";
import type { ConflictBundle, ScenarioRow } from "./types.js";

const POLL_MS = 3000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class DomView implements ViewSink {
  showInbox(rows: ScenarioRow[]): void {
    el("inbox").innerHTML = renderInbox(rows);
  }

  showBundle(bundle: ConflictBundle): void {
    el("bundle").innerHTML = renderBundle(bundle);
  }

  showError(message: string): void {
    const banner = el("banner");
    banner.className = "banner error";
    banner.textContent = message;
  }

  showNotice(message: string): void {
    const banner = el("banner");
    banner.className = "banner notice";
    banner.textContent = message;
  }

  askReload(message: string): void {
    const banner = el("banner");
    banner.className = "banner conflict";
    banner.textContent = `${message} — reload the bundle to continue`;
  }
}

function start(): void {
  const api = new ApiClient("");
  const view = new DomView();
  const controller = new ReviewController(api, view);

  const poll = () =>
    controller.refreshInbox().catch(() => view.showError("API unreachable"));
  poll();
  window.setInterval(poll, POLL_MS);

  document.body.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("open-bundle")) {
      event.preventDefault();
      const id = target.dataset.id;
      if (id) void controller.openBundle(id).catch((e) => view.showError(String(e)));
    } else if (target.classList.contains("accept-suggestion")) {
      const index = Number(target.dataset.suggestion);
      void controller.acceptSuggestion(index).catch((e) => view.showError(String(e)));
    } else if (target.classList.contains("submit-edit")) {
      const textarea = document.querySelector<HTMLTextAreaElement>(".edit-json");
      if (!textarea) return;
      const cmd = controller.parseManualEdit(textarea.value);
      if (cmd) void controller.submitCommand(cmd).catch((e) => view.showError(String(e)));
    } else if (target.classList.contains("revalidate")) {
      void controller.revalidate().catch((e) => view.showError(String(e)));
    } else if (target.classList.contains("discard")) {
      void controller.discard().catch((e) => view.showError(String(e)));
    }
  });
}

document.addEventListener("DOMContentLoaded", start);
