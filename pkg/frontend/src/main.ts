/** Router and app shell. Each hash change cancels in-flight requests,
 * decodes the fragment into view state, and renders the matching view;
 * failures surface as a banner with a retry affordance. */

import { ApiClient, ApiError } from "./api.js";
import { ViewContext } from "./context.js";
import { clear, el } from "./dom.js";
import { ViewState, decodeState, encodeState } from "./state.js";
import { renderCorpusView } from "./views/corpus.js";
import { renderDocView } from "./views/doc.js";
import { renderTopicView } from "./views/topic.js";
import { renderWordView } from "./views/word.js";

export class App {
  private controller: AbortController | null = null;
  private suppressed: string | null = null;

  constructor(readonly root: HTMLElement, readonly api: ApiClient) {}

  start(): void {
    window.addEventListener("hashchange", () => {
      if (this.suppressed === window.location.hash) {
        this.suppressed = null;
        return;
      }
      void this.renderCurrent();
    });
    void this.renderCurrent();
  }

  navigate(state: ViewState): void {
    const fragment = encodeState(state);
    if (window.location.hash !== fragment) {
      // render directly; the hashchange listener skips this transition
      this.suppressed = fragment;
      window.location.hash = fragment;
    }
    void this.render(state);
  }

  async renderCurrent(): Promise<void> {
    await this.render(decodeState(window.location.hash));
  }

  async render(state: ViewState): Promise<void> {
    this.controller?.abort();
    this.controller = new AbortController();
    const ctx: ViewContext = {
      api: this.api,
      state,
      navigate: (next) => this.navigate(next),
      signal: this.controller.signal,
    };
    const container = el("main", { class: `view view-${state.view}` });
    try {
      switch (state.view) {
        case "corpus":
          await renderCorpusView(container, ctx);
          break;
        case "topic":
          await renderTopicView(container, ctx);
          break;
        case "doc":
          await renderDocView(container, ctx);
          break;
        case "word":
          await renderWordView(container, ctx);
          break;
      }
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      clear(container);
      container.append(this.errorPanel(err, state));
    }
    clear(this.root);
    this.root.append(container);
  }

  private errorPanel(err: unknown, state: ViewState): HTMLElement {
    const notFound = err instanceof ApiError && err.status === 404;
    const message = err instanceof Error ? err.message : String(err);
    return el("div", { class: notFound ? "error-panel not-found"
                                       : "error-banner" },
      el("h2", {}, notFound ? "Not found" : "Something went wrong"),
      el("p", { class: "error-message" }, message),
      el("button", { class: "retry", click: () => void this.render(state) },
         "retry"),
      el("button", { class: "crumb",
                     click: () => this.navigate({ ...state, view: "corpus",
                                                  topic: null, doc: null,
                                                  term: null }) },
         "back to corpus"),
    );
  }
}

export function boot(): void {
  const base = (window as unknown as { __API_BASE__?: string }).__API_BASE__
    ?? "";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  new App(root, new ApiClient(base)).start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
