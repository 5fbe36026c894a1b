/** UI behavior against the live fixture index server (headless DOM). */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/main";
import { DEFAULT_STATE, ViewState, decodeState } from "../src/state";

const BASE = process.env.TW_API_BASE ?? "http://127.0.0.1:8080";
const api = new ApiClient(BASE);

function freshApp(): App {
  document.body.innerHTML = '<div id="app"></div>';
  window.location.hash = "";
  return new App(document.getElementById("app")!, api);
}

async function waitFor(predicate: () => boolean,
                       timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error("condition not met in time");
}

function state(changes: Partial<ViewState>): ViewState {
  return { ...DEFAULT_STATE, ...changes };
}

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
});

describe("corpus view", () => {
  it("lists every topic the API reports", async () => {
    const app = freshApp();
    await app.render(state({ view: "corpus" }));
    const topics = await api.topics();
    const rows = document.querySelectorAll(".topic-row");
    expect(rows.length).toBe(topics.length);
    for (const topic of topics) {
      expect(document.querySelector(`[data-topic="${topic.id}"]`))
        .not.toBeNull();
    }
  });

  it("switches layouts while preserving the rows", async () => {
    const app = freshApp();
    await app.render(state({ view: "corpus", layout: "grid" }));
    const before = document.querySelectorAll(".topic-row").length;
    expect(document.querySelector(".topic-list.layout-grid")).not.toBeNull();
    await app.render(state({ view: "corpus", layout: "list" }));
    expect(document.querySelector(".topic-list.layout-list")).not.toBeNull();
    expect(document.querySelectorAll(".topic-row").length).toBe(before);
  });

  it("navigates to a topic and records it in the fragment", async () => {
    const app = freshApp();
    await app.render(state({ view: "corpus" }));
    (document.querySelector('[data-topic="1"]') as HTMLButtonElement).click();
    await waitFor(() => window.location.hash.includes("/topic/1"));
    expect(decodeState(window.location.hash).topic).toBe(1);
  });
});

describe("topic view", () => {
  it("shows the doc list for the brushed slice, matching the API",
     async () => {
    const app = freshApp();
    await app.render(state({ view: "topic", topic: 0, slice: 2 }));
    const expected = await api.topicDocs(0, 2);
    const rows = Array.from(document.querySelectorAll(".doc-row"));
    expect(rows.length).toBe(expected.length);
    expect(rows.map((r) => r.getAttribute("data-doc")))
      .toEqual(expected.map((d) => d.id));
    // rendered membership strings come straight from payload values
    for (let i = 0; i < rows.length; i++) {
      const shown = rows[i].querySelector(".doc-membership")!.textContent;
      expect(shown).toBe(expected[i].membership.toFixed(4));
    }
  });

  it("re-lengthens word bars to pos+neg mass when polarity is on",
     async () => {
    const app = freshApp();
    await app.render(state({ view: "topic", topic: 0, slice: 1 }));
    const neutralWidths = new Map(
      Array.from(document.querySelectorAll(".word-row")).map((row) => [
        row.getAttribute("data-term"),
        (row.querySelector(".bar") as HTMLElement).style.width,
      ]));

    await app.render(state({ view: "topic", topic: 0, slice: 1,
                             polarity: true }));
    const words = await api.topicWords(0, 1);
    const rows = Array.from(document.querySelectorAll(".word-row"));
    expect(rows.length).toBe(words.length);
    let changed = 0;
    for (const row of rows) {
      const term = row.getAttribute("data-term")!;
      const entry = words.find((w) => w.term === term)!;
      const bar = row.querySelector(".bar") as HTMLElement;
      expect(entry.sentiment).not.toBeNull();
      const mass = entry.sentiment![0] + entry.sentiment![1];
      expect(row.getAttribute("data-mass")).toBe(String(mass));
      expect(bar.style.width).toBe(`${(100 * mass).toFixed(2)}%`);
      if (bar.style.width !== neutralWidths.get(term)) changed += 1;
    }
    expect(changed).toBeGreaterThan(0);
  });

  it("brushing the timeline updates the doc list", async () => {
    const app = freshApp();
    window.location.hash = "#/topic/0";
    await app.renderCurrent();
    const segment = document.querySelector(
      '.slice-segment[data-slice="1"]') as HTMLButtonElement;
    segment.click();
    await waitFor(() =>
      (document.querySelector(".doc-list h2")?.textContent ?? "")
        .includes("slice 1"));
    const expected = await api.topicDocs(0, 1);
    const rows = Array.from(document.querySelectorAll(".doc-row"));
    expect(rows.map((r) => r.getAttribute("data-doc")))
      .toEqual(expected.map((d) => d.id));
    expect(decodeState(window.location.hash).slice).toBe(1);
  });

  it("renders the embedding with the white-to-red palette", async () => {
    const app = freshApp();
    await app.render(state({ view: "topic", topic: 0 }));
    const points = Array.from(
      document.querySelectorAll(".embedding-point"));
    expect(points.length).toBeGreaterThanOrEqual(2);
    const byNegativity = points
      .map((p) => ({
        negative: Number(p.getAttribute("data-negative")),
        fill: p.getAttribute("fill")!,
      }))
      .sort((a, b) => a.negative - b.negative);
    const green = (fill: string) => Number(fill.match(/\d+/g)![1]);
    // more negative -> less green/blue -> redder
    expect(green(byNegativity[byNegativity.length - 1].fill))
      .toBeLessThanOrEqual(green(byNegativity[0].fill));
  });

  it("uses one pos and one neg bar per word behind the two-bar flag",
     async () => {
    const app = freshApp();
    await app.render(state({ view: "topic", topic: 0, polarity: true,
                             flags: ["two-bar"] }));
    const first = document.querySelector(".word-row .bar-track")!;
    expect(first.querySelectorAll(".bar-positive").length).toBe(1);
    expect(first.querySelectorAll(".bar-negative").length).toBe(1);
  });
});

describe("word view", () => {
  it("renders one bar per topic for a term used in several topics",
     async () => {
    const app = freshApp();
    const payload = await api.wordTopics("banking");
    const used = payload.topics.filter((t) => t.weight > 0);
    expect(used.length).toBeGreaterThanOrEqual(2);
    await app.render(state({ view: "word", term: "banking" }));
    const rows = Array.from(document.querySelectorAll(".word-topic-row"));
    expect(rows.length).toBe(used.length);
    for (const t of used) {
      const row = document.querySelector(
        `.word-topic-row[data-topic="${t.topic}"]`)!;
      expect(row.getAttribute("data-weight")).toBe(String(t.weight));
      expect(row.getAttribute("data-rank")).toBe(String(t.rank));
      expect(row.querySelectorAll(".bar").length).toBe(1);
    }
  });

  it("shows a not-found panel for a missing term", async () => {
    const app = freshApp();
    await app.render(state({ view: "word", term: "zzznotaword" }));
    expect(document.querySelector(".error-panel.not-found")).not.toBeNull();
    expect(document.querySelector(".retry")).not.toBeNull();
  });
});

describe("document view", () => {
  it("shows subject, date, and the membership from the API payload",
     async () => {
    const docs = await api.topicDocs(1, null);
    const target = docs[0];
    const app = freshApp();
    await app.render(state({ view: "doc", doc: target.id, topic: 1 }));
    const detail = await api.doc(target.id);
    expect(document.querySelector(".doc-subject")!.textContent)
      .toBe(detail.title);
    expect(document.querySelector(".doc-date")!.textContent)
      .toBe(detail.date);
    const memberEl = document.querySelector("p.doc-membership")!;
    const expected = detail.topics.find((t) => t.topic === 1)!.membership;
    expect(memberEl.getAttribute("data-membership")).toBe(String(expected));
    expect(memberEl.textContent).toBe(expected.toFixed(4));
  });
});

describe("resilience and access", () => {
  it("shows an error banner with retry when the API is unreachable",
     async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const dead = new App(document.getElementById("app")!,
                         new ApiClient("http://127.0.0.1:9"));
    await dead.render(state({ view: "corpus" }));
    expect(document.querySelector(".error-banner")).not.toBeNull();
    expect(document.querySelector(".retry")).not.toBeNull();
  });

  it("keeps every interactive element keyboard-focusable", async () => {
    const app = freshApp();
    await app.render(state({ view: "topic", topic: 0 }));
    const interactive = document.querySelectorAll(
      "button, [tabindex]");
    expect(interactive.length).toBeGreaterThan(10);
    for (const node of interactive) {
      const tab = node.getAttribute("tabindex");
      expect(tab === null || Number(tab) >= 0).toBe(true);
    }
  });

  it("serves the UI shell from the index server at /ui/", async () => {
    const resp = await fetch(`${BASE}/ui/`);
    expect(resp.status).toBe(200);
    const html = await resp.text();
    expect(html).toContain('<div id="app"');
  });
});
