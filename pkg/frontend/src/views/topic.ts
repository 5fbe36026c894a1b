/** Topic drill-down: word bars (optionally re-lengthened by subjective
 * mass), the timeline with per-slice selection, the per-slice topic
 * embedding, and the top-document list. */

import { WordEntry } from "../api.js";
import { embeddingScatter } from "../charts.js";
import { ViewContext, go } from "../context.js";
import { el, fmt, pct } from "../dom.js";

function wordBar(word: WordEntry, maxWeight: number, polarity: boolean,
                 twoBar: boolean, ctx: ViewContext): HTMLElement {
  const mass = word.sentiment
    ? word.sentiment[0] + word.sentiment[1]
    : null;
  const widthFrac = polarity && mass !== null
    ? mass
    : word.weight / maxWeight;
  const row = el("button", {
    class: "word-row",
    "data-term": word.term,
    "data-weight": word.weight,
    ...(mass !== null ? { "data-mass": mass } : {}),
    click: () => go(ctx, { view: "word", term: word.term }),
  });
  const track = el("span", { class: "bar-track" });
  if (polarity && twoBar && word.sentiment) {
    const [pos, neg] = word.sentiment;
    track.append(
      el("span", { class: "bar bar-positive",
                   style: `width:${(100 * pos).toFixed(2)}%` }),
      el("span", { class: "bar bar-negative",
                   style: `width:${(100 * neg).toFixed(2)}%` }),
    );
  } else {
    track.append(el("span", {
      class: `bar${polarity ? " bar-subjective" : ""}`,
      style: `width:${(100 * widthFrac).toFixed(2)}%`,
    }));
  }
  row.append(
    el("span", { class: "word-term" }, word.term),
    track,
    el("span", { class: "word-weight" },
       polarity && mass !== null ? fmt(mass) : fmt(word.weight)),
  );
  return row;
}

export async function renderTopicView(container: HTMLElement,
                                      ctx: ViewContext): Promise<void> {
  const k = ctx.state.topic;
  if (k === null || Number.isNaN(k)) {
    throw new Error("no topic selected");
  }
  const slice = ctx.state.slice;
  const polarity = ctx.state.polarity;
  const twoBar = ctx.state.flags.includes("two-bar");

  const [detail, words, docs, slices, sentiment] = await Promise.all([
    ctx.api.topic(k, ctx.signal),
    ctx.api.topicWords(k, slice, 50, ctx.signal),
    ctx.api.topicDocs(k, slice, ctx.signal),
    ctx.api.slices(ctx.signal),
    ctx.api.topicSentiment(k, ctx.signal),
  ]);
  const embeddingSlice = slice ?? slices.slices.length - 1;
  const [embedding, allTopics] = await Promise.all([
    ctx.api.embedding(embeddingSlice, ctx.signal),
    ctx.api.topics(ctx.signal),
  ]);
  const negativity = await Promise.all(allTopics.map(async (t) => {
    if (t.id === k) return sentiment;
    return ctx.api.topicSentiment(t.id, ctx.signal);
  }));

  const header = el("header", {},
    el("button", { class: "crumb", click: () => go(ctx, { view: "corpus", topic: null }) },
       "← corpus"),
    el("h1", {}, `Topic ${k}`),
    el("p", { class: "hint" },
       `overall ${pct(detail.overall_proportion)}` +
       (slice !== null ? ` · slice ${slice} (${slices.slices[slice].window})`
                       : " · all slices")));

  // timeline: lengthwise selection, one segment per calendar window
  const timeline = el("div", { class: "timeline", role: "toolbar" },
    el("button", {
      class: `slice-segment${slice === null ? " active" : ""}`,
      "data-slice": "all",
      click: () => go(ctx, { slice: null }),
    }, "all"));
  const maxProp = Math.max(...detail.slice_proportions, 1e-12);
  for (const info of slices.slices) {
    const prop = detail.slice_proportions[info.index] ?? 0;
    const seg = el("button", {
      class: `slice-segment${slice === info.index ? " active" : ""}`,
      "data-slice": info.index,
      title: `${info.window}: ${pct(prop)}`,
      click: () => go(ctx, { slice: info.index }),
    }, info.window);
    seg.append(el("span", {
      class: "slice-fill",
      style: `height:${(100 * prop / maxProp).toFixed(1)}%`,
    }));
    timeline.append(seg);
  }

  const toggle = el("button", {
    class: `polarity-toggle${polarity ? " active" : ""}`,
    "aria-pressed": polarity ? "true" : "false",
    click: () => go(ctx, { polarity: !polarity }),
  }, polarity ? "polarity: on" : "polarity: off");
  const hasSentiment = words.some((w) => w.sentiment !== null);
  if (!hasSentiment) {
    toggle.setAttribute("disabled", "");
    toggle.setAttribute("title", "no sentiment data in this store");
  }

  const maxWeight = Math.max(...words.map((w) => w.weight), 1e-12);
  const wordList = el("div", { class: "word-list" },
    ...words.map((w) => wordBar(w, maxWeight, polarity, twoBar, ctx)));

  const points = embedding.topics.map((p) => ({
    id: p.topic_id,
    x: p.x,
    y: p.y,
    negative: negativity[p.topic_id]?.overall?.[1] ?? 0,
    selected: p.topic_id === k,
  }));
  const scatter = embeddingScatter(points,
    (id) => go(ctx, { view: "topic", topic: id }));

  const docList = el("div", { class: "doc-list" },
    el("h2", {}, slice === null ? "Top documents" :
       `Top documents in slice ${slice}`),
    ...docs.map((d) => el("button", {
      class: "doc-row",
      "data-doc": d.id,
      "data-membership": d.membership,
      click: () => go(ctx, { view: "doc", doc: d.id }),
    },
      el("span", { class: "doc-title" }, d.title || d.id),
      el("span", { class: "doc-membership" }, fmt(d.membership)),
      el("span", { class: "doc-tokens" }, `${d.n_tokens} tokens`),
    )));

  container.append(header,
    el("div", { class: "topic-grid" },
      el("section", { class: "panel" },
        el("div", { class: "panel-head" }, el("h2", {}, "Top words"), toggle),
        wordList),
      el("section", { class: "panel" },
        el("h2", {}, `Embedding (slice ${embeddingSlice})`),
        scatter,
        el("h2", {}, "Timeline"),
        timeline),
    ),
    docList);
}
