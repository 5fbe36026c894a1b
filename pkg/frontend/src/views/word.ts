/** Word view across topics: one bar per topic where the term has weight,
 * with its in-topic rank, plus the term's sentiment triple. */

import { ViewContext, go } from "../context.js";
import { el, fmt } from "../dom.js";

export async function renderWordView(container: HTMLElement,
                                     ctx: ViewContext): Promise<void> {
  const term = ctx.state.term;
  if (!term) throw new Error("no term selected");
  const [payload, sentiment] = await Promise.all([
    ctx.api.wordTopics(term, ctx.signal),
    ctx.api.wordSentiment(term, ctx.signal),
  ]);
  const visible = payload.topics.filter((t) => t.weight > 0);
  const maxWeight = Math.max(...visible.map((t) => t.weight), 1e-300);

  container.append(
    el("header", {},
      el("button", { class: "crumb",
                     click: () => go(ctx, { view: "corpus", term: null }) },
         "← corpus"),
      el("h1", {}, `“${payload.term}”`),
      el("p", { class: "hint" },
         `corpus frequency ${payload.frequency}`)),
    el("section", { class: "panel" },
      el("h2", {}, "Weight and rank per topic"),
      el("div", { class: "word-topic-list" },
        ...visible.map((t) => el("button", {
          class: "word-topic-row",
          "data-topic": t.topic,
          "data-weight": t.weight,
          "data-rank": t.rank,
          click: () => go(ctx, { view: "topic", topic: t.topic,
                                 term: null }),
        },
          el("span", { class: "word-topic-label" },
             `topic ${t.topic} · rank ${t.rank + 1}`),
          el("span", { class: "bar-track" },
            el("span", { class: "bar",
                         style: `width:${(100 * t.weight / maxWeight)
                                  .toFixed(2)}%` })),
          el("span", { class: "word-weight" }, fmt(t.weight, 6)),
        )))),
    el("section", { class: "panel" },
      el("h2", {}, "Sentiment"),
      el("p", { class: "triple" },
        sentiment.overall
          ? `positive ${fmt(sentiment.overall[0])} · ` +
            `negative ${fmt(sentiment.overall[1])} · ` +
            `neutral ${fmt(sentiment.overall[2])}`
          : "no sentiment recorded")),
  );
}
