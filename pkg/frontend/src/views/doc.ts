/** Document view: subject and date on top, membership to the selected
 * topic, the topic's top words that occur in this document, full text,
 * and the document's sentiment triple. */

import { ViewContext, go } from "../context.js";
import { el, fmt } from "../dom.js";

function contentTerms(content: string): Set<string> {
  const matches = content.toLowerCase().match(/[^\W_]+/gu) ?? [];
  return new Set(matches);
}

export async function renderDocView(container: HTMLElement,
                                    ctx: ViewContext): Promise<void> {
  const id = ctx.state.doc;
  if (!id) throw new Error("no document selected");
  const doc = await ctx.api.doc(id, ctx.signal);
  const sentiment = await ctx.api.docSentiment(id, ctx.signal);

  const topicId = ctx.state.topic ??
    doc.topics.reduce((a, b) => (b.membership > a.membership ? b : a)).topic;
  const membership = doc.topics.find((t) => t.topic === topicId);
  const words = await ctx.api.topicWords(topicId, null, 50, ctx.signal);
  const present = contentTerms(doc.content);
  const inDoc = words.filter((w) => present.has(w.term));
  const maxWeight = Math.max(...inDoc.map((w) => w.weight), 1e-12);

  container.append(
    el("header", {},
      el("button", { class: "crumb",
                     click: () => go(ctx, { view: "topic", topic: topicId,
                                            doc: null }) },
         `← topic ${topicId}`),
      el("h1", { class: "doc-subject" }, doc.title || doc.id),
      el("p", { class: "doc-date" }, doc.date)),
    el("section", { class: "panel" },
      el("h2", {}, `Membership in topic ${topicId}`),
      el("p", { class: "doc-membership", "data-membership":
                membership ? membership.membership : 0 },
         membership ? fmt(membership.membership) : "–"),
      el("h2", {}, "Topic words in this document"),
      el("div", { class: "word-list" },
        ...inDoc.map((w) => el("button", {
          class: "word-row",
          "data-term": w.term,
          click: () => go(ctx, { view: "word", term: w.term, doc: null }),
        },
          el("span", { class: "word-term" }, w.term),
          el("span", { class: "bar-track" },
            el("span", { class: "bar",
                         style: `width:${(100 * w.weight / maxWeight)
                                  .toFixed(2)}%` })),
          el("span", { class: "word-weight" }, fmt(w.weight)),
        )))),
    el("section", { class: "panel" },
      el("h2", {}, "Sentiment"),
      el("p", { class: "triple" },
        sentiment.sentiment
          ? `positive ${fmt(sentiment.sentiment[0])} · ` +
            `negative ${fmt(sentiment.sentiment[1])} · ` +
            `neutral ${fmt(sentiment.sentiment[2])}`
          : "no sentiment recorded")),
    el("section", { class: "panel" },
      el("h2", {}, "Full text"),
      el("p", { class: "doc-content" }, doc.content),
      doc.url ? el("p", {}, el("a", { href: doc.url }, "permalink")) : null),
  );
}
