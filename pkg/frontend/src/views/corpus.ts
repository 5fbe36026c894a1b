/** Corpus overview: every topic with its temporal proportions, top words,
 * and overall share. Four deployment layouts share the same data. */

import { sparkline } from "../charts.js";
import { ViewContext, go } from "../context.js";
import { el, pct } from "../dom.js";
import { LayoutMode } from "../state.js";

const LAYOUTS: LayoutMode[] = ["grid", "scaled", "list", "stacked"];

export async function renderCorpusView(container: HTMLElement,
                                       ctx: ViewContext): Promise<void> {
  const topics = await ctx.api.topics(ctx.signal);

  const switcher = el("div", { class: "layout-switcher", role: "toolbar" });
  for (const layout of LAYOUTS) {
    switcher.append(el("button", {
      class: `layout-button${layout === ctx.state.layout ? " active" : ""}`,
      "data-layout": layout,
      "aria-pressed": layout === ctx.state.layout ? "true" : "false",
      click: () => go(ctx, { layout }),
    }, layout));
  }

  const list = el("div", { class: `topic-list layout-${ctx.state.layout}` });
  for (const topic of topics) {
    const words = topic.top_words.map((w) => w.term).join(" · ");
    const row = el("button", {
      class: "topic-row",
      "data-topic": topic.id,
      click: () => go(ctx, { view: "topic", topic: topic.id }),
    },
      el("span", { class: "topic-id" }, `Topic ${topic.id}`),
      sparkline(topic.slice_proportions),
      el("span", { class: "topic-words" }, words),
      el("span", { class: "topic-proportion" },
         pct(topic.overall_proportion)),
    );
    if (ctx.state.layout === "scaled") {
      const size = 0.8 + 2.5 * topic.overall_proportion;
      row.style.fontSize = `${size.toFixed(2)}em`;
    }
    list.append(row);
  }

  container.append(
    el("header", {},
       el("h1", {}, "Corpus"),
       el("p", { class: "hint" },
          `${topics.length} topics; pick one to drill in`)),
    switcher, list);
}
