/** View state, fully encoded in the URL fragment so each screen is
 * shareable and bookmarkable. */

export type ViewName = "corpus" | "topic" | "doc" | "word";
export type LayoutMode = "grid" | "scaled" | "list" | "stacked";

export interface ViewState {
  view: ViewName;
  topic: number | null;
  doc: string | null;
  term: string | null;
  slice: number | null;   // null means the whole-corpus aggregate
  layout: LayoutMode;
  polarity: boolean;
  flags: string[];        // feature flags, e.g. "two-bar"
}

export const DEFAULT_STATE: ViewState = {
  view: "corpus",
  topic: null,
  doc: null,
  term: null,
  slice: null,
  layout: "list",
  polarity: false,
  flags: [],
};

export function encodeState(state: ViewState): string {
  let path: string;
  switch (state.view) {
    case "corpus":
      path = "/corpus";
      break;
    case "topic":
      path = `/topic/${state.topic}`;
      break;
    case "doc":
      path = `/doc/${encodeURIComponent(state.doc ?? "")}`;
      break;
    case "word":
      path = `/word/${encodeURIComponent(state.term ?? "")}`;
      break;
  }
  const query = new URLSearchParams();
  if (state.slice !== null) query.set("slice", String(state.slice));
  if (state.layout !== DEFAULT_STATE.layout) query.set("layout", state.layout);
  if (state.polarity) query.set("polarity", "1");
  if (state.view === "doc" && state.topic !== null) {
    query.set("topic", String(state.topic));
  }
  if (state.flags.length) query.set("flags", state.flags.join(","));
  const suffix = query.toString();
  return `#${path}${suffix ? "?" + suffix : ""}`;
}

const LAYOUTS: LayoutMode[] = ["grid", "scaled", "list", "stacked"];

export function decodeState(hash: string): ViewState {
  const state: ViewState = { ...DEFAULT_STATE, flags: [] };
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return state;
  const [path, queryString] = raw.split("?", 2);
  const parts = path.split("/").filter((p) => p.length > 0);
  switch (parts[0]) {
    case "topic":
      state.view = "topic";
      state.topic = parts.length > 1 ? Number(parts[1]) : null;
      break;
    case "doc":
      state.view = "doc";
      state.doc = parts.length > 1 ? decodeURIComponent(parts[1]) : null;
      break;
    case "word":
      state.view = "word";
      state.term = parts.length > 1 ? decodeURIComponent(parts[1]) : null;
      break;
    default:
      state.view = "corpus";
  }
  if (queryString) {
    const query = new URLSearchParams(queryString);
    const slice = query.get("slice");
    if (slice !== null && slice !== "") state.slice = Number(slice);
    const layout = query.get("layout");
    if (layout && (LAYOUTS as string[]).includes(layout)) {
      state.layout = layout as LayoutMode;
    }
    state.polarity = query.get("polarity") === "1";
    const topic = query.get("topic");
    if (topic !== null && state.view === "doc") state.topic = Number(topic);
    const flags = query.get("flags");
    if (flags) state.flags = flags.split(",").filter((f) => f.length > 0);
  }
  return state;
}
