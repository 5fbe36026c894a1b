import { ApiClient } from "./api.js";
import { ViewState } from "./state.js";

export interface ViewContext {
  api: ApiClient;
  state: ViewState;
  navigate: (next: ViewState) => void;
  signal: AbortSignal;
}

export function go(ctx: ViewContext, changes: Partial<ViewState>): void {
  ctx.navigate({ ...ctx.state, ...changes });
}
