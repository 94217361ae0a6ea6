// Controller: reads the route from the hash, fetches exactly the responses
// that view needs, projects them through the view models, and swaps the
// rendered markup in. Navigation is always a hash change.

import { ApiError, type Client } from "./api.js";
import {
  renderBlockDetail,
  renderBlockList,
  renderError,
  renderLoading,
  renderNav,
  renderQueryForm,
  renderQueryResults,
  renderSchemaDetail,
  renderSchemaOverview,
  renderSchemaStates,
  renderState,
  renderStats,
  renderSyncBanner,
  renderTxDetail,
} from "./render.js";
import { PAGE_SIZE, parseHash, routeHref, type QueryScope, type Route } from "./router.js";
import type { SchemaDetail } from "./types.js";
import {
  blockDetailVM,
  blockListVM,
  buildCondition,
  historyTimelineVM,
  queryBuilderVM,
  queryResultsVM,
  schemaDetailVM,
  schemaOverviewVM,
  schemaStatesVM,
  stateVM,
  statsVM,
  syncBannerVM,
  txDetailVM,
} from "./vm.js";

const SYNC_POLL_MS = 5000;

export class App {
  private readonly client: Client;
  private readonly view: HTMLElement;
  private readonly banner: HTMLElement;
  private generation = 0;

  constructor(client: Client, view: HTMLElement, banner: HTMLElement) {
    this.client = client;
    this.view = view;
    this.banner = banner;
  }

  start(): void {
    window.addEventListener("hashchange", () => {
      void this.navigate();
    });
    this.view.addEventListener("submit", (ev) => this.onSubmit(ev));
    this.view.addEventListener("click", (ev) => this.onClick(ev));
    this.view.addEventListener("change", (ev) => this.onChange(ev));
    void this.navigate();
    void this.refreshBanner();
    window.setInterval(() => {
      void this.refreshBanner();
    }, SYNC_POLL_MS);
  }

  private async refreshBanner(): Promise<void> {
    try {
      const status = await this.client.syncStatus();
      this.banner.innerHTML = renderSyncBanner(syncBannerVM(status));
    } catch {
      this.banner.innerHTML = `<span class="dot idle"></span><span class="banner-text">service unreachable</span>`;
    }
  }

  async navigate(): Promise<void> {
    const route = parseHash(window.location.hash);
    const generation = ++this.generation;
    this.view.innerHTML = renderLoading();
    let html: string;
    try {
      html = await this.renderRoute(route);
    } catch (err) {
      html =
        err instanceof ApiError
          ? renderError(err)
          : renderError(new ApiError(String(err), "INTERNAL", 0));
    }
    // A slower response must not clobber the view of a newer route.
    if (generation !== this.generation) return;
    this.setNav(route);
    this.view.innerHTML = html;
  }

  private setNav(route: Route): void {
    const section =
      route.kind === "block" ? "blocks"
      : route.kind === "tx" || route.kind === "state" ? ""
      : route.kind === "schema" || route.kind === "schema-states" ? "schemas"
      : route.kind;
    const nav = document.getElementById("nav");
    if (nav) nav.innerHTML = renderNav(section);
  }

  private async renderRoute(route: Route): Promise<string> {
    switch (route.kind) {
      case "blocks": {
        const resp = await this.client.blocks(route.offset, PAGE_SIZE);
        return renderBlockList(blockListVM(resp, route.offset, PAGE_SIZE));
      }
      case "block": {
        const detail = await this.client.block(route.number);
        return renderBlockDetail(blockDetailVM(detail));
      }
      case "tx": {
        const tx = await this.client.transaction(route.txId);
        return renderTxDetail(txDetailVM(tx));
      }
      case "state": {
        const [entry, history] = await Promise.all([
          this.client.state(route.key),
          this.client.stateHistory(route.key, route.includeInvalid),
        ]);
        return renderState(stateVM(entry), historyTimelineVM(history.items), route.includeInvalid);
      }
      case "schemas": {
        const resp = await this.client.schemas();
        return renderSchemaOverview(schemaOverviewVM(resp));
      }
      case "schema": {
        const detail = await this.client.schema(route.schemaId);
        return renderSchemaDetail(schemaDetailVM(detail));
      }
      case "schema-states": {
        const resp = await this.client.schemaStates(route.schemaId, route.offset, PAGE_SIZE);
        return renderSchemaStates(route.schemaId, schemaStatesVM(resp, route.offset, PAGE_SIZE));
      }
      case "query":
        return this.renderQuery(route);
      case "stats": {
        const stats = await this.client.stats();
        return renderStats(statsVM(stats));
      }
    }
  }

  private async renderQuery(route: Route & { kind: "query" }): Promise<string> {
    const schemas = await this.client.schemas();
    let detail: SchemaDetail | null = null;
    if (route.schemaId !== null) {
      try {
        detail = await this.client.schema(route.schemaId);
      } catch {
        detail = null; // stale schema id in the hash; the form still works
      }
    }
    const form = renderQueryForm(
      route.expr,
      route.scope,
      route.schemaId,
      schemaOverviewVM(schemas),
      queryBuilderVM(detail),
    );
    if (!route.expr.trim()) return form;
    let results: string;
    try {
      const resp = await this.client.runQuery({
        expr: route.expr,
        scope: route.scope,
        schema_id: route.schemaId,
        offset: route.offset,
        limit: PAGE_SIZE,
      });
      results = renderQueryResults(
        queryResultsVM(resp, route.offset, PAGE_SIZE),
        (offset) => routeHref({ ...route, offset }),
      );
    } catch (err) {
      results =
        err instanceof ApiError
          ? renderError(err)
          : renderError(new ApiError(String(err), "INTERNAL", 0));
    }
    return form + results;
  }

  // -- events -----------------------------------------------------------------

  private onSubmit(ev: Event): void {
    const form = ev.target as HTMLElement;
    if (form.id !== "query-form") return;
    ev.preventDefault();
    const expr = (document.getElementById("query-expr") as HTMLTextAreaElement).value;
    const raw = (document.getElementById("query-scope") as HTMLSelectElement).value;
    const scope: QueryScope = raw === "history" ? "history" : "latest";
    const schemaRaw = (document.getElementById("query-schema") as HTMLSelectElement).value;
    window.location.hash = routeHref({
      kind: "query",
      expr,
      scope,
      schemaId: schemaRaw === "" ? null : Number.parseInt(schemaRaw, 10),
      offset: 0,
    });
  }

  private onClick(ev: Event): void {
    const target = ev.target as HTMLElement;
    if (target.id !== "builder-insert") return;
    const path = (document.getElementById("builder-path") as HTMLSelectElement).value;
    const op = (document.getElementById("builder-op") as HTMLSelectElement).value;
    const literal = (document.getElementById("builder-literal") as HTMLInputElement).value;
    const expr = document.getElementById("query-expr") as HTMLTextAreaElement;
    const condition = buildCondition(path, op, literal);
    expr.value = expr.value.trim() ? `${expr.value.trim()} AND ${condition}` : condition;
  }

  private onChange(ev: Event): void {
    const target = ev.target as HTMLElement;
    if (target.id !== "query-schema") return;
    const current = parseHash(window.location.hash);
    if (current.kind !== "query") return;
    const raw = (target as HTMLSelectElement).value;
    const expr = (document.getElementById("query-expr") as HTMLTextAreaElement | null)?.value ?? current.expr;
    window.location.hash = routeHref({
      ...current,
      expr,
      schemaId: raw === "" ? null : Number.parseInt(raw, 10),
      offset: 0,
    });
  }
}
