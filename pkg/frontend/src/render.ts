// Pure HTML renderers: view model in, markup string out. No DOM access
// here, which keeps every view testable under plain vitest.

import type { ApiError } from "./api.js";
import { routeHref, type Route } from "./router.js";
import type {
  BlockDetailVM,
  BlockListVM,
  HistoryTimelineVM,
  Paging,
  QueryBuilderVM,
  QueryResultsVM,
  SchemaDetailVM,
  SchemaRowVM,
  SchemaStatesVM,
  StateVM,
  StatsVM,
  SyncBannerVM,
  TxDetailVM,
} from "./vm.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function link(route: Route, label: string, cls = ""): string {
  const attr = cls ? ` class="${cls}"` : "";
  return `<a href="${esc(routeHref(route))}"${attr}>${esc(label)}</a>`;
}

function validBadge(isValid: boolean): string {
  return isValid
    ? `<span class="badge ok">valid</span>`
    : `<span class="badge bad">invalid</span>`;
}

function fieldTable(fields: [string, string][]): string {
  const rows = fields
    .map(([k, v]) => `<tr><th>${esc(k)}</th><td>${esc(v)}</td></tr>`)
    .join("");
  return `<table class="fields">${rows}</table>`;
}

/** Prev/next controls; both ends disable rather than pointing past the data. */
export function renderPager(p: Paging, href: (offset: number) => string): string {
  const prev = p.hasPrev
    ? `<a class="pager-link" href="${esc(href(p.prevOffset))}">&laquo; prev</a>`
    : `<span class="pager-link disabled">&laquo; prev</span>`;
  const next = p.hasNext
    ? `<a class="pager-link" href="${esc(href(p.nextOffset))}">next &raquo;</a>`
    : `<span class="pager-link disabled">next &raquo;</span>`;
  return (
    `<nav class="pager">${prev}` +
    `<span class="pager-page">page ${p.pageIndex} of ${p.pageCount} · ${p.totalCount} total</span>` +
    `${next}</nav>`
  );
}

export function renderError(err: ApiError): string {
  const details: string[] = [];
  if (err.offset !== undefined) details.push(`offset ${err.offset}`);
  if (err.expected !== undefined) details.push(`expected ${err.expected}`);
  const tail = details.length ? ` <span class="error-detail">(${esc(details.join(", "))})</span>` : "";
  return (
    `<div class="error"><span class="error-code">${esc(err.code)}</span> ` +
    `${esc(err.message)}${tail}</div>`
  );
}

export function renderLoading(): string {
  return `<div class="loading">loading…</div>`;
}

// -- blocks -------------------------------------------------------------------

export function renderBlockList(vm: BlockListVM): string {
  const rows = vm.rows
    .map(
      (b) =>
        `<tr><td>${link({ kind: "block", number: b.number }, String(b.number))}</td>` +
        `<td>${b.txCount}</td><td>${esc(b.commitTime)}</td>` +
        `<td class="mono">${esc(b.shortHash)}…</td></tr>`,
    )
    .join("");
  return (
    `<h2>Blocks</h2>` +
    `<table class="list"><thead><tr><th>number</th><th>txs</th><th>committed</th><th>hash</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    renderPager(vm.paging, (offset) => routeHref({ kind: "blocks", offset }))
  );
}

export function renderBlockDetail(vm: BlockDetailVM): string {
  const txRows = vm.transactions
    .map(
      (t) =>
        `<tr><td>${t.txNum}</td><td>${link({ kind: "tx", txId: t.txId }, t.txId, "mono")}</td>` +
        `<td>${esc(t.type)}</td><td>${validBadge(t.isValid)}</td>` +
        `<td>${esc(t.chaincode)}</td><td>${esc(t.fn)}</td></tr>`,
    )
    .join("");
  return (
    `<h2>Block</h2>` +
    fieldTable(vm.fields) +
    `<h3>Transactions</h3>` +
    `<table class="list"><thead><tr><th>#</th><th>tx id</th><th>type</th><th>validity</th>` +
    `<th>chaincode</th><th>function</th></tr></thead><tbody>${txRows}</tbody></table>`
  );
}

// -- transactions -------------------------------------------------------------

export function renderTxDetail(vm: TxDetailVM): string {
  const reads = vm.reads
    .map((r) => `<tr><td>${link({ kind: "state", key: r.key, includeInvalid: false }, r.key, "mono")}</td><td>${esc(r.version)}</td></tr>`)
    .join("");
  const writes = vm.writes
    .map(
      (w) =>
        `<tr><td>${link({ kind: "state", key: w.key, includeInvalid: false }, w.key, "mono")}</td>` +
        `<td>${esc(w.op)}</td><td class="mono">${esc(w.valuePreview)}</td></tr>`,
    )
    .join("");
  return (
    `<h2>Transaction <span class="mono">${esc(vm.txId)}</span> ${validBadge(vm.isValid)}` +
    ` <span class="muted">code ${vm.validationCode}</span></h2>` +
    fieldTable(vm.fields) +
    `<h3>Read set</h3>` +
    `<table class="list"><thead><tr><th>key</th><th>version</th></tr></thead><tbody>${reads}</tbody></table>` +
    `<h3>Write set</h3>` +
    `<table class="list"><thead><tr><th>key</th><th>op</th><th>value</th></tr></thead><tbody>${writes}</tbody></table>`
  );
}

// -- state & history ----------------------------------------------------------

export function renderState(vm: StateVM, timeline: HistoryTimelineVM, includeInvalid: boolean): string {
  const schema =
    vm.schemaId === null
      ? "non-JSON"
      : link({ kind: "schema", schemaId: vm.schemaId }, `schema ${vm.schemaId}`);
  const toggleRoute: Route = { kind: "state", key: vm.key, includeInvalid: !includeInvalid };
  const toggle =
    `<a class="toggle" href="${esc(routeHref(toggleRoute))}">` +
    (includeInvalid ? "hide invalid attempts" : "show invalid attempts") +
    `</a>`;
  return (
    `<h2>State <span class="mono">${esc(vm.key)}</span></h2>` +
    `<p>version ${esc(vm.version)} · ${schema}</p>` +
    `<pre class="value">${esc(vm.pretty)}</pre>` +
    `<h3>History ${toggle}</h3>` +
    renderTimeline(timeline)
  );
}

export function renderTimeline(vm: HistoryTimelineVM): string {
  if (vm.entries.length === 0) return `<p class="muted">no history recorded</p>`;
  const items = vm.entries
    .map((e) => {
      const diffRows = e.diff
        .map(
          (d) =>
            `<tr class="diff-${d.kind}"><td>${esc(d.path)}</td><td>${esc(d.kind)}</td>` +
            `<td class="mono">${d.before === null ? "—" : esc(d.before)}</td>` +
            `<td class="mono">${d.after === null ? "—" : esc(d.after)}</td></tr>`,
        )
        .join("");
      const diffTable = e.diff.length
        ? `<table class="diff"><thead><tr><th>path</th><th>change</th><th>before</th><th>after</th></tr></thead>` +
          `<tbody>${diffRows}</tbody></table>`
        : `<p class="muted">no value change</p>`;
      return (
        `<li class="timeline-entry${e.isValid ? "" : " invalid"}">` +
        `<div class="entry-head"><span class="mono">${esc(e.version)}</span> ` +
        `<span class="op">${esc(e.op)}</span> ${validBadge(e.isValid)} ` +
        `${link({ kind: "tx", txId: e.txId }, e.txId, "mono")}</div>` +
        diffTable +
        `</li>`
      );
    })
    .join("");
  return `<ol class="timeline">${items}</ol>`;
}

// -- schemas ------------------------------------------------------------------

export function renderSchemaOverview(rows: SchemaRowVM[]): string {
  const body = rows
    .map(
      (s) =>
        `<tr><td>${link({ kind: "schema", schemaId: s.schemaId }, String(s.schemaId))}</td>` +
        `<td>${s.levels}</td><td>${esc(s.propsPerLevel)}</td><td>${s.members}</td>` +
        `<td>${esc(s.updatedAt)}</td>` +
        `<td>${link({ kind: "schema-states", schemaId: s.schemaId, offset: 0 }, "states")}</td></tr>`,
    )
    .join("");
  return (
    `<h2>Schemas</h2>` +
    `<table class="list"><thead><tr><th>id</th><th>levels</th><th>props per level</th>` +
    `<th>members</th><th>updated</th><th></th></tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderSchemaDetail(vm: SchemaDetailVM): string {
  const pathRows = vm.paths
    .map((p) => `<tr><td class="mono">${esc(p.path)}</td><td>${esc(p.type)}</td></tr>`)
    .join("");
  return (
    `<h2>Schema ${vm.row.schemaId}</h2>` +
    fieldTable([
      ["levels", String(vm.row.levels)],
      ["props per level", vm.row.propsPerLevel],
      ["member states", String(vm.row.members)],
      ["updated", vm.row.updatedAt],
    ]) +
    `<p>${link({ kind: "schema-states", schemaId: vm.row.schemaId, offset: 0 }, "browse member states")}` +
    ` · ${link({ kind: "query", expr: "", scope: "latest", schemaId: vm.row.schemaId, offset: 0 }, "query this schema")}</p>` +
    `<h3>Paths</h3>` +
    `<table class="list"><thead><tr><th>path</th><th>type</th></tr></thead><tbody>${pathRows}</tbody></table>`
  );
}

export function renderSchemaStates(schemaId: number, vm: SchemaStatesVM): string {
  const body = vm.rows
    .map(
      (s) =>
        `<tr><td>${link({ kind: "state", key: s.key, includeInvalid: false }, s.key, "mono")}</td>` +
        `<td>${esc(s.version)}</td><td class="mono">${esc(s.valuePreview)}</td></tr>`,
    )
    .join("");
  return (
    `<h2>Schema ${schemaId} · member states</h2>` +
    `<table class="list"><thead><tr><th>key</th><th>version</th><th>value</th></tr></thead><tbody>${body}</tbody></table>` +
    renderPager(vm.paging, (offset) => routeHref({ kind: "schema-states", schemaId, offset }))
  );
}

// -- queries ------------------------------------------------------------------

export function renderQueryForm(
  expr: string,
  scope: string,
  schemaId: number | null,
  schemas: SchemaRowVM[],
  builder: QueryBuilderVM,
): string {
  const schemaOptions =
    `<option value="">any schema</option>` +
    schemas
      .map(
        (s) =>
          `<option value="${s.schemaId}"${s.schemaId === schemaId ? " selected" : ""}>` +
          `${s.schemaId} (${esc(s.propsPerLevel)})</option>`,
      )
      .join("");
  const pathOptions = builder.paths
    .map((p) => `<option value="${esc(p)}">${esc(p)}</option>`)
    .join("");
  const opOptions = builder.operators.map((o) => `<option value="${esc(o)}">${esc(o)}</option>`).join("");
  const builderBlock = builder.paths.length
    ? `<fieldset class="builder"><legend>condition builder</legend>` +
      `<select id="builder-path">${pathOptions}</select>` +
      `<select id="builder-op">${opOptions}</select>` +
      `<input id="builder-literal" type="text" placeholder="value">` +
      `<button type="button" id="builder-insert">insert</button></fieldset>`
    : `<p class="muted">pick a schema to build conditions from its paths</p>`;
  return (
    `<h2>Query</h2>` +
    `<form id="query-form">` +
    `<div class="query-row">` +
    `<select id="query-scope" name="scope">` +
    `<option value="latest"${scope === "latest" ? " selected" : ""}>current state</option>` +
    `<option value="history"${scope === "history" ? " selected" : ""}>history</option>` +
    `</select>` +
    `<select id="query-schema" name="schema">${schemaOptions}</select>` +
    `</div>` +
    builderBlock +
    `<textarea id="query-expr" name="expr" rows="3" spellcheck="false" ` +
    `placeholder="path = &quot;literal&quot; AND other &gt; 0">${esc(expr)}</textarea>` +
    `<button type="submit">run</button>` +
    `</form>`
  );
}

export function renderQueryResults(
  vm: QueryResultsVM,
  href: (offset: number) => string,
): string {
  if (vm.paging.totalCount === 0) return `<p class="muted">no matches</p>`;
  const body = vm.rows
    .map(
      (r) =>
        `<tr><td>${link({ kind: "state", key: r.key, includeInvalid: false }, r.key, "mono")}</td>` +
        `<td>${esc(r.version)}</td><td>${r.schemaId === null ? "—" : r.schemaId}</td>` +
        `<td class="mono">${esc(r.valuePreview)}</td></tr>`,
    )
    .join("");
  return (
    `<table class="list"><thead><tr><th>key</th><th>version</th><th>schema</th><th>value</th></tr></thead>` +
    `<tbody>${body}</tbody></table>` +
    renderPager(vm.paging, href)
  );
}

// -- stats & sync -------------------------------------------------------------

export function renderStats(vm: StatsVM): string {
  const counters = vm.counters
    .map(([k, v]) => `<tr><th>${esc(k)}</th><td>${v}</td></tr>`)
    .join("");
  const nameTable = (title: string, rows: [string, number][]): string =>
    `<h3>${esc(title)}</h3><table class="list"><thead><tr><th>name</th><th>txs</th></tr></thead><tbody>` +
    rows.map(([n, c]) => `<tr><td>${esc(n)}</td><td>${c}</td></tr>`).join("") +
    `</tbody></table>`;
  return (
    `<h2>Statistics</h2>` +
    `<table class="fields">${counters}</table>` +
    nameTable("Per chaincode", vm.perChaincode) +
    nameTable("Per creator", vm.perCreator)
  );
}

export function renderSyncBanner(vm: SyncBannerVM): string {
  return (
    `<span class="dot ${vm.live ? "live" : "idle"}"></span>` +
    `<span class="banner-text">${esc(vm.text)}</span>`
  );
}

export function renderNav(active: string): string {
  const items: [string, Route][] = [
    ["blocks", { kind: "blocks", offset: 0 }],
    ["schemas", { kind: "schemas" }],
    ["query", { kind: "query", expr: "", scope: "latest", schemaId: null, offset: 0 }],
    ["stats", { kind: "stats" }],
  ];
  return items
    .map(([label, route]) =>
      label === active
        ? `<a class="nav-item active" href="${esc(routeHref(route))}">${esc(label)}</a>`
        : `<a class="nav-item" href="${esc(routeHref(route))}">${esc(label)}</a>`,
    )
    .join("");
}
