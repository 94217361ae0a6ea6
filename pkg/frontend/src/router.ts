// Hash routing. Every piece of UI state lives in the hash, so any view is
// reachable by pasting a URL and the back button always works.

export type QueryScope = "latest" | "history";

export type Route =
  | { kind: "blocks"; offset: number }
  | { kind: "block"; number: number }
  | { kind: "tx"; txId: string }
  | { kind: "state"; key: string; includeInvalid: boolean }
  | { kind: "schemas" }
  | { kind: "schema"; schemaId: number }
  | { kind: "schema-states"; schemaId: number; offset: number }
  | {
      kind: "query";
      expr: string;
      scope: QueryScope;
      schemaId: number | null;
      offset: number;
    }
  | { kind: "stats" };

export const PAGE_SIZE = 25;

function intParam(params: URLSearchParams, name: string, fallback: number): number {
  const raw = params.get(name);
  if (raw === null) return fallback;
  const n = Number.parseInt(raw, 10);
  return Number.isFinite(n) && n >= 0 ? n : fallback;
}

export function parseHash(hash: string): Route {
  const stripped = hash.startsWith("#") ? hash.slice(1) : hash;
  const qIndex = stripped.indexOf("?");
  const path = qIndex === -1 ? stripped : stripped.slice(0, qIndex);
  const params = new URLSearchParams(qIndex === -1 ? "" : stripped.slice(qIndex + 1));
  const parts = path.split("/").filter((p) => p.length > 0);

  switch (parts[0]) {
    case "blocks": {
      if (parts.length >= 2) {
        const n = Number.parseInt(parts[1]!, 10);
        if (Number.isFinite(n) && n >= 0) return { kind: "block", number: n };
      }
      return { kind: "blocks", offset: intParam(params, "offset", 0) };
    }
    case "tx": {
      if (parts.length >= 2) return { kind: "tx", txId: decodeURIComponent(parts[1]!) };
      break;
    }
    case "state": {
      if (parts.length >= 2) {
        const key = decodeURIComponent(parts.slice(1).join("/"));
        return { kind: "state", key, includeInvalid: params.get("invalid") === "1" };
      }
      break;
    }
    case "schemas": {
      if (parts.length >= 2) {
        const id = Number.parseInt(parts[1]!, 10);
        if (Number.isFinite(id) && id >= 0) {
          if (parts[2] === "states") {
            return { kind: "schema-states", schemaId: id, offset: intParam(params, "offset", 0) };
          }
          return { kind: "schema", schemaId: id };
        }
      }
      return { kind: "schemas" };
    }
    case "query": {
      const rawSchema = params.get("schema");
      const schemaId = rawSchema === null ? null : Number.parseInt(rawSchema, 10);
      return {
        kind: "query",
        expr: params.get("expr") ?? "",
        scope: params.get("scope") === "history" ? "history" : "latest",
        schemaId: schemaId !== null && Number.isFinite(schemaId) ? schemaId : null,
        offset: intParam(params, "offset", 0),
      };
    }
    case "stats":
      return { kind: "stats" };
  }
  return { kind: "blocks", offset: 0 };
}

export function routeHref(route: Route): string {
  switch (route.kind) {
    case "blocks":
      return route.offset > 0 ? `#/blocks?offset=${route.offset}` : "#/blocks";
    case "block":
      return `#/blocks/${route.number}`;
    case "tx":
      return `#/tx/${encodeURIComponent(route.txId)}`;
    case "state": {
      const base = `#/state/${encodeURIComponent(route.key)}`;
      return route.includeInvalid ? `${base}?invalid=1` : base;
    }
    case "schemas":
      return "#/schemas";
    case "schema":
      return `#/schemas/${route.schemaId}`;
    case "schema-states": {
      const base = `#/schemas/${route.schemaId}/states`;
      return route.offset > 0 ? `${base}?offset=${route.offset}` : base;
    }
    case "query": {
      const params = new URLSearchParams();
      if (route.expr) params.set("expr", route.expr);
      if (route.scope !== "latest") params.set("scope", route.scope);
      if (route.schemaId !== null) params.set("schema", String(route.schemaId));
      if (route.offset > 0) params.set("offset", String(route.offset));
      const qs = params.toString();
      return qs ? `#/query?${qs}` : "#/query";
    }
    case "stats":
      return "#/stats";
  }
}
