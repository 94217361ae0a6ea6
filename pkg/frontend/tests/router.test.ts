import { describe, expect, it } from "vitest";

import { parseHash, routeHref, type Route } from "../src/router.js";

describe("routing", () => {
  const cases: Route[] = [
    { kind: "blocks", offset: 0 },
    { kind: "blocks", offset: 50 },
    { kind: "block", number: 7 },
    { kind: "tx", txId: "emp-tx041" },
    { kind: "tx", txId: "odd/id with空 spaces" },
    { kind: "state", key: "st0000001", includeInvalid: false },
    { kind: "state", key: "ns/with/slashes", includeInvalid: true },
    { kind: "schemas" },
    { kind: "schema", schemaId: 3 },
    { kind: "schema-states", schemaId: 3, offset: 25 },
    { kind: "query", expr: 'a.b = "x & y"', scope: "latest", schemaId: 2, offset: 25 },
    { kind: "query", expr: "", scope: "latest", schemaId: null, offset: 0 },
    { kind: "query", expr: "a.b > 1", scope: "history", schemaId: null, offset: 0 },
    { kind: "stats" },
  ];

  it("round-trips every route through its href", () => {
    for (const route of cases) {
      expect(parseHash(routeHref(route))).toEqual(route);
    }
  });

  it("defaults to the block list", () => {
    expect(parseHash("")).toEqual({ kind: "blocks", offset: 0 });
    expect(parseHash("#/")).toEqual({ kind: "blocks", offset: 0 });
    expect(parseHash("#/nope")).toEqual({ kind: "blocks", offset: 0 });
    expect(parseHash("#/tx")).toEqual({ kind: "blocks", offset: 0 });
  });

  it("ignores malformed offsets instead of trusting them", () => {
    expect(parseHash("#/blocks?offset=banana")).toEqual({ kind: "blocks", offset: 0 });
    expect(parseHash("#/blocks?offset=-5")).toEqual({ kind: "blocks", offset: 0 });
  });

  it("keeps state keys with slashes intact", () => {
    const route = parseHash("#/state/a%2Fb/c?invalid=1");
    expect(route).toEqual({ kind: "state", key: "a/b/c", includeInvalid: true });
  });

  it("omits defaulted query params from hrefs", () => {
    expect(routeHref({ kind: "blocks", offset: 0 })).toBe("#/blocks");
    expect(
      routeHref({ kind: "query", expr: "", scope: "latest", schemaId: null, offset: 0 }),
    ).toBe("#/query");
  });
});
