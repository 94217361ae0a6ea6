import { describe, expect, it } from "vitest";

import { leafMap, valueDiff } from "../src/diff.js";

describe("leafMap", () => {
  it("flattens nested objects to dotted paths", () => {
    const m = leafMap('{"a":{"b":1,"c":"x"},"d":true}');
    expect(Object.fromEntries(m)).toEqual({ "a.b": "1", "a.c": '"x"', d: "true" });
  });

  it("indexes array elements", () => {
    const m = leafMap('{"xs":[1,{"y":2}]}');
    expect(Object.fromEntries(m)).toEqual({ "xs[0]": "1", "xs[1].y": "2" });
  });

  it("keeps empty containers as leaves", () => {
    const m = leafMap('{"a":{},"b":[]}');
    expect(Object.fromEntries(m)).toEqual({ a: "{}", b: "[]" });
  });

  it("treats a bare scalar as the whole value", () => {
    expect(Object.fromEntries(leafMap("42"))).toEqual({ "(value)": "42" });
  });

  it("falls back to one opaque leaf for non-JSON text", () => {
    expect(Object.fromEntries(leafMap("not json"))).toEqual({
      "(value)": '"not json"',
    });
  });

  it("is empty for a missing value", () => {
    expect(leafMap(null).size).toBe(0);
  });
});

describe("valueDiff", () => {
  it("marks everything added when there was no previous value", () => {
    const d = valueDiff(null, '{"a":1,"b":2}');
    expect(d).toEqual([
      { path: "a", kind: "added", before: null, after: "1" },
      { path: "b", kind: "added", before: null, after: "2" },
    ]);
  });

  it("reports only the leaves that moved", () => {
    const d = valueDiff('{"a":1,"b":{"c":2,"d":3}}', '{"a":1,"b":{"c":9,"d":3}}');
    expect(d).toEqual([{ path: "b.c", kind: "changed", before: "2", after: "9" }]);
  });

  it("reports removals against a deletion", () => {
    const d = valueDiff('{"a":1}', null);
    expect(d).toEqual([{ path: "a", kind: "removed", before: "1", after: null }]);
  });

  it("mixes kinds in path order", () => {
    const d = valueDiff('{"a":1,"b":2}', '{"b":3,"c":4}');
    expect(d).toEqual([
      { path: "a", kind: "removed", before: "1", after: null },
      { path: "b", kind: "changed", before: "2", after: "3" },
      { path: "c", kind: "added", before: null, after: "4" },
    ]);
  });

  it("is empty when nothing changed", () => {
    expect(valueDiff('{"a":[1,2]}', '{"a":[1,2]}')).toEqual([]);
  });

  it("sees type changes at the same path as changes", () => {
    const d = valueDiff('{"a":1}', '{"a":"1"}');
    expect(d).toEqual([{ path: "a", kind: "changed", before: "1", after: '"1"' }]);
  });
});
