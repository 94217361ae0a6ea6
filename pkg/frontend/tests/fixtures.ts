// Fixture loading for tests. The files under fixtures/ are byte-exact
// API response bodies captured by scripts/capture_fixtures.py, so every
// assertion here is against what the server actually sends.

import { readFileSync } from "node:fs";

import type { Paged } from "../src/api.js";
import type { Envelope } from "../src/types.js";

export function rawFixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

export function fixture<T>(name: string): Envelope<T> {
  return JSON.parse(rawFixture(name)) as Envelope<T>;
}

/** Unwrap a captured list envelope the same way the client does. */
export function asPaged<T>(env: Envelope<T[]>): Paged<T> {
  const items = env.data;
  return { items, totalCount: env.total_count ?? items.length };
}
