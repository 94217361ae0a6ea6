// Structural diff between two versions of a state value, for the history
// timeline. Purely presentational: the ledger itself is the source of truth.

export type DiffKind = "added" | "removed" | "changed";

export interface DiffEntry {
  path: string;
  kind: DiffKind;
  before: string | null;
  after: string | null;
}

const ROOT = "(value)";

function flatten(node: unknown, prefix: string, out: Map<string, string>): void {
  if (Array.isArray(node)) {
    if (node.length === 0) {
      out.set(prefix || ROOT, "[]");
      return;
    }
    node.forEach((item, i) => flatten(item, `${prefix || ROOT}[${i}]`, out));
    return;
  }
  if (node !== null && typeof node === "object") {
    const entries = Object.entries(node as Record<string, unknown>);
    if (entries.length === 0) {
      out.set(prefix || ROOT, "{}");
      return;
    }
    for (const [name, sub] of entries) {
      flatten(sub, prefix ? `${prefix}.${name}` : name, out);
    }
    return;
  }
  out.set(prefix || ROOT, JSON.stringify(node));
}

/** Leaf paths of a value text; a non-JSON text counts as one opaque leaf. */
export function leafMap(text: string | null): Map<string, string> {
  const out = new Map<string, string>();
  if (text === null) return out;
  try {
    flatten(JSON.parse(text), "", out);
  } catch {
    out.set(ROOT, JSON.stringify(text));
  }
  return out;
}

/**
 * Leaf-level changes from one version to the next. `null` on either side
 * means "no value" (before the first write, or after a delete).
 */
export function valueDiff(beforeText: string | null, afterText: string | null): DiffEntry[] {
  const before = leafMap(beforeText);
  const after = leafMap(afterText);
  const paths = [...new Set([...before.keys(), ...after.keys()])].sort();
  const out: DiffEntry[] = [];
  for (const path of paths) {
    const b = before.get(path);
    const a = after.get(path);
    if (b === undefined) {
      out.push({ path, kind: "added", before: null, after: a ?? null });
    } else if (a === undefined) {
      out.push({ path, kind: "removed", before: b, after: null });
    } else if (a !== b) {
      out.push({ path, kind: "changed", before: b, after: a });
    }
  }
  return out;
}
