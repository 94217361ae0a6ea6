// View models: pure projections of single API responses. Nothing here
// re-implements server semantics; every displayed number comes straight
// from one response field.

import type { Paged } from "./api.js";
import type {
  BlockDetail,
  BlockRow,
  HistoryEntry,
  QueryRow,
  SchemaDetail,
  SchemaRow,
  StateEntry,
  Stats,
  SyncStatus,
  TxDetail,
  Version,
} from "./types.js";
import { valueDiff, type DiffEntry } from "./diff.js";

export const OPERATORS = ["=", "!=", "<", "<=", ">", ">=", "CONTAINS"] as const;

export function versionLabel(v: Version): string {
  return `${v.block_num}.${v.tx_num}`;
}

export function preview(text: string | null, limit = 96): string {
  if (text === null) return "";
  return text.length <= limit ? text : `${text.slice(0, limit - 1)}…`;
}

export function prettyValue(text: string): string {
  try {
    return JSON.stringify(JSON.parse(text), null, 2);
  } catch {
    return text;
  }
}

// -- pagination ---------------------------------------------------------------

export interface Paging {
  offset: number;
  limit: number;
  totalCount: number;
  hasPrev: boolean;
  hasNext: boolean;
  prevOffset: number;
  nextOffset: number;
  pageIndex: number; // 1-based
  pageCount: number;
}

/** Pure paging arithmetic; never points past total_count. */
export function paging(offset: number, limit: number, totalCount: number): Paging {
  return {
    offset,
    limit,
    totalCount,
    hasPrev: offset > 0,
    hasNext: offset + limit < totalCount,
    prevOffset: Math.max(0, offset - limit),
    nextOffset: offset + limit,
    pageIndex: Math.floor(offset / limit) + 1,
    pageCount: Math.max(1, Math.ceil(totalCount / limit)),
  };
}

// -- blocks -------------------------------------------------------------------

export interface BlockRowVM {
  number: number;
  txCount: number;
  commitTime: string;
  shortHash: string;
}

export interface BlockListVM {
  rows: BlockRowVM[];
  paging: Paging;
}

export function blockListVM(resp: Paged<BlockRow>, offset: number, limit: number): BlockListVM {
  return {
    rows: resp.items.map((b) => ({
      number: b.number,
      txCount: b.tx_count,
      commitTime: b.commit_time,
      shortHash: b.block_hash.slice(0, 16),
    })),
    paging: paging(offset, limit, resp.totalCount),
  };
}

export interface BlockDetailVM {
  fields: [string, string][];
  transactions: {
    txNum: number;
    txId: string;
    type: string;
    isValid: boolean;
    chaincode: string;
    fn: string;
  }[];
}

export function blockDetailVM(d: BlockDetail): BlockDetailVM {
  const b = d.block;
  return {
    fields: [
      ["number", String(b.number)],
      ["channel", b.channel_id],
      ["committed", b.commit_time],
      ["transactions", String(b.tx_count)],
      ["block hash", b.block_hash],
      ["previous hash", b.previous_hash],
      ["data hash", b.data_hash],
    ],
    transactions: d.transactions.map((t) => ({
      txNum: t.tx_num,
      txId: t.tx_id,
      type: t.tx_type,
      isValid: t.is_valid,
      chaincode: t.chaincode_name,
      fn: t.function,
    })),
  };
}

// -- transactions -------------------------------------------------------------

export interface TxDetailVM {
  txId: string;
  isValid: boolean;
  validationCode: number;
  fields: [string, string][];
  reads: { key: string; version: string }[];
  writes: { key: string; op: string; valuePreview: string }[];
}

export function txDetailVM(t: TxDetail): TxDetailVM {
  return {
    txId: t.tx_id,
    isValid: t.is_valid,
    validationCode: t.validation_code,
    fields: [
      ["block", versionLabel({ block_num: t.block_num, tx_num: t.tx_num })],
      ["channel", t.channel_id],
      ["timestamp", t.timestamp],
      ["type", t.tx_type],
      ["creator", `${t.creator_msp} (${t.creator_subject})`],
      ["chaincode", t.chaincode_name],
      ["function", t.function],
      ["args", t.args.join(", ")],
      ["endorsers", t.endorser_msps.join(", ")],
      ["reads", String(t.read_count)],
      ["writes", String(t.write_count)],
    ],
    reads: t.read_set.map((r) => ({ key: r.key, version: versionLabel(r.version) })),
    writes: t.write_set.map((w) => ({
      key: w.key,
      op: w.op,
      valuePreview: preview(w.value),
    })),
  };
}

// -- state & history ----------------------------------------------------------

export interface StateVM {
  key: string;
  version: string;
  schemaId: number | null;
  pretty: string;
}

export function stateVM(s: StateEntry): StateVM {
  return {
    key: s.key,
    version: versionLabel(s.version),
    schemaId: s.schema_id,
    pretty: prettyValue(s.value),
  };
}

export interface TimelineEntryVM {
  version: string; // block.tx.pos
  txId: string;
  op: string;
  isValid: boolean;
  valuePreview: string;
  diff: DiffEntry[];
}

export interface HistoryTimelineVM {
  key: string | null;
  entries: TimelineEntryVM[];
}

/**
 * The response's entries in order, each with the structural diff against
 * the previous entry's value (the first diffs against "no value").
 */
export function historyTimelineVM(entries: HistoryEntry[]): HistoryTimelineVM {
  let previous: string | null = null;
  const out: TimelineEntryVM[] = [];
  for (const e of entries) {
    const current = e.op === "DELETE" ? null : e.value;
    out.push({
      version: `${e.block_num}.${e.tx_num}.${e.write_pos}`,
      txId: e.tx_id,
      op: e.op,
      isValid: e.is_valid,
      valuePreview: preview(e.value),
      diff: valueDiff(previous, current),
    });
    previous = current;
  }
  return { key: entries.length ? entries[0]!.key : null, entries: out };
}

// -- schemas ------------------------------------------------------------------

export interface SchemaRowVM {
  schemaId: number;
  levels: number;
  propsPerLevel: string; // e.g. "11, 4"
  members: number;
  updatedAt: string;
}

export function schemaOverviewVM(resp: Paged<SchemaRow>): SchemaRowVM[] {
  return resp.items.map((s) => ({
    schemaId: s.schema_id,
    levels: s.level_count,
    propsPerLevel: s.props_per_level.join(", "),
    members: s.member_count,
    updatedAt: s.updated_at,
  }));
}

export interface SchemaDetailVM {
  row: SchemaRowVM;
  paths: { path: string; type: string }[];
}

export function schemaDetailVM(d: SchemaDetail): SchemaDetailVM {
  return {
    row: {
      schemaId: d.schema_id,
      levels: d.level_count,
      propsPerLevel: d.props_per_level.join(", "),
      members: d.member_count,
      updatedAt: d.updated_at,
    },
    paths: d.paths.map((p) => ({ path: p.path, type: p.type })),
  };
}

export interface SchemaStatesVM {
  rows: { key: string; version: string; valuePreview: string }[];
  paging: Paging;
}

export function schemaStatesVM(resp: Paged<StateEntry>, offset: number, limit: number): SchemaStatesVM {
  return {
    rows: resp.items.map((s) => ({
      key: s.key,
      version: versionLabel(s.version),
      valuePreview: preview(s.value),
    })),
    paging: paging(offset, limit, resp.totalCount),
  };
}

// -- queries ------------------------------------------------------------------

export interface QueryBuilderVM {
  schemaId: number | null;
  paths: string[]; // exactly the selected schema's canonical paths
  operators: readonly string[];
}

export function queryBuilderVM(detail: SchemaDetail | null): QueryBuilderVM {
  return {
    schemaId: detail ? detail.schema_id : null,
    paths: detail ? detail.paths.map((p) => p.path) : [],
    operators: OPERATORS,
  };
}

/**
 * Turn builder inputs into query text. Literals that read back as a JSON
 * number, boolean, or null are inserted as written; anything else becomes
 * a quoted string. The text is all the builder produces — the server is
 * the only interpreter.
 */
export function buildCondition(path: string, op: string, literal: string): string {
  const trimmed = literal.trim();
  let rendered: string | null = null;
  try {
    const parsed: unknown = JSON.parse(trimmed);
    if (typeof parsed === "number" || typeof parsed === "boolean" || parsed === null) {
      if (JSON.stringify(parsed) === trimmed) rendered = trimmed;
    }
  } catch {
    // not a bare literal; fall through to quoting
  }
  if (rendered === null) rendered = JSON.stringify(literal);
  return `${path} ${op} ${rendered}`;
}

export interface QueryResultsVM {
  rows: { key: string; version: string; schemaId: number | null; valuePreview: string }[];
  paging: Paging;
}

export function queryResultsVM(resp: Paged<QueryRow>, offset: number, limit: number): QueryResultsVM {
  return {
    rows: resp.items.map((r) => ({
      key: r.key,
      version: versionLabel(r.version),
      schemaId: r.schema_id,
      valuePreview: preview(r.value),
    })),
    paging: paging(offset, limit, resp.totalCount),
  };
}

// -- stats & sync -------------------------------------------------------------

export interface StatsVM {
  counters: [string, number][];
  perChaincode: [string, number][];
  perCreator: [string, number][];
}

export function statsVM(s: Stats): StatsVM {
  return {
    counters: [
      ["blocks", s.block_count],
      ["transactions", s.tx_count],
      ["valid", s.valid_tx_count],
      ["invalid", s.invalid_tx_count],
      ["states", s.state_count],
      ["schemas", s.schema_count],
    ],
    perChaincode: s.per_chaincode.map((r) => [r.name, r.tx_count]),
    perCreator: s.per_creator.map((r) => [r.name, r.tx_count]),
  };
}

export interface SyncBannerVM {
  live: boolean;
  text: string;
}

export function syncBannerVM(s: SyncStatus): SyncBannerVM {
  const source = s.source_height === null ? "?" : String(s.source_height);
  const mode = s.following ? "following" : "idle";
  return {
    live: s.following,
    text: `height ${s.recorded_block_height} / source ${source} · ` +
      `schema progress ${s.schema_progress} · ${mode}`,
  };
}
