// Wire types, mirroring the server's payload models field for field.

export interface Version {
  block_num: number;
  tx_num: number;
}

export interface BlockRow {
  number: number;
  block_hash: string;
  previous_hash: string;
  data_hash: string;
  channel_id: string;
  tx_count: number;
  commit_time: string;
}

export interface TxRow {
  tx_id: string;
  block_num: number;
  tx_num: number;
  channel_id: string;
  timestamp: string;
  tx_type: string;
  creator_msp: string;
  creator_subject: string;
  chaincode_name: string;
  function: string;
  args: string[];
  endorser_msps: string[];
  validation_code: number;
  is_valid: boolean;
  read_count: number;
  write_count: number;
}

export interface ReadItem {
  key: string;
  version: Version;
}

export interface WriteItem {
  key: string;
  op: string;
  value: string | null;
}

export interface TxDetail extends TxRow {
  read_set: ReadItem[];
  write_set: WriteItem[];
}

export interface BlockDetail {
  block: BlockRow;
  transactions: TxRow[];
}

export interface StateEntry {
  key: string;
  value: string;
  version: Version;
  schema_id: number | null;
}

export interface HistoryEntry {
  key: string;
  block_num: number;
  tx_num: number;
  write_pos: number;
  tx_id: string;
  op: string;
  value: string | null;
  is_valid: boolean;
}

export interface SchemaRow {
  schema_id: number;
  level_count: number;
  props_per_level: number[];
  member_count: number;
  created_at: string;
  updated_at: string;
}

export interface SchemaPath {
  path: string;
  type: string;
}

export interface SchemaDetail extends SchemaRow {
  paths: SchemaPath[];
  tree: unknown;
}

export interface QueryRow {
  key: string;
  value: string;
  version: Version;
  schema_id: number | null;
}

export interface NameCount {
  name: string;
  tx_count: number;
}

export interface Stats {
  block_count: number;
  tx_count: number;
  valid_tx_count: number;
  invalid_tx_count: number;
  state_count: number;
  schema_count: number;
  schemas: SchemaRow[];
  per_chaincode: NameCount[];
  per_creator: NameCount[];
}

export interface SyncStatus {
  following: boolean;
  recorded_block_height: number;
  source_height: number | null;
  last_sync_at: string | null;
  poll_interval: number | null;
  suppressed_passes: number;
  schema_queue_depth: number;
  schema_progress: number;
  blocks_ingested: number;
  txs_ingested: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  offset?: number;
  expected?: string;
}

export interface Envelope<T> {
  data: T;
  total_count?: number;
  error?: ApiErrorBody;
}

export interface QueryRequest {
  expr: string;
  scope?: "latest" | "history";
  schema_id?: number | null;
  offset?: number;
  limit?: number;
}
