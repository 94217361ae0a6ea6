// Thin fetch client over the API's {"data": ..., "error": ...} envelope.

import type {
  BlockDetail,
  BlockRow,
  Envelope,
  HistoryEntry,
  QueryRequest,
  QueryRow,
  SchemaDetail,
  SchemaRow,
  StateEntry,
  Stats,
  SyncStatus,
  TxDetail,
  TxRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly code: string,
    readonly status: number,
    readonly offset?: number,
    readonly expected?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Paged<T> {
  items: T[];
  totalCount: number;
}

type Fetcher = (input: string, init?: RequestInit) => Promise<Response>;

function query(params: Record<string, string | number | boolean | null | undefined>): string {
  const parts: string[] = [];
  for (const [name, value] of Object.entries(params)) {
    if (value === undefined || value === null) continue;
    parts.push(`${name}=${encodeURIComponent(String(value))}`);
  }
  return parts.length ? `?${parts.join("&")}` : "";
}

export class Client {
  constructor(
    private readonly base = "",
    private readonly fetcher: Fetcher = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<Envelope<T>> {
    let resp: Response;
    try {
      resp = await this.fetcher(this.base + path, init);
    } catch (exc) {
      throw new ApiError(`cannot reach the API: ${String(exc)}`, "UNREACHABLE", 0);
    }
    let body: Envelope<T>;
    try {
      body = (await resp.json()) as Envelope<T>;
    } catch {
      throw new ApiError(`response was not JSON (status ${resp.status})`, "BAD_RESPONSE", resp.status);
    }
    if (body.error) {
      throw new ApiError(body.error.message, body.error.code, resp.status,
        body.error.offset, body.error.expected);
    }
    if (!resp.ok) {
      throw new ApiError(`unexpected status ${resp.status}`, "BAD_RESPONSE", resp.status);
    }
    return body;
  }

  private async paged<T>(path: string, init?: RequestInit): Promise<Paged<T>> {
    const env = await this.request<T[]>(path, init);
    return { items: env.data, totalCount: env.total_count ?? env.data.length };
  }

  blocks(offset: number, limit: number, from?: number, to?: number): Promise<Paged<BlockRow>> {
    return this.paged(`/blocks${query({ offset, limit, from, to })}`);
  }

  async block(number: number): Promise<BlockDetail> {
    return (await this.request<BlockDetail>(`/blocks/${number}`)).data;
  }

  transactions(params: {
    creator?: string; endorser?: string; chaincode?: string; function?: string;
    channel?: string; valid?: boolean; offset?: number; limit?: number;
  }): Promise<Paged<TxRow>> {
    return this.paged(`/transactions${query(params)}`);
  }

  async transaction(txId: string): Promise<TxDetail> {
    return (await this.request<TxDetail>(`/transactions/${encodeURIComponent(txId)}`)).data;
  }

  async state(key: string): Promise<StateEntry> {
    return (await this.request<StateEntry>(`/states/${encodeURIComponent(key)}`)).data;
  }

  stateHistory(key: string, includeInvalid: boolean): Promise<Paged<HistoryEntry>> {
    return this.paged(
      `/states/${encodeURIComponent(key)}/history${query({ include_invalid: includeInvalid })}`);
  }

  schemas(): Promise<Paged<SchemaRow>> {
    return this.paged("/schemas");
  }

  async schema(id: number): Promise<SchemaDetail> {
    return (await this.request<SchemaDetail>(`/schemas/${id}`)).data;
  }

  schemaStates(id: number, offset: number, limit: number): Promise<Paged<StateEntry>> {
    return this.paged(`/schemas/${id}/states${query({ offset, limit })}`);
  }

  // The expression travels verbatim; the server is the only interpreter.
  runQuery(req: QueryRequest): Promise<Paged<QueryRow>> {
    return this.paged("/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  async stats(): Promise<Stats> {
    return (await this.request<Stats>("/stats")).data;
  }

  async syncStatus(): Promise<SyncStatus> {
    return (await this.request<SyncStatus>("/sync/status")).data;
  }
}
