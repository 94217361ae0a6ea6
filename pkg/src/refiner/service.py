"""Service layer: engine results projected onto wire payloads.

Both the HTTP API and the CLI's JSON output go through these builders and
``dumps_canonical``, so the same request yields byte-identical JSON on
either surface. Timestamps leave the process as RFC 3339 UTC strings.
"""

import json

from pydantic import BaseModel

from . import query as q
from .model import format_rfc3339
from .pipeline import Ingestor, sync_status_from_store
from .querylang import parse_query
from .records import HistoryEntry, ParsedBlock, ParsedTransaction, WorldStateEntry
from .schema import canonical_paths
from .store import Store


class VersionPayload(BaseModel):
    block_num: int
    tx_num: int


class BlockPayload(BaseModel):
    number: int
    block_hash: str
    previous_hash: str
    data_hash: str
    channel_id: str
    tx_count: int
    commit_time: str


class TxPayload(BaseModel):
    tx_id: str
    block_num: int
    tx_num: int
    channel_id: str
    timestamp: str
    tx_type: str
    creator_msp: str
    creator_subject: str
    chaincode_name: str
    function: str
    args: list[str]
    endorser_msps: list[str]
    validation_code: int
    is_valid: bool
    read_count: int
    write_count: int


class ReadItemPayload(BaseModel):
    key: str
    version: VersionPayload


class WriteItemPayload(BaseModel):
    key: str
    op: str
    value: str | None = None


class TxDetailPayload(TxPayload):
    read_set: list[ReadItemPayload]
    write_set: list[WriteItemPayload]


class BlockDetailPayload(BaseModel):
    block: BlockPayload
    transactions: list[TxPayload]


class StatePayload(BaseModel):
    key: str
    value: str
    version: VersionPayload
    schema_id: int | None = None


class HistoryEntryPayload(BaseModel):
    key: str
    block_num: int
    tx_num: int
    write_pos: int
    tx_id: str
    op: str
    value: str | None = None
    is_valid: bool


class SchemaPayload(BaseModel):
    schema_id: int
    level_count: int
    props_per_level: list[int]
    member_count: int
    created_at: str
    updated_at: str


class PathPayload(BaseModel):
    path: str
    type: str


class SchemaDetailPayload(SchemaPayload):
    paths: list[PathPayload]
    tree: dict


class QueryRowPayload(BaseModel):
    key: str
    value: str
    version: VersionPayload
    schema_id: int | None = None


class NameCountPayload(BaseModel):
    name: str
    tx_count: int


class StatsPayload(BaseModel):
    block_count: int
    tx_count: int
    valid_tx_count: int
    invalid_tx_count: int
    state_count: int
    schema_count: int
    schemas: list[SchemaPayload]
    per_chaincode: list[NameCountPayload]
    per_creator: list[NameCountPayload]


class SyncStatusPayload(BaseModel):
    following: bool
    recorded_block_height: int
    source_height: int | None = None
    last_sync_at: str | None = None
    poll_interval: float | None = None
    suppressed_passes: int
    schema_queue_depth: int
    schema_progress: int
    blocks_ingested: int
    txs_ingested: int


# -- builders ----------------------------------------------------------------

def _version(block_num, tx_num):
    return VersionPayload(block_num=block_num, tx_num=tx_num)


def block_payload(pb: ParsedBlock) -> BlockPayload:
    return BlockPayload(number=pb.number, block_hash=pb.block_hash,
                        previous_hash=pb.previous_hash, data_hash=pb.data_hash,
                        channel_id=pb.channel_id, tx_count=pb.tx_count,
                        commit_time=format_rfc3339(pb.commit_time))


def tx_payload(ptx: ParsedTransaction) -> TxPayload:
    return TxPayload(tx_id=ptx.tx_id, block_num=ptx.block_num,
                     tx_num=ptx.tx_num, channel_id=ptx.channel_id,
                     timestamp=format_rfc3339(ptx.timestamp),
                     tx_type=ptx.tx_type, creator_msp=ptx.creator_msp,
                     creator_subject=ptx.creator_subject,
                     chaincode_name=ptx.chaincode_name, function=ptx.function,
                     args=list(ptx.args),
                     endorser_msps=list(ptx.endorser_msps),
                     validation_code=ptx.validation_code,
                     is_valid=ptx.is_valid, read_count=ptx.read_count,
                     write_count=ptx.write_count)


def tx_detail_payload(ptx, reads, writes) -> TxDetailPayload:
    base = tx_payload(ptx).model_dump()
    return TxDetailPayload(
        **base,
        read_set=[ReadItemPayload(key=r["key"],
                                  version=VersionPayload(**r["version"]))
                  for r in reads],
        write_set=[WriteItemPayload(key=w.key, op=w.op, value=w.value)
                   for w in writes])


def state_payload(entry: WorldStateEntry) -> StatePayload:
    return StatePayload(key=entry.key, value=entry.latest_value,
                        version=_version(entry.version.block_num,
                                         entry.version.tx_num),
                        schema_id=entry.schema_id)


def history_payload(entry: HistoryEntry) -> HistoryEntryPayload:
    return HistoryEntryPayload(key=entry.key, block_num=entry.block_num,
                               tx_num=entry.tx_num, write_pos=entry.write_pos,
                               tx_id=entry.tx_id, op=entry.op,
                               value=entry.value, is_valid=entry.is_valid)


def schema_payload(info: q.SchemaInfo) -> SchemaPayload:
    return SchemaPayload(schema_id=info.schema_id, level_count=info.level_count,
                         props_per_level=list(info.props_per_level),
                         member_count=info.member_count,
                         created_at=format_rfc3339(info.created_at),
                         updated_at=format_rfc3339(info.updated_at))


def schema_detail_payload(info: q.SchemaInfo) -> SchemaDetailPayload:
    tree = json.loads(info.tree_json)
    paths = sorted(canonical_paths(tree))
    return SchemaDetailPayload(
        **schema_payload(info).model_dump(),
        paths=[PathPayload(path=p, type=t) for p, t in paths],
        tree=tree)


def query_row_payload(row: q.StateRow) -> QueryRowPayload:
    return QueryRowPayload(key=row.key, value=row.value,
                           version=_version(row.version.block_num,
                                            row.version.tx_num),
                           schema_id=row.schema_id)


def stats_payload(stats: q.LedgerStats) -> StatsPayload:
    return StatsPayload(
        block_count=stats.block_count, tx_count=stats.tx_count,
        valid_tx_count=stats.valid_tx_count,
        invalid_tx_count=stats.tx_count - stats.valid_tx_count,
        state_count=stats.state_count, schema_count=stats.schema_count,
        schemas=[schema_payload(s) for s in stats.schema_overview],
        per_chaincode=[NameCountPayload(name=n, tx_count=c)
                       for n, c in stats.per_chaincode],
        per_creator=[NameCountPayload(name=n, tx_count=c)
                     for n, c in stats.per_creator])


def sync_status_payload(status: dict) -> SyncStatusPayload:
    last = status.get("last_sync_at")
    return SyncStatusPayload(
        following=status["following"],
        recorded_block_height=status["recorded_block_height"],
        source_height=status.get("source_height"),
        last_sync_at=None if last is None else format_rfc3339(int(last * 1_000_000)),
        poll_interval=status.get("poll_interval"),
        suppressed_passes=status.get("suppressed_passes", 0),
        schema_queue_depth=status.get("schema_queue_depth", 0),
        schema_progress=status.get("schema_progress", 0),
        blocks_ingested=status.get("blocks_ingested", 0),
        txs_ingested=status.get("txs_ingested", 0))


# -- canonical JSON ----------------------------------------------------------

def _plain(obj):
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps_canonical(obj) -> str:
    """The one JSON encoder used for every machine-readable output."""
    return json.dumps(_plain(obj), ensure_ascii=False, separators=(",", ":"))


# -- the service -------------------------------------------------------------

class RefinerService:
    """All read operations of the platform, one call per API endpoint.

    Methods that return collections yield ``(items, total_count)``. Engine
    errors (NotFound, InvalidFilter, QuerySyntaxError, ...) propagate for
    the caller to translate into exit codes or HTTP statuses.
    """

    def __init__(self, store: Store, ingestor: Ingestor = None):
        self.store = store
        self.ingestor = ingestor

    def blocks(self, number_from=None, number_to=None, offset=0, limit=None):
        page = q.Page(offset=offset, limit=limit or q.DEFAULT_PAGE_LIMIT)
        result = q.list_blocks(self.store, number_from, number_to, page)
        return [block_payload(b) for b in result.items], result.total_count

    def block(self, number) -> BlockDetailPayload:
        pb, txs = q.block_detail(self.store, number)
        return BlockDetailPayload(block=block_payload(pb),
                                  transactions=[tx_payload(t) for t in txs])

    def transactions(self, flt: q.TxFilter):
        result = q.query_transactions(flt, self.store)
        return [tx_payload(t) for t in result.items], result.total_count

    def transaction(self, tx_id) -> TxDetailPayload:
        ptx, reads, writes = q.tx_detail(self.store, tx_id)
        return tx_detail_payload(ptx, reads, writes)

    def state(self, key) -> StatePayload:
        return state_payload(q.state_detail(self.store, key))

    def state_history(self, key, include_invalid=False):
        entries = q.state_history(key, include_invalid, self.store)
        return [history_payload(e) for e in entries]

    def schemas(self):
        return [schema_payload(s) for s in q.list_schemas(self.store)]

    def schema(self, schema_id) -> SchemaDetailPayload:
        return schema_detail_payload(q.schema_detail(self.store, schema_id))

    def schema_states(self, schema_id, offset=0, limit=None):
        page = q.Page(offset=offset, limit=limit or q.DEFAULT_PAGE_LIMIT)
        result = q.schema_states(self.store, schema_id, page)
        return [state_payload(e) for e in result.items], result.total_count

    def run_query(self, expr_text, scope=q.SCOPE_LATEST, schema_id=None,
                  offset=0, limit=None):
        expr = parse_query(expr_text)
        rq = q.RichQuery(expr=expr, scope=scope, schema_id=schema_id,
                         page=q.Page(offset=offset,
                                     limit=limit or q.DEFAULT_PAGE_LIMIT))
        result = q.rich_query(rq, self.store)
        return [query_row_payload(r) for r in result.items], result.total_count

    def stats(self) -> StatsPayload:
        return stats_payload(q.ledger_stats(self.store))

    def sync_status(self) -> SyncStatusPayload:
        if self.ingestor is not None:
            return sync_status_payload(self.ingestor.status())
        return sync_status_payload(sync_status_from_store(self.store))
