"""Read-side engine: transaction retrieval, state history, rich queries, stats.

Every operation runs over a single store snapshot, so one call sees one
consistent ledger height even while ingest is running.
"""

import json
from dataclasses import dataclass, field

from .errors import InvalidFilter, InvalidQuery, NotFound
from .model import StateVersion
from .querylang import eval_expr
from .records import WorldStateEntry
from .store import Store, _block_from_row, _tx_from_row, history_entry_from_row

_TX_COLS = ("block_num, tx_num, tx_id, channel_id, timestamp, tx_type,"
            " creator_msp, creator_subject, chaincode_name, function, args,"
            " endorser_msps, validation_code, is_valid, read_count, write_count")

DEFAULT_PAGE_LIMIT = 50
MAX_PAGE_LIMIT = 1000

SCOPE_LATEST = "latest"
SCOPE_HISTORY = "history"


@dataclass(frozen=True)
class Page:
    offset: int = 0
    limit: int = DEFAULT_PAGE_LIMIT

    def validate(self):
        if self.offset < 0:
            raise InvalidFilter(f"page offset must be >= 0, got {self.offset}")
        if not 1 <= self.limit <= MAX_PAGE_LIMIT:
            raise InvalidFilter(
                f"page limit must be in 1..{MAX_PAGE_LIMIT}, got {self.limit}")


@dataclass(frozen=True)
class PagedResult:
    items: tuple
    total_count: int


@dataclass(frozen=True)
class TxFilter:
    """Conjunction of transaction predicates; absent fields do not filter.

    ``time_range`` bounds the transaction's own timestamp (microseconds,
    inclusive). ``block_range`` is inclusive on both ends.
    """

    block_range: tuple = None
    time_range: tuple = None
    tx_id: str = None
    creator_msp: str = None
    endorser_msp: str = None
    chaincode_name: str = None
    function: str = None
    channel_id: str = None
    valid_only: bool = True
    page: Page = field(default_factory=Page)
    descending: bool = False

    def validate(self):
        for name, rng in (("block_range", self.block_range),
                          ("time_range", self.time_range)):
            if rng is not None:
                if len(rng) != 2:
                    raise InvalidFilter(f"{name} must be a (lo, hi) pair")
                if rng[0] > rng[1]:
                    raise InvalidFilter(
                        f"{name} is inverted: {rng[0]} > {rng[1]}")
        self.page.validate()


def query_transactions(flt: TxFilter, store: Store) -> PagedResult:
    """Transactions matching every present filter field, ordered and paged."""
    flt.validate()
    where = []
    params = []
    if flt.block_range is not None:
        where.append("t.block_num BETWEEN ? AND ?")
        params += [flt.block_range[0], flt.block_range[1]]
    if flt.time_range is not None:
        where.append("t.timestamp BETWEEN ? AND ?")
        params += [flt.time_range[0], flt.time_range[1]]
    for column, value in (("tx_id", flt.tx_id),
                          ("creator_msp", flt.creator_msp),
                          ("chaincode_name", flt.chaincode_name),
                          ("function", flt.function),
                          ("channel_id", flt.channel_id)):
        if value is not None:
            where.append(f"t.{column} = ?")
            params.append(value)
    if flt.endorser_msp is not None:
        where.append("EXISTS (SELECT 1 FROM tx_endorsers e WHERE"
                     " e.block_num = t.block_num AND e.tx_num = t.tx_num"
                     " AND e.msp = ?)")
        params.append(flt.endorser_msp)
    if flt.valid_only:
        where.append("t.is_valid = 1")
    clause = (" WHERE " + " AND ".join(where)) if where else ""
    order = "DESC" if flt.descending else "ASC"
    with store.snapshot() as snap:
        cur = snap.cursor()
        total = cur.execute(
            f"SELECT COUNT(*) FROM transactions t{clause}", params).fetchone()[0]
        cols = ", ".join(f"t.{c.strip()}" for c in _TX_COLS.split(","))
        rows = cur.execute(
            f"SELECT {cols} FROM transactions t{clause}"
            f" ORDER BY t.block_num {order}, t.tx_num {order}"
            f" LIMIT ? OFFSET ?",
            params + [flt.page.limit, flt.page.offset]).fetchall()
        return PagedResult(items=tuple(_tx_from_row(r) for r in rows),
                           total_count=total)


def state_history(key, include_invalid, store: Store):
    """All operations ever applied to ``key``, oldest first."""
    sql = ("SELECT key, block_num, tx_num, write_pos, tx_id, op, value,"
           " is_valid FROM history WHERE key = ?")
    params = [key]
    if not include_invalid:
        sql += " AND is_valid = 1"
    sql += " ORDER BY block_num, tx_num, write_pos"
    with store.snapshot() as snap:
        rows = snap.cursor().execute(sql, params).fetchall()
    return [history_entry_from_row(r) for r in rows]


@dataclass(frozen=True)
class RichQuery:
    expr: object  # parsed query expression
    scope: str = SCOPE_LATEST
    schema_id: int = None
    page: Page = field(default_factory=Page)

    def validate(self):
        if self.scope not in (SCOPE_LATEST, SCOPE_HISTORY):
            raise InvalidQuery(f"unknown scope {self.scope!r}")
        if self.schema_id is not None:
            if self.scope == SCOPE_HISTORY:
                raise InvalidQuery(
                    "schema restriction applies to current state only,"
                    " not to the history scope")
            if self.schema_id == 0:
                raise InvalidQuery(
                    "schema 0 holds non-JSON values and has no queryable paths")
            if self.schema_id < 0:
                raise InvalidQuery(f"schema id must be >= 0, got {self.schema_id}")
        self.page.validate()


@dataclass(frozen=True)
class StateRow:
    key: str
    value: str
    version: StateVersion
    schema_id: int = None


def rich_query(q: RichQuery, store: Store) -> PagedResult:
    """Evaluate a condition expression over state values.

    LATEST scope scans the world state (pruned by schema id when given);
    HISTORY scope scans every value a valid transaction ever wrote. Values
    that do not parse as JSON never match. Results are ordered by key, then
    by version within a key.
    """
    q.validate()
    matches = []
    with store.snapshot() as snap:
        cur = snap.cursor()
        if q.scope == SCOPE_LATEST:
            sql = ("SELECT key, value, block_num, tx_num, schema_id"
                   " FROM world_state")
            params = ()
            if q.schema_id is not None:
                sql += " WHERE schema_id = ?"
                params = (q.schema_id,)
            sql += " ORDER BY key"
            for key, value, block_num, tx_num, schema_id in cur.execute(sql, params):
                decoded = _maybe_json(value)
                if decoded is _SKIP:
                    continue
                if eval_expr(q.expr, decoded):
                    matches.append(StateRow(key, value,
                                            StateVersion(block_num, tx_num),
                                            schema_id))
        else:
            sql = ("SELECT key, value, block_num, tx_num FROM history"
                   " WHERE is_valid = 1 AND op = 'WRITE'"
                   " ORDER BY key, block_num, tx_num, write_pos")
            for key, value, block_num, tx_num in cur.execute(sql):
                decoded = _maybe_json(value)
                if decoded is _SKIP:
                    continue
                if eval_expr(q.expr, decoded):
                    matches.append(StateRow(key, value,
                                            StateVersion(block_num, tx_num)))
    page = q.page
    return PagedResult(items=tuple(matches[page.offset:page.offset + page.limit]),
                       total_count=len(matches))


_SKIP = object()


def _maybe_json(text):
    try:
        return json.loads(text)
    except (ValueError, TypeError):
        return _SKIP


# -- retrieval helpers shared by the API and CLI -----------------------------

def list_blocks(store: Store, number_from=None, number_to=None,
                page: Page = None) -> PagedResult:
    page = page or Page()
    page.validate()
    if (number_from is not None and number_to is not None
            and number_from > number_to):
        raise InvalidFilter(f"block range is inverted: {number_from} > {number_to}")
    where = []
    params = []
    if number_from is not None:
        where.append("number >= ?")
        params.append(number_from)
    if number_to is not None:
        where.append("number <= ?")
        params.append(number_to)
    clause = (" WHERE " + " AND ".join(where)) if where else ""
    with store.snapshot() as snap:
        cur = snap.cursor()
        total = cur.execute(f"SELECT COUNT(*) FROM blocks{clause}",
                            params).fetchone()[0]
        rows = cur.execute(
            f"SELECT number, block_hash, previous_hash, data_hash, channel_id,"
            f" tx_count, commit_time FROM blocks{clause} ORDER BY number"
            f" LIMIT ? OFFSET ?", params + [page.limit, page.offset]).fetchall()
    return PagedResult(items=tuple(_block_from_row(r) for r in rows),
                       total_count=total)


def block_detail(store: Store, number):
    """(ParsedBlock, transactions) for one height; NotFound if absent."""
    with store.snapshot() as snap:
        return snap.get_block(number)


@dataclass(frozen=True)
class WriteSetItem:
    key: str
    op: str
    value: str = None


def tx_detail(store: Store, tx_id):
    """(ParsedTransaction, read set, write set) or NotFound."""
    with store.snapshot() as snap:
        ptx = snap.get_transaction(tx_id)
        reads = snap.get_read_set(tx_id)
        rows = snap.cursor().execute(
            "SELECT key, op, value FROM history WHERE block_num = ?"
            " AND tx_num = ? ORDER BY write_pos",
            (ptx.block_num, ptx.tx_num)).fetchall()
    writes = [WriteSetItem(key=r[0], op=r[1], value=r[2]) for r in rows]
    return ptx, reads, writes


def state_detail(store: Store, key) -> WorldStateEntry:
    with store.snapshot() as snap:
        return snap.world_get(key)


@dataclass(frozen=True)
class SchemaInfo:
    """One schema-table row as served to clients."""

    schema_id: int
    level_count: int
    props_per_level: tuple
    member_count: int
    created_at: int
    updated_at: int
    tree_json: str


def _schema_info_from_row(row):
    return SchemaInfo(schema_id=row[0], tree_json=row[1], level_count=row[2],
                      props_per_level=tuple(json.loads(row[3])),
                      member_count=row[4], created_at=row[5], updated_at=row[6])


_SCHEMA_COLS = ("schema_id, tree, level_count, props_per_level, member_count,"
                " created_at, updated_at")


def list_schemas(store: Store):
    with store.snapshot() as snap:
        rows = snap.cursor().execute(
            f"SELECT {_SCHEMA_COLS} FROM schemas ORDER BY schema_id").fetchall()
    return [_schema_info_from_row(r) for r in rows]


def schema_detail(store: Store, schema_id) -> SchemaInfo:
    with store.snapshot() as snap:
        row = snap.cursor().execute(
            f"SELECT {_SCHEMA_COLS} FROM schemas WHERE schema_id = ?",
            (schema_id,)).fetchone()
    if row is None:
        raise NotFound(f"schema {schema_id} not found")
    return _schema_info_from_row(row)


def schema_states(store: Store, schema_id, page: Page = None) -> PagedResult:
    """World-state entries currently classified under one schema."""
    page = page or Page()
    page.validate()
    with store.snapshot() as snap:
        cur = snap.cursor()
        exists = cur.execute("SELECT 1 FROM schemas WHERE schema_id = ?",
                             (schema_id,)).fetchone()
        if exists is None:
            raise NotFound(f"schema {schema_id} not found")
        total = cur.execute(
            "SELECT COUNT(*) FROM world_state WHERE schema_id = ?",
            (schema_id,)).fetchone()[0]
        rows = cur.execute(
            "SELECT key, value, block_num, tx_num, schema_id FROM world_state"
            " WHERE schema_id = ? ORDER BY key LIMIT ? OFFSET ?",
            (schema_id, page.limit, page.offset)).fetchall()
    items = tuple(WorldStateEntry(key=r[0], latest_value=r[1],
                                  version=StateVersion(r[2], r[3]),
                                  schema_id=r[4]) for r in rows)
    return PagedResult(items=items, total_count=total)


@dataclass(frozen=True)
class LedgerStats:
    block_count: int
    tx_count: int
    valid_tx_count: int
    state_count: int
    schema_count: int
    schema_overview: tuple  # of SchemaInfo
    per_chaincode: tuple  # of (chaincode_name, tx_count)
    per_creator: tuple  # of (creator_msp, tx_count)


def ledger_stats(store: Store) -> LedgerStats:
    with store.snapshot() as snap:
        cur = snap.cursor()
        block_count = cur.execute("SELECT COUNT(*) FROM blocks").fetchone()[0]
        tx_count = cur.execute("SELECT COUNT(*) FROM transactions").fetchone()[0]
        valid = cur.execute("SELECT COUNT(*) FROM transactions"
                            " WHERE is_valid = 1").fetchone()[0]
        states = cur.execute("SELECT COUNT(*) FROM world_state").fetchone()[0]
        overview = tuple(_schema_info_from_row(r) for r in cur.execute(
            f"SELECT {_SCHEMA_COLS} FROM schemas ORDER BY schema_id"))
        per_cc = tuple((r[0], r[1]) for r in cur.execute(
            "SELECT chaincode_name, COUNT(*) FROM transactions"
            " GROUP BY chaincode_name ORDER BY chaincode_name"))
        per_creator = tuple((r[0], r[1]) for r in cur.execute(
            "SELECT creator_msp, COUNT(*) FROM transactions"
            " GROUP BY creator_msp ORDER BY creator_msp"))
    return LedgerStats(block_count=block_count, tx_count=tx_count,
                       valid_tx_count=valid, state_count=states,
                       schema_count=len(overview), schema_overview=overview,
                       per_chaincode=per_cc, per_creator=per_creator)
