"""Embedded persistent store.

One sqlite database realizes the reorganized ledger: block index,
transaction index (with secondary indexes on creator, endorser, chaincode +
function, channel, timestamp, validity), per-key operation history, world
state, and the schema tables.

Concurrency contract: a single writer connection guarded by a transaction
lock (the parse and schema pipelines take turns), any number of concurrent
readers on snapshot connections. Readers never observe a partially
committed block.
"""

import json
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path

from .errors import DuplicateTxId, NotFound, StoreError
from .records import HistoryEntry, ParsedBlock, ParsedTransaction, WorldStateEntry
from .model import StateVersion

DB_FILENAME = "refiner.db"

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS blocks (
    number INTEGER PRIMARY KEY,
    block_hash TEXT NOT NULL,
    previous_hash TEXT NOT NULL,
    data_hash TEXT NOT NULL,
    channel_id TEXT NOT NULL,
    tx_count INTEGER NOT NULL,
    commit_time INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS transactions (
    block_num INTEGER NOT NULL,
    tx_num INTEGER NOT NULL,
    tx_id TEXT NOT NULL,
    channel_id TEXT NOT NULL,
    timestamp INTEGER NOT NULL,
    tx_type TEXT NOT NULL,
    creator_msp TEXT NOT NULL,
    creator_subject TEXT NOT NULL,
    chaincode_name TEXT NOT NULL,
    function TEXT NOT NULL,
    args TEXT NOT NULL,
    endorser_msps TEXT NOT NULL,
    validation_code INTEGER NOT NULL,
    is_valid INTEGER NOT NULL,
    read_count INTEGER NOT NULL,
    write_count INTEGER NOT NULL,
    read_set TEXT NOT NULL,
    PRIMARY KEY (block_num, tx_num)
);
CREATE UNIQUE INDEX IF NOT EXISTS idx_tx_id ON transactions (tx_id);
CREATE INDEX IF NOT EXISTS idx_tx_creator ON transactions (creator_msp);
CREATE INDEX IF NOT EXISTS idx_tx_chaincode ON transactions (chaincode_name, function);
CREATE INDEX IF NOT EXISTS idx_tx_channel ON transactions (channel_id);
CREATE INDEX IF NOT EXISTS idx_tx_timestamp ON transactions (timestamp);
CREATE INDEX IF NOT EXISTS idx_tx_valid ON transactions (is_valid);
CREATE TABLE IF NOT EXISTS tx_endorsers (
    block_num INTEGER NOT NULL,
    tx_num INTEGER NOT NULL,
    msp TEXT NOT NULL,
    PRIMARY KEY (block_num, tx_num, msp)
);
CREATE INDEX IF NOT EXISTS idx_endorser_msp ON tx_endorsers (msp);
CREATE TABLE IF NOT EXISTS history (
    key TEXT NOT NULL,
    block_num INTEGER NOT NULL,
    tx_num INTEGER NOT NULL,
    write_pos INTEGER NOT NULL,
    tx_id TEXT NOT NULL,
    op TEXT NOT NULL,
    value TEXT,
    is_valid INTEGER NOT NULL,
    PRIMARY KEY (key, block_num, tx_num, write_pos)
);
CREATE INDEX IF NOT EXISTS idx_history_valid_order
    ON history (is_valid, block_num, tx_num, write_pos);
CREATE TABLE IF NOT EXISTS world_state (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL,
    block_num INTEGER NOT NULL,
    tx_num INTEGER NOT NULL,
    schema_id INTEGER
);
CREATE INDEX IF NOT EXISTS idx_world_schema ON world_state (schema_id);
CREATE TABLE IF NOT EXISTS schemas (
    schema_id INTEGER PRIMARY KEY,
    tree TEXT NOT NULL,
    fingerprint INTEGER NOT NULL,
    level_count INTEGER NOT NULL,
    props_per_level TEXT NOT NULL,
    member_count INTEGER NOT NULL,
    created_at INTEGER NOT NULL,
    updated_at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_schema_fp ON schemas (fingerprint);
CREATE TABLE IF NOT EXISTS schema_members (
    key TEXT PRIMARY KEY,
    schema_id INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_member_schema ON schema_members (schema_id);
"""

META_RECORDED_HEIGHT = "recorded_block_height"
META_SCHEMA_PROGRESS = "schema_progress"
META_SCHEMA_SEQ_TOTAL = "schema_seq_total"
META_SCHEMA_NEXT_ID = "schema_next_id"


class Store:
    """Single-writer embedded store rooted at a directory."""

    def __init__(self, path):
        self.root = Path(path)
        self.root.mkdir(parents=True, exist_ok=True)
        self.db_path = self.root / DB_FILENAME
        try:
            self._conn = sqlite3.connect(self.db_path, check_same_thread=False,
                                         isolation_level=None)
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._conn.execute("PRAGMA busy_timeout=30000")
            self._conn.executescript(_SCHEMA_SQL)
        except sqlite3.Error as exc:
            raise StoreError(f"cannot open store at {path}: {exc}") from exc
        self._txn_lock = threading.Lock()
        self._txn_owner = None
        self._closed = False

    def close(self):
        if not self._closed:
            self._closed = True
            self._conn.close()

    # -- writer transaction scope ------------------------------------------

    def begin_block_txn(self):
        """Open the single writer transaction; blocks until it is free."""
        if self._txn_owner == threading.get_ident():
            raise StoreError("nested block transaction")
        self._txn_lock.acquire()
        self._txn_owner = threading.get_ident()
        try:
            self._conn.execute("BEGIN IMMEDIATE")
        except sqlite3.Error as exc:
            self._release()
            raise StoreError(f"cannot begin transaction: {exc}") from exc

    def commit_block_txn(self):
        self._require_txn()
        try:
            self._conn.execute("COMMIT")
        except sqlite3.Error as exc:
            raise StoreError(f"commit failed: {exc}") from exc
        finally:
            self._release()

    def rollback_block_txn(self):
        self._require_txn()
        try:
            self._conn.execute("ROLLBACK")
        except sqlite3.Error:
            pass
        finally:
            self._release()

    @contextmanager
    def block_txn(self):
        self.begin_block_txn()
        try:
            yield
        except BaseException:
            self.rollback_block_txn()
            raise
        else:
            self.commit_block_txn()

    def _require_txn(self):
        if self._txn_owner != threading.get_ident():
            raise StoreError("no open block transaction on this thread")

    def _release(self):
        self._txn_owner = None
        self._txn_lock.release()

    def _execute(self, sql, params=()):
        self._require_txn()
        try:
            return self._conn.execute(sql, params)
        except sqlite3.IntegrityError:
            raise
        except sqlite3.Error as exc:
            raise StoreError(f"storage failure: {exc}") from exc

    # -- meta ---------------------------------------------------------------

    def get_meta_int(self, key, default):
        row = self._execute("SELECT value FROM meta WHERE key=?", (key,)).fetchone()
        return default if row is None else int(row[0])

    def set_meta_int(self, key, value):
        self._execute(
            "INSERT INTO meta (key, value) VALUES (?, ?) "
            "ON CONFLICT(key) DO UPDATE SET value=excluded.value",
            (key, str(value)))

    def recorded_height(self) -> int:
        """Committed ledger height, -1 when nothing has been synced."""
        with self.snapshot() as snap:
            return snap.recorded_height()

    # -- writes used by the parse pipeline ---------------------------------

    def put_block_row(self, pb: ParsedBlock):
        self._execute(
            "INSERT INTO blocks (number, block_hash, previous_hash, data_hash,"
            " channel_id, tx_count, commit_time) VALUES (?,?,?,?,?,?,?)",
            (pb.number, pb.block_hash, pb.previous_hash, pb.data_hash,
             pb.channel_id, pb.tx_count, pb.commit_time))

    def put_tx_row(self, ptx: ParsedTransaction, read_set_json: str):
        try:
            self._execute(
                "INSERT INTO transactions (block_num, tx_num, tx_id, channel_id,"
                " timestamp, tx_type, creator_msp, creator_subject,"
                " chaincode_name, function, args, endorser_msps,"
                " validation_code, is_valid, read_count, write_count, read_set)"
                " VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)",
                (ptx.block_num, ptx.tx_num, ptx.tx_id, ptx.channel_id,
                 ptx.timestamp, ptx.tx_type, ptx.creator_msp,
                 ptx.creator_subject, ptx.chaincode_name, ptx.function,
                 json.dumps(list(ptx.args)), json.dumps(list(ptx.endorser_msps)),
                 ptx.validation_code, int(ptx.is_valid), ptx.read_count,
                 ptx.write_count, read_set_json))
        except sqlite3.IntegrityError as exc:
            raise DuplicateTxId(f"tx_id {ptx.tx_id!r} already in ledger") from exc
        for msp in ptx.endorser_msps:
            self._execute(
                "INSERT OR IGNORE INTO tx_endorsers (block_num, tx_num, msp)"
                " VALUES (?,?,?)",
                (ptx.block_num, ptx.tx_num, msp))

    def put_history_row(self, entry: HistoryEntry):
        self._execute(
            "INSERT INTO history (key, block_num, tx_num, write_pos, tx_id, op,"
            " value, is_valid) VALUES (?,?,?,?,?,?,?,?)",
            (entry.key, entry.block_num, entry.tx_num, entry.write_pos,
             entry.tx_id, entry.op, entry.value, int(entry.is_valid)))

    def world_put(self, key, value, version: StateVersion):
        # schema_id is reset to NULL; the schema pipeline re-classifies.
        self._execute(
            "INSERT OR REPLACE INTO world_state (key, value, block_num, tx_num,"
            " schema_id) VALUES (?,?,?,?,NULL)",
            (key, value, version.block_num, version.tx_num))

    def world_delete(self, key):
        self._execute("DELETE FROM world_state WHERE key=?", (key,))

    # -- writes used by the schema pipeline --------------------------------

    def schema_insert(self, schema_id, tree_json, fingerprint, level_count,
                      props_json, member_count, created_at, updated_at):
        self._execute(
            "INSERT INTO schemas (schema_id, tree, fingerprint, level_count,"
            " props_per_level, member_count, created_at, updated_at)"
            " VALUES (?,?,?,?,?,?,?,?)",
            (schema_id, tree_json, fingerprint, level_count, props_json,
             member_count, created_at, updated_at))

    def schema_replace_tree(self, schema_id, tree_json, fingerprint,
                            level_count, props_json, updated_at):
        self._execute(
            "UPDATE schemas SET tree=?, fingerprint=?, level_count=?,"
            " props_per_level=?, updated_at=? WHERE schema_id=?",
            (tree_json, fingerprint, level_count, props_json, updated_at,
             schema_id))

    def schema_set_member_count(self, schema_id, member_count):
        self._execute("UPDATE schemas SET member_count=? WHERE schema_id=?",
                      (member_count, schema_id))

    def member_set(self, key, schema_id):
        self._execute(
            "INSERT INTO schema_members (key, schema_id) VALUES (?,?)"
            " ON CONFLICT(key) DO UPDATE SET schema_id=excluded.schema_id",
            (key, schema_id))

    def member_remove(self, key):
        self._execute("DELETE FROM schema_members WHERE key=?", (key,))

    def world_set_schema_id(self, key, schema_id):
        self._execute("UPDATE world_state SET schema_id=? WHERE key=?",
                      (schema_id, key))

    # -- reads --------------------------------------------------------------

    @contextmanager
    def snapshot(self):
        """Read-only connection pinned to a consistent database snapshot."""
        uri = f"file:{self.db_path}?mode=ro"
        try:
            conn = sqlite3.connect(uri, uri=True, check_same_thread=False,
                                   isolation_level=None)
        except sqlite3.Error as exc:
            raise StoreError(f"cannot open snapshot: {exc}") from exc
        try:
            conn.execute("PRAGMA busy_timeout=30000")
            conn.execute("BEGIN")
            conn.execute("SELECT 1 FROM meta LIMIT 1").fetchone()
            yield Snapshot(conn)
        finally:
            try:
                conn.execute("ROLLBACK")
            except sqlite3.Error:
                pass
            conn.close()

    def get_block(self, number):
        with self.snapshot() as snap:
            return snap.get_block(number)

    def get_transaction(self, tx_id):
        with self.snapshot() as snap:
            return snap.get_transaction(tx_id)

    def world_get(self, key):
        with self.snapshot() as snap:
            return snap.world_get(key)


class Snapshot:
    """Read access over one consistent view of the store."""

    def __init__(self, conn):
        self.conn = conn

    def cursor(self):
        return self.conn.cursor()

    def recorded_height(self) -> int:
        row = self.conn.execute("SELECT value FROM meta WHERE key=?",
                                (META_RECORDED_HEIGHT,)).fetchone()
        return -1 if row is None else int(row[0])

    def schema_progress(self) -> int:
        row = self.conn.execute("SELECT value FROM meta WHERE key=?",
                                (META_SCHEMA_PROGRESS,)).fetchone()
        return 0 if row is None else int(row[0])

    def get_block(self, number):
        row = self.conn.execute(
            "SELECT number, block_hash, previous_hash, data_hash, channel_id,"
            " tx_count, commit_time FROM blocks WHERE number=?",
            (number,)).fetchone()
        if row is None:
            raise NotFound(f"block {number} not found")
        block = _block_from_row(row)
        txs = [
            _tx_from_row(r) for r in self.conn.execute(
                "SELECT block_num, tx_num, tx_id, channel_id, timestamp,"
                " tx_type, creator_msp, creator_subject, chaincode_name,"
                " function, args, endorser_msps, validation_code, is_valid,"
                " read_count, write_count FROM transactions WHERE block_num=?"
                " ORDER BY tx_num", (number,))
        ]
        return block, txs

    def get_transaction(self, tx_id):
        row = self.conn.execute(
            "SELECT block_num, tx_num, tx_id, channel_id, timestamp, tx_type,"
            " creator_msp, creator_subject, chaincode_name, function, args,"
            " endorser_msps, validation_code, is_valid, read_count,"
            " write_count FROM transactions WHERE tx_id=?",
            (tx_id,)).fetchone()
        if row is None:
            raise NotFound(f"transaction {tx_id!r} not found")
        return _tx_from_row(row)

    def get_read_set(self, tx_id):
        row = self.conn.execute(
            "SELECT read_set FROM transactions WHERE tx_id=?",
            (tx_id,)).fetchone()
        if row is None:
            raise NotFound(f"transaction {tx_id!r} not found")
        return json.loads(row[0])

    def world_get(self, key):
        row = self.conn.execute(
            "SELECT key, value, block_num, tx_num, schema_id FROM world_state"
            " WHERE key=?", (key,)).fetchone()
        if row is None:
            raise NotFound(f"state {key!r} not found")
        return WorldStateEntry(key=row[0], latest_value=row[1],
                               version=StateVersion(row[2], row[3]),
                               schema_id=row[4])


def _block_from_row(row):
    return ParsedBlock(number=row[0], block_hash=row[1], previous_hash=row[2],
                       data_hash=row[3], channel_id=row[4], tx_count=row[5],
                       commit_time=row[6])


def _tx_from_row(row):
    return ParsedTransaction(
        block_num=row[0], tx_num=row[1], tx_id=row[2], channel_id=row[3],
        timestamp=row[4], tx_type=row[5], creator_msp=row[6],
        creator_subject=row[7], chaincode_name=row[8], function=row[9],
        args=tuple(json.loads(row[10])), endorser_msps=tuple(json.loads(row[11])),
        validation_code=row[12], is_valid=bool(row[13]), read_count=row[14],
        write_count=row[15])


def history_entry_from_row(row):
    """Row layout: key, block_num, tx_num, write_pos, tx_id, op, value, is_valid."""
    return HistoryEntry(key=row[0], block_num=row[1], tx_num=row[2],
                        write_pos=row[3], tx_id=row[4], op=row[5],
                        value=row[6], is_valid=bool(row[7]))
