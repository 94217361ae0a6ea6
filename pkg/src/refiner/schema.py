"""Schema extraction, containment comparison, and state classification.

A state value's schema is a typed hierarchical tree canonicalized into a
set of (dotted path, leaf type) pairs; array segments appear as the literal
token ``[]``. Two schemas are compared purely on those path sets:

    EQUAL         same path set
    CONTAIN       existing path set is a strict subset of the extracted one
    BE_CONTAINED  extracted path set is a strict subset of the existing one
    NEW           neither contains the other (a shared path with conflicting
                  types breaks containment in both directions)

Classification scans the schema table in ascending id with that precedence:
an EQUAL match reuses the id; a CONTAIN match keeps the id but replaces the
stored tree with the wider one; a BE_CONTAINED match reuses the id
unchanged; otherwise the schema is inserted under a fresh id. Schema id 0
is reserved for values that do not parse as JSON.
"""

import hashlib
import json
import queue as queue_mod
import threading
from dataclasses import dataclass
from enum import Enum

from .errors import StoreError
from .records import StateEvent
from .store import (
    META_SCHEMA_NEXT_ID,
    META_SCHEMA_PROGRESS,
    Store,
)

LEAF_TYPES = ("string", "number", "boolean", "null", "mixed", "binary")

NON_JSON_SCHEMA_ID = 0

_BINARY_ROOT = {"kind": "leaf", "type": "binary"}


class CompareResult(Enum):
    EQUAL = "equal"
    CONTAIN = "contain"
    BE_CONTAINED = "be_contained"
    NEW = "new"


@dataclass(frozen=True)
class SchemaTree:
    """Canonical schema of one JSON value: node tree plus its path set."""

    root: dict
    paths: frozenset  # of (dotted path, leaf type)

    @property
    def is_binary(self):
        return self.root == _BINARY_ROOT


def _scalar_type(value):
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    return "null"


def _node_of(value):
    if isinstance(value, dict):
        return {"kind": "object",
                "fields": {k: _node_of(value[k]) for k in sorted(value)}}
    if isinstance(value, list):
        if not value:
            return {"kind": "array", "element": {"kind": "leaf", "type": "null"}}
        return {"kind": "array", "element": _merge([_node_of(v) for v in value])}
    return {"kind": "leaf", "type": _scalar_type(value)}


def _merge(nodes):
    """Merge array-element schemas; heterogeneous kinds collapse to mixed."""
    kinds = {n["kind"] for n in nodes}
    if kinds == {"leaf"}:
        types = {n["type"] for n in nodes}
        return {"kind": "leaf", "type": types.pop() if len(types) == 1 else "mixed"}
    if kinds == {"object"}:
        names = sorted({name for n in nodes for name in n["fields"]})
        fields = {}
        for name in names:
            present = [n["fields"][name] for n in nodes if name in n["fields"]]
            fields[name] = _merge(present)
        return {"kind": "object", "fields": fields}
    if kinds == {"array"}:
        return {"kind": "array", "element": _merge([n["element"] for n in nodes])}
    return {"kind": "leaf", "type": "mixed"}


def canonical_paths(root) -> frozenset:
    out = set()

    def walk(node, prefix):
        kind = node["kind"]
        if kind == "leaf":
            out.add((prefix, node["type"]))
        elif kind == "object":
            for name, sub in node["fields"].items():
                walk(sub, f"{prefix}.{name}" if prefix else name)
        else:
            walk(node["element"], f"{prefix}.[]" if prefix else "[]")

    walk(root, "")
    return frozenset(out)


def level_profile(root):
    """(level_count, props_per_level): distinct field names per object depth.

    Top-level fields are level 1; array nodes do not add a level.
    """
    names = {}

    def walk(node, level):
        kind = node["kind"]
        if kind == "object":
            for name, sub in node["fields"].items():
                names.setdefault(level + 1, set()).add(name)
                walk(sub, level + 1)
        elif kind == "array":
            walk(node["element"], level)

    walk(root, 0)
    if not names:
        return 0, []
    level_count = max(names)
    return level_count, [len(names.get(i, ())) for i in range(1, level_count + 1)]


def fingerprint(paths) -> int:
    """64-bit digest of a canonical path set, signed to fit sqlite INTEGER."""
    h = hashlib.sha256()
    for path, leaf_type in sorted(paths):
        h.update(path.encode("utf-8"))
        h.update(b"\x00")
        h.update(leaf_type.encode("ascii"))
        h.update(b"\x01")
    value = int.from_bytes(h.digest()[:8], "big")
    return value - (1 << 64) if value >= (1 << 63) else value


def make_tree(root) -> SchemaTree:
    return SchemaTree(root=root, paths=canonical_paths(root))


def extract_schema(value_text) -> SchemaTree:
    """Canonical schema of a state value; non-JSON input yields the binary leaf."""
    if isinstance(value_text, bytes):
        try:
            value_text = value_text.decode("utf-8")
        except UnicodeDecodeError:
            return make_tree(_BINARY_ROOT)
    try:
        value = json.loads(value_text)
    except (ValueError, TypeError):
        return make_tree(_BINARY_ROOT)
    return make_tree(_node_of(value))


def compare(extracted: SchemaTree, existing: SchemaTree) -> CompareResult:
    if extracted.paths == existing.paths:
        return CompareResult.EQUAL
    if existing.paths < extracted.paths:
        return CompareResult.CONTAIN
    if extracted.paths < existing.paths:
        return CompareResult.BE_CONTAINED
    return CompareResult.NEW


def tree_to_json(tree: SchemaTree) -> str:
    return json.dumps(tree.root, sort_keys=True, separators=(",", ":"))


def tree_from_json(text) -> SchemaTree:
    return make_tree(json.loads(text))


@dataclass
class SchemaRecord:
    schema_id: int
    tree: SchemaTree
    level_count: int
    props_per_level: tuple
    member_count: int
    created_at: int
    updated_at: int


class SchemaTable:
    """Write-through classifier over the store's schema tables.

    Owned exclusively by the schema pipeline (single consumer); keeps an
    in-memory mirror of every record, a fingerprint index for O(1) EQUAL
    lookups, and the key -> schema id membership map.
    """

    def __init__(self, store: Store):
        self.store = store
        self.records = {}
        self._by_fp = {}
        self._members = {}
        self._next_id = 1
        self.reload()

    def reload(self):
        self.records.clear()
        self._by_fp.clear()
        self._members.clear()
        with self.store.snapshot() as snap:
            cur = snap.cursor()
            for row in cur.execute(
                    "SELECT schema_id, tree, level_count, props_per_level,"
                    " member_count, created_at, updated_at FROM schemas"):
                tree = tree_from_json(row[1])
                record = SchemaRecord(
                    schema_id=row[0], tree=tree, level_count=row[2],
                    props_per_level=tuple(json.loads(row[3])),
                    member_count=row[4], created_at=row[5], updated_at=row[6])
                self.records[record.schema_id] = record
                if record.schema_id != NON_JSON_SCHEMA_ID:
                    self._index_fp(record)
            for key, sid in cur.execute(
                    "SELECT key, schema_id FROM schema_members"):
                self._members[key] = sid
            row = cur.execute("SELECT value FROM meta WHERE key=?",
                              (META_SCHEMA_NEXT_ID,)).fetchone()
            self._next_id = 1 if row is None else int(row[0])

    def _index_fp(self, record):
        fp = fingerprint(record.tree.paths)
        self._by_fp.setdefault(fp, set()).add(record.schema_id)

    def _unindex_fp(self, record):
        fp = fingerprint(record.tree.paths)
        ids = self._by_fp.get(fp)
        if ids:
            ids.discard(record.schema_id)
            if not ids:
                del self._by_fp[fp]

    def classify(self, key, value, version=None, commit_time=0):
        """Classify one state value inside its own store transaction."""
        with self.store.block_txn():
            return self.apply(key, value, commit_time)

    def remove_member(self, key):
        """Drop a deleted key's membership (tombstone path of the queue)."""
        old = self._members.pop(key, None)
        if old is None:
            return
        record = self.records[old]
        record.member_count -= 1
        self.store.schema_set_member_count(old, record.member_count)
        self.store.member_remove(key)

    def apply(self, key, value, commit_time=0):
        """Classify within an already-open store transaction.

        ``value`` None is a delete tombstone. Returns the schema id, or None
        for tombstones.
        """
        if value is None:
            self.remove_member(key)
            return None
        tree = extract_schema(value)
        sid = self._classify_tree(tree, commit_time)
        old = self._members.get(key)
        if old != sid:
            if old is not None:
                old_record = self.records[old]
                old_record.member_count -= 1
                self.store.schema_set_member_count(old, old_record.member_count)
            record = self.records[sid]
            record.member_count += 1
            self.store.schema_set_member_count(sid, record.member_count)
            self._members[key] = sid
            self.store.member_set(key, sid)
        self.store.world_set_schema_id(key, sid)
        return sid

    def _classify_tree(self, tree: SchemaTree, commit_time) -> int:
        if tree.is_binary:
            if NON_JSON_SCHEMA_ID not in self.records:
                self._insert(NON_JSON_SCHEMA_ID, tree, commit_time)
            return NON_JSON_SCHEMA_ID
        fp = fingerprint(tree.paths)
        equal_ids = sorted(self._by_fp.get(fp, ()))
        for sid in equal_ids:
            if self.records[sid].tree.paths == tree.paths:
                return sid
        contain_id = None
        be_contained_id = None
        for sid in sorted(self.records):
            if sid == NON_JSON_SCHEMA_ID:
                continue
            result = compare(tree, self.records[sid].tree)
            if result == CompareResult.CONTAIN and contain_id is None:
                contain_id = sid
            elif result == CompareResult.BE_CONTAINED and be_contained_id is None:
                be_contained_id = sid
        if contain_id is not None:
            self._replace_tree(contain_id, tree, commit_time)
            return contain_id
        if be_contained_id is not None:
            return be_contained_id
        sid = self._next_id
        self._next_id += 1
        self.store.set_meta_int(META_SCHEMA_NEXT_ID, self._next_id)
        self._insert(sid, tree, commit_time)
        return sid

    def _insert(self, sid, tree, commit_time):
        level_count, props = level_profile(tree.root)
        record = SchemaRecord(schema_id=sid, tree=tree, level_count=level_count,
                              props_per_level=tuple(props), member_count=0,
                              created_at=commit_time, updated_at=commit_time)
        self.records[sid] = record
        if sid != NON_JSON_SCHEMA_ID:
            self._index_fp(record)
        self.store.schema_insert(sid, tree_to_json(tree), fingerprint(tree.paths),
                                 level_count, json.dumps(props), 0,
                                 commit_time, commit_time)

    def _replace_tree(self, sid, tree, commit_time):
        record = self.records[sid]
        self._unindex_fp(record)
        level_count, props = level_profile(tree.root)
        record.tree = tree
        record.level_count = level_count
        record.props_per_level = tuple(props)
        record.updated_at = commit_time
        self._index_fp(record)
        self.store.schema_replace_tree(sid, tree_to_json(tree),
                                       fingerprint(tree.paths), level_count,
                                       json.dumps(props), commit_time)


_SENTINEL = StateEvent(seq=-1, key="", value=None, version=None, commit_time=0)

_CATCH_UP_SQL = (
    "SELECT h.key, h.value, h.op, h.block_num, h.tx_num, b.commit_time"
    " FROM history h JOIN blocks b ON b.number = h.block_num"
    " WHERE h.is_valid = 1"
    " ORDER BY h.block_num, h.tx_num, h.write_pos LIMIT ? OFFSET ?")


class SchemaPipeline:
    """Single consumer of the bounded state-event queue.

    Classification progress (a position in the global order of valid
    mutations) is persisted with every batch, so after a crash the pipeline
    resumes exactly where it stopped by replaying the history index.
    """

    def __init__(self, store: Store, queue, batch_size=256, progress_hook=None):
        self.store = store
        self.queue = queue
        self.batch_size = batch_size
        self.progress_hook = progress_hook
        self.table = SchemaTable(store)
        with store.snapshot() as snap:
            self.progress = snap.schema_progress()
        self.items_processed = 0
        self.error = None
        self._thread = None

    def catch_up(self):
        """Replay valid history the queue never delivered (e.g. after a crash)."""
        while True:
            with self.store.snapshot() as snap:
                rows = snap.cursor().execute(
                    _CATCH_UP_SQL, (self.batch_size, self.progress)).fetchall()
            if not rows:
                return
            with self.store.block_txn():
                for key, value, op, _b, _t, commit_time in rows:
                    self.table.apply(key, None if op == "DELETE" else value,
                                     commit_time)
                self.progress += len(rows)
                self.store.set_meta_int(META_SCHEMA_PROGRESS, self.progress)
            self.items_processed += len(rows)
            if self.progress_hook:
                self.progress_hook(self.items_processed)

    def run(self, stop_signal=None):
        try:
            self.catch_up()
            while True:
                try:
                    event = self.queue.get(timeout=0.05)
                except queue_mod.Empty:
                    if stop_signal is not None and stop_signal.is_set():
                        return
                    continue
                if event is _SENTINEL:
                    return
                batch = [event]
                while len(batch) < self.batch_size:
                    try:
                        nxt = self.queue.get_nowait()
                    except queue_mod.Empty:
                        break
                    if nxt is _SENTINEL:
                        self._process(batch)
                        return
                    batch.append(nxt)
                self._process(batch)
        except StoreError as exc:
            self.error = exc

    def _process(self, batch):
        batch = [e for e in batch if e.seq > self.progress]
        if not batch:
            return
        if batch[0].seq > self.progress + 1:
            self.catch_up()
            batch = [e for e in batch if e.seq > self.progress]
            if not batch:
                return
        with self.store.block_txn():
            for event in batch:
                self.table.apply(event.key, event.value, event.commit_time)
            self.progress = batch[-1].seq
            self.store.set_meta_int(META_SCHEMA_PROGRESS, self.progress)
        self.items_processed += len(batch)
        if self.progress_hook:
            self.progress_hook(self.items_processed)

    # -- thread management --------------------------------------------------

    def start(self, stop_signal=None):
        self._thread = threading.Thread(
            target=self.run, args=(stop_signal,), name="schema-pipeline",
            daemon=True)
        self._thread.start()

    def finish(self):
        """Signal end of input and wait for the pipeline to drain."""
        self.queue.put(_SENTINEL)
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        if self.error is not None:
            raise self.error

    @property
    def queue_depth(self):
        return self.queue.qsize()


def run_schema_pipeline(store, queue, stop_signal=None, batch_size=256):
    """Drain state events into the schema tables until stopped.

    Convenience wrapper over SchemaPipeline for callers that manage their
    own thread; returns the pipeline with counters populated.
    """
    pipeline = SchemaPipeline(store, queue, batch_size=batch_size)
    pipeline.run(stop_signal)
    if pipeline.error is not None:
        raise pipeline.error
    return pipeline
