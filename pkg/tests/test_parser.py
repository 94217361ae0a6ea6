"""Parsing blocks into flat records and committing them atomically."""

import queue

import pytest

from refiner.errors import DuplicateTxId, NotFound, OutOfOrderBlock
from refiner.model import (
    BlockHeader,
    BlockMetadata,
    Identity,
    LedgerBlock,
    RawTransaction,
    ReadItem,
    StateVersion,
    WriteItem,
)
from refiner.parser import extract_tx, parse_and_commit
from refiner.records import OP_DELETE, OP_WRITE
from refiner.store import META_SCHEMA_SEQ_TOTAL

from oracles import dump_store


def _tx(tx_id, writes=(), reads=(), tx_type="ENDORSER_TRANSACTION",
        endorsers=(Identity("Org2MSP", "peer@org2"),)):
    return RawTransaction(
        tx_id=tx_id, channel_id="ch", timestamp=1_500_000_000_000_000,
        tx_type=tx_type, creator=Identity("Org1MSP", "user@org1"),
        chaincode_name="" if tx_type == "CONFIG" else "cc",
        function="" if tx_type == "CONFIG" else "create",
        args=() if tx_type == "CONFIG" else ("k",),
        endorsers=() if tx_type == "CONFIG" else tuple(endorsers),
        read_set=tuple(reads), write_set=tuple(writes))


def _block(number, txs, codes=None):
    codes = tuple([0] * len(txs)) if codes is None else tuple(codes)
    return LedgerBlock(
        header=BlockHeader(number=number, previous_hash="ab" * 32,
                           data_hash="cd" * 32),
        transactions=tuple(txs),
        metadata=BlockMetadata(commit_time=1_500_000_000_000_000 + number,
                               validation_codes=codes))


def _genesis():
    return _block(0, [_tx("cfg", tx_type="CONFIG")])


def _put(key, value):
    return WriteItem(key=key, is_delete=False, value=value)


def _del(key):
    return WriteItem(key=key, is_delete=True, value=None)


class TestExtractTx:
    def test_endorsers_deduplicated_in_first_seen_order(self):
        raw = _tx("t", endorsers=(Identity("B", "x"), Identity("A", "y"),
                                  Identity("B", "z"), Identity("C", "w")))
        ptx = extract_tx(raw, 3, 1, 0)
        assert ptx.endorser_msps == ("B", "A", "C")

    def test_config_reports_empty_chaincode_and_function(self):
        ptx = extract_tx(_tx("t", tx_type="CONFIG"), 0, 0, 0)
        assert ptx.chaincode_name == ""
        assert ptx.function == ""
        assert ptx.tx_type == "CONFIG"

    def test_validity_follows_code(self):
        assert extract_tx(_tx("t"), 1, 0, 0).is_valid
        assert not extract_tx(_tx("t"), 1, 0, 10).is_valid
        assert extract_tx(_tx("t"), 1, 0, 10).validation_code == 10

    def test_read_write_counts(self):
        raw = _tx("t", writes=(_put("a", "1"), _del("b")),
                  reads=(ReadItem(key="c", version=StateVersion(1, 0)),))
        ptx = extract_tx(raw, 2, 5, 0)
        assert (ptx.read_count, ptx.write_count) == (1, 2)
        assert (ptx.block_num, ptx.tx_num) == (2, 5)


class TestCommit:
    def test_first_block_must_be_zero(self, store):
        with pytest.raises(OutOfOrderBlock):
            parse_and_commit(_block(1, [_tx("t")]), store)

    def test_gap_rejected_and_nothing_written(self, store):
        parse_and_commit(_genesis(), store)
        before = dump_store(store.db_path)
        with pytest.raises(OutOfOrderBlock):
            parse_and_commit(_block(2, [_tx("t")]), store)
        assert dump_store(store.db_path) == before
        assert store.recorded_height() == 0

    def test_replayed_block_rejected(self, store):
        parse_and_commit(_genesis(), store)
        parse_and_commit(_block(1, [_tx("t", writes=(_put("k", "{}"),))]),
                         store)
        with pytest.raises(OutOfOrderBlock):
            parse_and_commit(_block(1, [_tx("t2")]), store)

    def test_duplicate_tx_id_rolls_back_whole_block(self, store):
        parse_and_commit(_genesis(), store)
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("a", "1"),))]),
                         store)
        before = dump_store(store.db_path)
        clashing = _block(2, [_tx("t2", writes=(_put("b", "2"),)),
                              _tx("t1", writes=(_put("c", "3"),))])
        with pytest.raises(DuplicateTxId):
            parse_and_commit(clashing, store)
        assert dump_store(store.db_path) == before
        assert store.recorded_height() == 1

    def test_report_counts(self, store):
        parse_and_commit(_genesis(), store)
        block = _block(1, [
            _tx("t1", writes=(_put("a", "1"), _put("b", "2"))),
            _tx("t2", writes=(_put("c", "3"),)),
        ], codes=(0, 10))
        report = parse_and_commit(block, store)
        assert report.txs == 2
        assert report.writes == 3          # history rows, invalid included
        assert report.events == 2          # only t1's writes mutate the world

    def test_history_keeps_invalid_writes_flagged(self, store, history_rows):
        parse_and_commit(_genesis(), store)
        block = _block(1, [_tx("bad", writes=(_put("k", "1"),)),
                           _tx("good", writes=(_put("k", "2"),))],
                       codes=(254, 0))
        parse_and_commit(block, store)
        rows = history_rows(store, "k")
        assert [(r.tx_id, r.is_valid) for r in rows] == [
            ("bad", False), ("good", True)]
        assert store.world_get("k").latest_value == "2"

    def test_world_state_ignores_invalid_txs(self, store):
        parse_and_commit(_genesis(), store)
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("k", "old"),))]),
                         store)
        parse_and_commit(_block(2, [_tx("t2", writes=(_put("k", "new"),))],
                                codes=(10,)), store)
        entry = store.world_get("k")
        assert entry.latest_value == "old"
        assert entry.version == StateVersion(1, 0)

    def test_delete_removes_key_and_records_tombstone(self, store,
                                                      history_rows):
        parse_and_commit(_genesis(), store)
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("k", "v"),))]),
                         store)
        parse_and_commit(_block(2, [_tx("t2", writes=(_del("k"),))]), store)
        with pytest.raises(NotFound):
            store.world_get("k")
        ops = [(r.op, r.value) for r in history_rows(store, "k")]
        assert ops == [(OP_WRITE, "v"), (OP_DELETE, None)]

    def test_same_block_writes_apply_in_tx_order(self, store):
        parse_and_commit(_genesis(), store)
        block = _block(1, [_tx("t1", writes=(_put("k", "first"),)),
                           _tx("t2", writes=(_put("k", "second"),))])
        parse_and_commit(block, store)
        entry = store.world_get("k")
        assert entry.latest_value == "second"
        assert entry.version == StateVersion(1, 1)

    def test_read_set_round_trips(self, store):
        parse_and_commit(_genesis(), store)
        reads = (ReadItem(key="x", version=StateVersion(0, 0)),
                 ReadItem(key="y", version=StateVersion(1, 2)))
        parse_and_commit(_block(1, [_tx("t1", reads=reads,
                                        writes=(_put("x", "1"),))]), store)
        with store.snapshot() as snap:
            got = snap.get_read_set("t1")
        assert got == [
            {"key": "x", "version": {"block_num": 0, "tx_num": 0}},
            {"key": "y", "version": {"block_num": 1, "tx_num": 2}},
        ]

    def test_block_row_fields(self, store):
        parse_and_commit(_genesis(), store)
        with store.snapshot() as snap:
            block, txs = snap.get_block(0)
        assert block.number == 0
        assert block.tx_count == 1
        assert block.channel_id == "ch"
        assert block.previous_hash == "ab" * 32
        assert len(block.block_hash) == 64
        assert [t.tx_id for t in txs] == ["cfg"]


class TestEventStream:
    def test_seq_is_contiguous_across_blocks(self, store):
        q = queue.Queue()
        parse_and_commit(_genesis(), store, queue=q)
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("a", "1"),
                                                      _put("b", "2")))]),
                         store, queue=q)
        parse_and_commit(_block(2, [_tx("t2", writes=(_del("a"),))]),
                         store, queue=q)
        events = [q.get_nowait() for _ in range(q.qsize())]
        assert [e.seq for e in events] == [1, 2, 3]
        assert [e.key for e in events] == ["a", "b", "a"]
        assert events[2].value is None       # deletes travel as tombstones
        assert events[1].version == StateVersion(1, 0)
        with store.snapshot() as snap:
            row = snap.cursor().execute(
                "SELECT value FROM meta WHERE key=?",
                (META_SCHEMA_SEQ_TOTAL,)).fetchone()
        assert int(row[0]) == 3

    def test_invalid_txs_emit_no_events(self, store):
        q = queue.Queue()
        parse_and_commit(_genesis(), store, queue=q)
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("a", "1"),))],
                                codes=(10,)), store, queue=q)
        assert q.empty()

    def test_events_delivered_only_after_commit(self, store):
        q = queue.Queue()
        parse_and_commit(_genesis(), store, queue=q)
        seen_at_put = []

        class Spy(queue.Queue):
            def put(self, item, *a, **kw):
                seen_at_put.append(store.recorded_height())
                super().put(item, *a, **kw)

        spy = Spy()
        parse_and_commit(_block(1, [_tx("t1", writes=(_put("a", "1"),))]),
                         store, queue=spy)
        # By the time any event is visible the block is already durable.
        assert seen_at_put == [1]

    def test_commit_time_travels_with_events(self, store):
        q = queue.Queue()
        parse_and_commit(_genesis(), store, queue=q)
        block = _block(1, [_tx("t1", writes=(_put("a", "1"),))])
        parse_and_commit(block, store, queue=q)
        event = q.get_nowait()
        assert event.commit_time == block.metadata.commit_time
