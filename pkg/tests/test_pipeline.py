"""End-to-end ingest orchestration: sync + parse + schema together."""

import time

import pytest

from refiner.errors import GapDetected
from refiner.genledger import GenConfig, generate, generate_file
from refiner.pipeline import Ingestor, sync_status_from_store
from refiner.sources import FileReplaySource, StaticSource
from refiner.store import Store

from oracles import (
    dump_store,
    history_by_key,
    load_ledger_file,
    replay_world_state,
)
from conftest import ingest_file


class TestRunOnce:
    def test_full_ingest_matches_replay_oracle(self, store, tmp_path):
        path = tmp_path / "ledger.jsonl"
        config = GenConfig(seed=21, block_count=20, txs_per_block=(2, 5),
                           update_ratio=0.3, delete_ratio=0.1,
                           invalid_ratio=0.15)
        generate_file(config, path)
        report = ingest_file(store, path).report()
        blocks = load_ledger_file(path)
        world = replay_world_state(blocks)
        assert report["blocks"] == len(blocks)
        assert report["recorded_block_height"] == len(blocks) - 1
        assert report["txs"] == sum(len(b["transactions"]) for b in blocks)
        with store.snapshot() as snap:
            cur = snap.cursor()
            got = dict(cur.execute("SELECT key, value FROM world_state"))
            assert got == {k: v for k, (v, _) in world.items()}
            history_count = cur.execute(
                "SELECT COUNT(*) FROM history").fetchone()[0]
        assert history_count == sum(
            len(rows) for rows in history_by_key(blocks).values())
        assert report["writes"] == history_count
        assert report["schema_progress"] == sum(
            1 for rows in history_by_key(blocks).values()
            for r in rows if r[5])

    def test_rerun_is_a_no_op(self, ingested):
        store, path = ingested
        before = dump_store(store.db_path)
        again = Ingestor(store, FileReplaySource(path))
        report = again.run_once()
        assert report["blocks"] == 0
        assert dump_store(store.db_path) == before

    def test_second_ingestor_continues_where_first_stopped(self, tmp_path):
        config = GenConfig(seed=5, block_count=12, txs_per_block=(2, 4))
        chain = list(generate(config))
        store = Store(tmp_path / "store")
        try:
            source = StaticSource(chain[:7])
            Ingestor(store, source).run_once()
            assert store.recorded_height() == 6
            # A new process would build a fresh ingestor over the same store.
            source = StaticSource(chain)
            report = Ingestor(store, source).run_once()
            assert report["blocks"] == 5
            assert report["recorded_block_height"] == 11
        finally:
            store.close()

    def test_raises_when_source_skips_a_block(self, store):
        chain = list(generate(GenConfig(seed=5, block_count=4,
                                        txs_per_block=(1, 2))))
        source = StaticSource([chain[0], chain[2], chain[3]])
        with pytest.raises(GapDetected):
            Ingestor(store, source).run_once()
        # The blocks before the gap stay committed.
        assert store.recorded_height() == 0


class TestFollow:
    def test_follows_a_growing_file(self, store, tmp_path):
        from refiner.model import block_to_json
        chain = list(generate(GenConfig(seed=9, block_count=10,
                                        txs_per_block=(1, 3))))
        path = tmp_path / "grow.jsonl"
        with open(path, "w") as f:
            for block in chain[:4]:
                f.write(block_to_json(block) + "\n")
        ingestor = Ingestor(store, FileReplaySource(path), poll_interval=0.01)
        ingestor.start_follow()
        try:
            assert ingestor.following
            deadline = time.time() + 5
            while (ingestor.state.recorded_block_height < 3
                   and time.time() < deadline):
                time.sleep(0.005)
            with open(path, "a") as f:
                for block in chain[4:]:
                    f.write(block_to_json(block) + "\n")
            while (ingestor.state.recorded_block_height < 9
                   and time.time() < deadline):
                time.sleep(0.005)
        finally:
            report = ingestor.stop()
        assert not ingestor.following
        assert report["blocks"] == 10
        assert report["recorded_block_height"] == 9
        # After stop() the schema pipeline has fully drained.
        assert report["schema_progress"] == ingestor.events_ingested

    def test_stop_propagates_sync_errors(self, store):
        chain = list(generate(GenConfig(seed=9, block_count=5,
                                        txs_per_block=(1, 2))))
        source = StaticSource([chain[0], chain[1], chain[3]])
        ingestor = Ingestor(store, source, poll_interval=0.01)
        ingestor.start_follow()
        deadline = time.time() + 5
        while ingestor.following and time.time() < deadline:
            time.sleep(0.005)
        with pytest.raises(GapDetected):
            ingestor.stop()


class TestStatus:
    def test_live_status_reflects_progress(self, ingested, tmp_path):
        store, path = ingested
        ingestor = Ingestor(store, FileReplaySource(path))
        ingestor.run_once()
        status = ingestor.status()
        assert status["following"] is False
        assert status["recorded_block_height"] == 29
        assert status["source_height"] == 29
        assert status["schema_queue_depth"] == 0
        assert status["last_sync_at"] is not None
        assert status["schema_progress"] > 0

    def test_unavailable_source_reports_unknown_height(self, store, tmp_path):
        ingestor = Ingestor(store, FileReplaySource(tmp_path / "missing"))
        assert ingestor.status()["source_height"] is None

    def test_store_only_status(self, ingested):
        store, _ = ingested
        status = sync_status_from_store(store)
        assert status["following"] is False
        assert status["recorded_block_height"] == 29
        assert status["schema_progress"] > 0
        assert status["source_height"] is None
