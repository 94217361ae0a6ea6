"""Ingest orchestration: block sync feeding the parse and schema pipelines.

Two pipelines run concurrently. The parse pipeline (sync loop + parser)
commits one store transaction per block and then hands the block's valid
state mutations to a bounded in-memory queue. The schema pipeline drains
that queue, classifying values into the schema tables with its own durable
progress cursor, so either side can crash and resume without losing or
double-applying work.
"""

import queue as queue_mod
import threading
import time

from .errors import RefinerError
from .parser import parse_and_commit
from .schema import SchemaPipeline
from .store import Store
from .sync import SyncState, run_sync_loop, sync_once

DEFAULT_QUEUE_SIZE = 10_000


class IngestReport(dict):
    """Plain dict of ingest counters; keys are stable for CLI/JSON output."""


class Ingestor:
    """Owns the sync state, the event queue, and both pipeline threads."""

    def __init__(self, store: Store, source, poll_interval=2.0,
                 queue_size=DEFAULT_QUEUE_SIZE, schema_batch=256,
                 parse_hook=None, schema_hook=None):
        self.store = store
        self.source = source
        self.state = SyncState(recorded_block_height=store.recorded_height(),
                               poll_interval=poll_interval)
        self.queue = queue_mod.Queue(maxsize=queue_size)
        self.schema = SchemaPipeline(store, self.queue, batch_size=schema_batch,
                                     progress_hook=schema_hook)
        self.parse_hook = parse_hook
        self.blocks_ingested = 0
        self.txs_ingested = 0
        self.writes_ingested = 0
        self.events_ingested = 0
        self._stop = threading.Event()
        self._sync_thread = None
        self._sync_error = None
        self._started_at = None

    def _sink(self, block):
        report = parse_and_commit(block, self.store, self.queue)
        self.blocks_ingested += 1
        self.txs_ingested += report.txs
        self.writes_ingested += report.writes
        self.events_ingested += report.events
        if self.parse_hook:
            self.parse_hook(self.txs_ingested, self.events_ingested)

    def run_once(self) -> IngestReport:
        """One sync pass; returns after the schema pipeline has drained.

        Also performs schema catch-up for blocks already in the store, so
        re-running ingest after a crash completes the interrupted work.
        """
        self._started_at = time.time()
        self.schema.start()
        try:
            sync_once(self.source, self.state, self._sink)
        finally:
            self.schema.finish()
        return self.report()

    def start_follow(self):
        """Start continuous polling in the background until stop()."""
        self._started_at = time.time()
        self._stop.clear()
        self.schema.start()
        self._sync_thread = threading.Thread(target=self._follow, name="sync-loop",
                                             daemon=True)
        self._sync_thread.start()

    def _follow(self):
        try:
            run_sync_loop(self.source, self.state, self._sink, self._stop)
        except RefinerError as exc:
            self._sync_error = exc

    def stop(self) -> IngestReport:
        """Stop the follow loop, drain the schema pipeline, and report."""
        self._stop.set()
        if self._sync_thread is not None:
            self._sync_thread.join()
            self._sync_thread = None
        self.schema.finish()
        if self._sync_error is not None:
            raise self._sync_error
        return self.report()

    @property
    def following(self) -> bool:
        return self._sync_thread is not None and self._sync_thread.is_alive()

    def report(self) -> IngestReport:
        return IngestReport(
            blocks=self.blocks_ingested,
            txs=self.txs_ingested,
            writes=self.writes_ingested,
            recorded_block_height=self.state.recorded_block_height,
            schema_progress=self.schema.progress,
        )

    def status(self) -> dict:
        """Sync status as exposed by the service and CLI."""
        try:
            source_height = self.source.max_height()
        except RefinerError:
            source_height = None
        return {
            "following": self.following,
            "recorded_block_height": self.state.recorded_block_height,
            "source_height": source_height,
            "poll_interval": self.state.poll_interval,
            "last_sync_at": self.state.last_sync_at,
            "suppressed_passes": self.state.suppressed,
            "schema_queue_depth": self.schema.queue_depth,
            "schema_progress": self.schema.progress,
            "blocks_ingested": self.blocks_ingested,
            "txs_ingested": self.txs_ingested,
        }


def sync_status_from_store(store: Store) -> dict:
    """Sync status derived from the store alone (no ingest running here)."""
    with store.snapshot() as snap:
        height = snap.recorded_height()
        progress = snap.schema_progress()
    return {
        "following": False,
        "recorded_block_height": height,
        "source_height": None,
        "poll_interval": None,
        "last_sync_at": None,
        "suppressed_passes": 0,
        "schema_queue_depth": 0,
        "schema_progress": progress,
        "blocks_ingested": 0,
        "txs_ingested": 0,
    }
