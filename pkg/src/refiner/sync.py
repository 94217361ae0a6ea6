"""Incremental block synchronization.

One pass fetches every block in (recorded height, source max] in ascending
order and hands each to the sink; the sink is expected to persist the new
recorded height atomically with the block's own rows, so a crash never
skips or double-applies a block. A non-reentrant guard makes overlapping
passes collapse into one.
"""

import logging
import threading
import time
from dataclasses import dataclass, field

from .errors import GapDetected, SourceUnavailable
from .sources import BlockSource

log = logging.getLogger("refiner.sync")

DEFAULT_POLL_INTERVAL = 2.0


@dataclass
class SyncState:
    """Mutable sync bookkeeping shared between the loop and status readers."""

    recorded_block_height: int = -1
    poll_interval: float = DEFAULT_POLL_INTERVAL
    last_sync_at: float = None  # wall-clock seconds, None before first pass
    suppressed: int = 0  # passes skipped because one was already running
    _guard: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def running(self) -> bool:
        return self._guard.locked()

    def try_begin(self) -> bool:
        return self._guard.acquire(blocking=False)

    def end(self):
        self._guard.release()


@dataclass(frozen=True)
class SyncReport:
    fetched: int
    recorded_block_height: int
    suppressed: bool = False


def sync_once(source: BlockSource, state: SyncState, sink) -> SyncReport:
    """Run one sync pass; returns a suppressed report if one is in flight.

    ``sink(block)`` must persist the block and the new recorded height
    together. On GapDetected or a sink failure the pass aborts with the
    state reflecting the last successfully delivered block.
    """
    if not state.try_begin():
        state.suppressed += 1
        return SyncReport(fetched=0,
                          recorded_block_height=state.recorded_block_height,
                          suppressed=True)
    try:
        max_height = source.max_height()
        fetched = 0
        number = state.recorded_block_height + 1
        while number <= max_height:
            block = source.get_block(number)
            if block.header.number != number:
                raise GapDetected(
                    f"asked source for block {number} but received"
                    f" block {block.header.number}")
            sink(block)
            state.recorded_block_height = number
            fetched += 1
            number += 1
        state.last_sync_at = time.time()
        return SyncReport(fetched=fetched,
                          recorded_block_height=state.recorded_block_height)
    finally:
        state.end()


def run_sync_loop(source: BlockSource, state: SyncState, sink,
                  stop_signal: threading.Event):
    """Run sync passes every poll interval until the stop signal is set.

    An unavailable source is logged and retried next tick; anything else
    (gap, malformed block, sink failure) propagates to the caller.
    """
    while not stop_signal.is_set():
        try:
            report = sync_once(source, state, sink)
            if report.fetched:
                log.info("synced %d block(s), height now %d",
                         report.fetched, report.recorded_block_height)
        except SourceUnavailable as exc:
            log.warning("block source unavailable, will retry: %s", exc)
        if stop_signal.wait(state.poll_interval):
            break
