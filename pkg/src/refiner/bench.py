"""Performance harness: time both ingest pipelines over a generated ledger.

Generation is untimed; the clock covers ingest only. The parse pipeline is
timed by cumulative transactions committed; the schema pipeline consumes
state mutations, so its progress is translated back to transaction counts
through a block-granularity map recorded by the parse side. Each pipeline
reports cumulative elapsed time at every requested checkpoint, plus a
least-squares linearity fit of elapsed time against transaction count.
"""

import bisect
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .genledger import GenConfig, config_summary, generate_file
from .pipeline import Ingestor
from .sources import FileReplaySource
from .store import Store

PARSE_PIPELINE = "parse"
SCHEMA_PIPELINE = "schema"

CSV_HEADER = "pipeline,txs,elapsed_ms,tps"


@dataclass(frozen=True)
class BenchRow:
    pipeline: str
    txs: int
    elapsed_ms: float
    tps: float

    def to_csv(self):
        return f"{self.pipeline},{self.txs},{self.elapsed_ms:.3f},{self.tps:.2f}"


@dataclass
class BenchReport:
    rows: tuple
    r_squared: dict  # pipeline -> float (elapsed vs txs, least squares)
    windows: dict  # pipeline -> (first activity, last activity), perf-clock
    total_txs: int
    total_events: int
    wall_seconds: float
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        lines += [row.to_csv() for row in self.rows]
        return "\n".join(lines) + "\n"

    def elapsed_at(self, pipeline, txs) -> float:
        for row in self.rows:
            if row.pipeline == pipeline and row.txs == txs:
                return row.elapsed_ms
        raise KeyError(f"no {pipeline} checkpoint at {txs} txs")

    def elapsed_ratio(self, pipeline, txs_hi, txs_lo) -> float:
        return self.elapsed_at(pipeline, txs_hi) / self.elapsed_at(pipeline, txs_lo)

    def windows_overlap(self) -> bool:
        """True when both pipelines were active at the same time."""
        starts = [w[0] for w in self.windows.values()]
        ends = [w[1] for w in self.windows.values()]
        return max(starts) < min(ends)


class _PipelineClock:
    """Marks elapsed time when cumulative progress crosses each checkpoint."""

    def __init__(self, checkpoints):
        self.pending = sorted(checkpoints)
        self.marks = {}
        self.t0 = None
        self.first = None
        self.last = None

    def begin(self):
        self.t0 = time.perf_counter()

    def update(self, count):
        now = time.perf_counter()
        if self.first is None:
            self.first = now
        self.last = now
        while self.pending and count >= self.pending[0]:
            self.marks[self.pending.pop(0)] = now - self.t0


class _TxProgressMap:
    """Monotone (cumulative events -> cumulative txs) pairs, one per block."""

    def __init__(self):
        self._events = [0]
        self._txs = [0]
        self._lock = threading.Lock()

    def record(self, cum_events, cum_txs):
        with self._lock:
            self._events.append(cum_events)
            self._txs.append(cum_txs)

    def txs_for(self, events) -> int:
        with self._lock:
            i = bisect.bisect_right(self._events, events) - 1
            return self._txs[i]


def _fit_r_squared(points):
    """R-squared of the best least-squares line through (x, y) points."""
    n = len(points)
    if n < 2:
        return 1.0
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in points)
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    if sxx == 0 or ss_tot == 0:
        return 1.0
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in points)
    return 1.0 - ss_res / ss_tot


def run_bench(config: GenConfig, checkpoints, workdir=None,
              queue_size=10_000, schema_batch=256) -> BenchReport:
    """Generate a ledger, ingest it with both pipelines, return timings."""
    checkpoints = sorted(checkpoints)
    with tempfile.TemporaryDirectory(prefix="refiner-bench-") as tmp:
        base = Path(workdir) if workdir is not None else Path(tmp)
        base.mkdir(parents=True, exist_ok=True)
        ledger_path = base / "bench.ledger.jsonl"
        generate_file(config, ledger_path)

        store = Store(base / "store")
        try:
            parse_clock = _PipelineClock(checkpoints)
            schema_clock = _PipelineClock(checkpoints)
            progress = _TxProgressMap()

            def parse_hook(cum_txs, cum_events):
                progress.record(cum_events, cum_txs)
                parse_clock.update(cum_txs)

            def schema_hook(items):
                schema_clock.update(progress.txs_for(items))

            ingestor = Ingestor(store, FileReplaySource(ledger_path),
                                queue_size=queue_size,
                                schema_batch=schema_batch,
                                parse_hook=parse_hook,
                                schema_hook=schema_hook)
            wall_start = time.perf_counter()
            parse_clock.begin()
            schema_clock.begin()
            ingestor.run_once()
            wall = time.perf_counter() - wall_start
        finally:
            store.close()

    rows = []
    r_squared = {}
    windows = {}
    for name, clock in ((PARSE_PIPELINE, parse_clock),
                        (SCHEMA_PIPELINE, schema_clock)):
        points = []
        for cp in checkpoints:
            if cp not in clock.marks:
                continue  # ledger ended before this checkpoint
            elapsed = clock.marks[cp]
            points.append((cp, elapsed * 1000.0))
            rows.append(BenchRow(pipeline=name, txs=cp,
                                 elapsed_ms=elapsed * 1000.0,
                                 tps=cp / elapsed if elapsed > 0 else 0.0))
        r_squared[name] = _fit_r_squared(points)
        if clock.first is not None:
            windows[name] = (clock.first, clock.last)

    return BenchReport(rows=tuple(rows), r_squared=r_squared, windows=windows,
                       total_txs=ingestor.txs_ingested,
                       total_events=ingestor.events_ingested,
                       wall_seconds=wall, config=config_summary(config))
