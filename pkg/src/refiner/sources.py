"""Block sources: where the sync loop fetches ledger blocks from.

A source exposes random access by height plus the current maximum height.
Heights are dense (0..max). The file source re-scans its backing file on
every ``max_height`` call, so a file that is being appended to behaves like
a live ledger.
"""

import os

from .errors import SourceUnavailable
from .genledger import GenConfig, generate
from .model import LedgerBlock, parse_block_json


class BlockSource:
    """Read-only view of a ledger: dense heights 0..max_height()."""

    def max_height(self) -> int:
        raise NotImplementedError

    def get_block(self, number: int) -> LedgerBlock:
        raise NotImplementedError


class FileReplaySource(BlockSource):
    """Replays a JSON Lines ledger file, one block per line.

    Only complete (newline-terminated) lines are visible, so a writer that
    appends whole lines can be tailed safely. Blocks are re-parsed on each
    access; the file is treated as append-only.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self._spans = []  # (byte offset, byte length) per complete line
        self._offset = 0

    def _scan(self):
        try:
            f = open(self.path, "rb")
        except OSError as exc:
            raise SourceUnavailable(f"cannot open ledger file {self.path}: {exc}")
        with f:
            f.seek(self._offset)
            chunk = f.read()
        end = chunk.rfind(b"\n")
        if end < 0:
            return
        pos = 0
        while pos <= end:
            nl = chunk.index(b"\n", pos)
            if nl > pos:  # skip blank lines
                self._spans.append((self._offset + pos, nl - pos))
            pos = nl + 1
        self._offset += end + 1

    def max_height(self) -> int:
        self._scan()
        return len(self._spans) - 1

    def get_block(self, number: int) -> LedgerBlock:
        if number >= len(self._spans):
            self._scan()
        if number < 0 or number >= len(self._spans):
            raise SourceUnavailable(
                f"block {number} is beyond the ledger file ({len(self._spans)} blocks)")
        start, length = self._spans[number]
        try:
            with open(self.path, "rb") as f:
                f.seek(start)
                line = f.read(length)
        except OSError as exc:
            raise SourceUnavailable(f"cannot read ledger file {self.path}: {exc}")
        return parse_block_json(line.decode("utf-8"))


class GeneratorSource(BlockSource):
    """Serves a synthetic ledger directly from the generator, no file needed."""

    def __init__(self, config: GenConfig):
        self.config = config
        self._blocks = []
        self._iter = generate(config)

    def _materialize(self, upto):
        while len(self._blocks) <= upto:
            try:
                self._blocks.append(next(self._iter))
            except StopIteration:
                break

    def max_height(self) -> int:
        return self.config.block_count - 1

    def get_block(self, number: int) -> LedgerBlock:
        if number < 0 or number >= self.config.block_count:
            raise SourceUnavailable(
                f"block {number} is beyond the generated ledger"
                f" ({self.config.block_count} blocks)")
        self._materialize(number)
        return self._blocks[number]


class StaticSource(BlockSource):
    """In-memory list of blocks; mainly handy for tests and small fixtures."""

    def __init__(self, blocks=()):
        self.blocks = list(blocks)

    def append(self, block):
        self.blocks.append(block)

    def max_height(self) -> int:
        return len(self.blocks) - 1

    def get_block(self, number: int) -> LedgerBlock:
        if number < 0 or number >= len(self.blocks):
            raise SourceUnavailable(f"block {number} not present in source")
        return self.blocks[number]
