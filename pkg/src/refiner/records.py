"""Flat records produced by parsing, as reorganized in the store."""

from dataclasses import dataclass

from .model import StateVersion

OP_WRITE = "WRITE"
OP_DELETE = "DELETE"


@dataclass(frozen=True)
class ParsedBlock:
    number: int
    block_hash: str
    previous_hash: str
    data_hash: str
    channel_id: str
    tx_count: int
    commit_time: int


@dataclass(frozen=True)
class ParsedTransaction:
    tx_id: str
    block_num: int
    tx_num: int
    channel_id: str
    timestamp: int
    tx_type: str
    creator_msp: str
    creator_subject: str
    chaincode_name: str
    function: str
    args: tuple
    endorser_msps: tuple
    validation_code: int
    is_valid: bool
    read_count: int
    write_count: int


@dataclass(frozen=True)
class HistoryEntry:
    """One operation on one state key; ordered by (block_num, tx_num, write_pos)."""

    key: str
    block_num: int
    tx_num: int
    write_pos: int
    tx_id: str
    op: str  # OP_WRITE | OP_DELETE
    value: str | None
    is_valid: bool

    @property
    def version(self):
        return StateVersion(self.block_num, self.tx_num)


@dataclass(frozen=True)
class WorldStateEntry:
    key: str
    latest_value: str
    version: StateVersion
    schema_id: int | None


@dataclass(frozen=True)
class StateEvent:
    """One valid world-state mutation handed to the schema pipeline.

    ``seq`` is the position in the global order of valid mutations; ``value``
    is None for a delete tombstone. ``commit_time`` is the enclosing block's
    commit instant, used for deterministic schema-record timestamps.
    """

    seq: int
    key: str
    value: str | None
    version: StateVersion
    commit_time: int
