"""Block interchange format and the domain types shared by every module.

Blocks travel between tools as JSON Lines (one block per line, ascending
height, extension ``.ledger.jsonl``). This module owns the canonical
serialization of that format, full structural validation, and the
chain-linking block hash rule.

All types are immutable after construction and safe to share across threads.
Timestamps are RFC 3339 UTC strings on the wire and integer microseconds
since the Unix epoch in memory.
"""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .errors import InvariantViolation, MalformedBlock

TX_ENDORSER = "ENDORSER_TRANSACTION"
TX_CONFIG = "CONFIG"
TX_TYPES = (TX_ENDORSER, TX_CONFIG)

# Validation codes recorded in block metadata. Only VALID mutates world state.
VALID = 0
MVCC_READ_CONFLICT = 10
OTHER_INVALID = 254

GENESIS_PREVIOUS_HASH = "0" * 64

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MICROSECOND = timedelta(microseconds=1)


def parse_rfc3339(text: str) -> int:
    """Parse an RFC 3339 UTC instant into integer microseconds since epoch."""
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    normalized = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise ValueError(f"bad RFC 3339 timestamp {text!r}") from exc
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} is missing a UTC offset")
    return (dt - _EPOCH) // _MICROSECOND


def format_rfc3339(micros: int) -> str:
    """Render microseconds since epoch as an RFC 3339 UTC string."""
    dt = _EPOCH + timedelta(microseconds=micros)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True, order=True)
class StateVersion:
    """Identity of the transaction that wrote a state: totally ordered."""

    block_num: int
    tx_num: int


@dataclass(frozen=True)
class Identity:
    msp_id: str
    subject: str


@dataclass(frozen=True)
class ReadItem:
    key: str
    version: StateVersion


@dataclass(frozen=True)
class WriteItem:
    key: str
    is_delete: bool
    value: str | None = None


@dataclass(frozen=True)
class RawTransaction:
    tx_id: str
    channel_id: str
    timestamp: int  # microseconds since epoch
    tx_type: str
    creator: Identity
    chaincode_name: str
    function: str
    args: tuple = ()
    endorsers: tuple = ()
    read_set: tuple = ()
    write_set: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "endorsers", tuple(self.endorsers))
        object.__setattr__(self, "read_set", tuple(self.read_set))
        object.__setattr__(self, "write_set", tuple(self.write_set))


@dataclass(frozen=True)
class BlockHeader:
    number: int
    previous_hash: str
    data_hash: str


@dataclass(frozen=True)
class BlockMetadata:
    commit_time: int  # microseconds since epoch
    validation_codes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "validation_codes", tuple(self.validation_codes))


@dataclass(frozen=True)
class LedgerBlock:
    header: BlockHeader
    transactions: tuple = ()
    metadata: BlockMetadata = field(default_factory=lambda: BlockMetadata(0))

    def __post_init__(self):
        object.__setattr__(self, "transactions", tuple(self.transactions))


def block_hash(block: LedgerBlock) -> str:
    """Chain-linking hash of a block.

    SHA-256 over the ASCII string ``number|previous_hash|data_hash``. Block
    n+1 must carry this digest as its ``previous_hash``.
    """
    h = block.header
    material = f"{h.number}|{h.previous_hash}|{h.data_hash}"
    return hashlib.sha256(material.encode("ascii")).hexdigest()


def _require_hex_digest(value, field_name, block_number):
    if not isinstance(value, str) or len(value) != 64 or any(
        c not in "0123456789abcdef" for c in value
    ):
        raise InvariantViolation(
            "must be a 64-char lowercase hex digest",
            field=field_name,
            block_number=block_number,
        )


def validate_block(block: LedgerBlock) -> None:
    """Check every structural invariant; raise InvariantViolation on failure."""
    number = block.header.number
    if not isinstance(number, int) or isinstance(number, bool) or number < 0:
        raise InvariantViolation("block number must be a non-negative integer",
                                 field="header.number")
    _require_hex_digest(block.header.previous_hash, "header.previous_hash", number)
    _require_hex_digest(block.header.data_hash, "header.data_hash", number)
    if number == 0 and block.header.previous_hash != GENESIS_PREVIOUS_HASH:
        raise InvariantViolation("genesis previous_hash must be all-zero",
                                 field="header.previous_hash", block_number=number)
    if not block.transactions:
        raise InvariantViolation("block has no transactions",
                                 field="transactions", block_number=number)
    if len(block.metadata.validation_codes) != len(block.transactions):
        raise InvariantViolation(
            f"{len(block.metadata.validation_codes)} codes for "
            f"{len(block.transactions)} transactions",
            field="validation_codes", block_number=number)
    for code in block.metadata.validation_codes:
        if not isinstance(code, int) or isinstance(code, bool) or not 0 <= code <= 255:
            raise InvariantViolation("validation code out of range",
                                     field="validation_codes", block_number=number)
    seen_ids = set()
    for tx in block.transactions:
        _validate_tx(tx, number)
        if tx.tx_id in seen_ids:
            raise InvariantViolation(f"duplicate tx_id {tx.tx_id!r} within block",
                                     field="tx_id", block_number=number)
        seen_ids.add(tx.tx_id)


def _validate_tx(tx: RawTransaction, block_number):
    if not tx.tx_id:
        raise InvariantViolation("tx_id is empty", field="tx_id",
                                 block_number=block_number)
    if tx.tx_type not in TX_TYPES:
        raise InvariantViolation(f"unknown tx_type {tx.tx_type!r}",
                                 field="tx_type", block_number=block_number)
    if not tx.creator.msp_id:
        raise InvariantViolation("creator msp_id is empty",
                                 field="creator.msp_id", block_number=block_number)
    for endorser in tx.endorsers:
        if not endorser.msp_id:
            raise InvariantViolation("endorser msp_id is empty",
                                     field="endorsers", block_number=block_number)
    if tx.tx_type == TX_CONFIG and (tx.read_set or tx.write_set or tx.endorsers):
        raise InvariantViolation(
            "CONFIG transaction must have empty read_set/write_set/endorsers",
            field="tx_type", block_number=block_number)
    for item in tx.write_set:
        if item.is_delete and item.value is not None:
            raise InvariantViolation("delete write carries a value",
                                     field="write_set", block_number=block_number)
        if not item.is_delete and not isinstance(item.value, str):
            raise InvariantViolation("non-delete write is missing its value",
                                     field="write_set", block_number=block_number)
    for item in tx.read_set:
        version = item.version
        if version.block_num < 0 or version.tx_num < 0:
            raise InvariantViolation("read version must be non-negative",
                                     field="read_set", block_number=block_number)


def block_to_dict(block: LedgerBlock) -> dict:
    """Project a block onto the interchange field layout."""
    txs = []
    for tx in block.transactions:
        writes = []
        for w in tx.write_set:
            entry = {"key": w.key, "is_delete": w.is_delete}
            if not w.is_delete:
                entry["value"] = w.value
            writes.append(entry)
        txs.append({
            "tx_id": tx.tx_id,
            "channel_id": tx.channel_id,
            "timestamp": format_rfc3339(tx.timestamp),
            "tx_type": tx.tx_type,
            "creator": {"msp_id": tx.creator.msp_id, "subject": tx.creator.subject},
            "chaincode_name": tx.chaincode_name,
            "function": tx.function,
            "args": list(tx.args),
            "endorsers": [{"msp_id": e.msp_id, "subject": e.subject}
                          for e in tx.endorsers],
            "read_set": [{"key": r.key,
                          "version": {"block_num": r.version.block_num,
                                      "tx_num": r.version.tx_num}}
                         for r in tx.read_set],
            "write_set": writes,
        })
    return {
        "header": {
            "number": block.header.number,
            "previous_hash": block.header.previous_hash,
            "data_hash": block.header.data_hash,
        },
        "transactions": txs,
        "metadata": {
            "commit_time": format_rfc3339(block.metadata.commit_time),
            "validation_codes": list(block.metadata.validation_codes),
        },
    }


def block_to_json(block: LedgerBlock) -> str:
    """Canonical single-line serialization used in ``.ledger.jsonl`` files."""
    return json.dumps(block_to_dict(block), separators=(",", ":"), ensure_ascii=False)


class _Extractor:
    """Pulls typed fields out of decoded JSON, naming failures precisely."""

    def __init__(self, block_number=None):
        self.block_number = block_number

    def fail(self, message, field_name):
        raise MalformedBlock(message, field=field_name,
                             block_number=self.block_number)

    def get(self, obj, field_name, expected_type, path):
        if not isinstance(obj, dict):
            self.fail("expected an object", path)
        if field_name not in obj:
            self.fail("required field missing", f"{path}.{field_name}" if path else field_name)
        value = obj[field_name]
        if expected_type is int and isinstance(value, bool):
            self.fail("expected an integer", f"{path}.{field_name}" if path else field_name)
        if not isinstance(value, expected_type):
            self.fail(f"expected {expected_type.__name__}",
                      f"{path}.{field_name}" if path else field_name)
        return value

    def timestamp(self, obj, field_name, path):
        raw = self.get(obj, field_name, str, path)
        try:
            return parse_rfc3339(raw)
        except ValueError:
            self.fail("bad RFC 3339 timestamp", f"{path}.{field_name}")


def block_from_dict(data: dict) -> LedgerBlock:
    """Build and validate a LedgerBlock from decoded interchange JSON."""
    ex = _Extractor()
    header_obj = ex.get(data, "header", dict, "")
    number = ex.get(header_obj, "number", int, "header")
    ex = _Extractor(block_number=number)
    header = BlockHeader(
        number=number,
        previous_hash=ex.get(header_obj, "previous_hash", str, "header"),
        data_hash=ex.get(header_obj, "data_hash", str, "header"),
    )
    txs = []
    for tx_obj in ex.get(data, "transactions", list, ""):
        txs.append(_tx_from_dict(tx_obj, ex))
    meta_obj = ex.get(data, "metadata", dict, "")
    codes = ex.get(meta_obj, "validation_codes", list, "metadata")
    metadata = BlockMetadata(
        commit_time=ex.timestamp(meta_obj, "commit_time", "metadata"),
        validation_codes=tuple(codes),
    )
    block = LedgerBlock(header=header, transactions=tuple(txs), metadata=metadata)
    validate_block(block)
    return block


def _tx_from_dict(obj, ex: _Extractor):
    creator_obj = ex.get(obj, "creator", dict, "transactions")
    creator = Identity(
        msp_id=ex.get(creator_obj, "msp_id", str, "creator"),
        subject=ex.get(creator_obj, "subject", str, "creator"),
    )
    endorsers = []
    for e_obj in ex.get(obj, "endorsers", list, "transactions"):
        endorsers.append(Identity(
            msp_id=ex.get(e_obj, "msp_id", str, "endorsers"),
            subject=ex.get(e_obj, "subject", str, "endorsers"),
        ))
    reads = []
    for r_obj in ex.get(obj, "read_set", list, "transactions"):
        v_obj = ex.get(r_obj, "version", dict, "read_set")
        reads.append(ReadItem(
            key=ex.get(r_obj, "key", str, "read_set"),
            version=StateVersion(
                block_num=ex.get(v_obj, "block_num", int, "read_set.version"),
                tx_num=ex.get(v_obj, "tx_num", int, "read_set.version"),
            ),
        ))
    writes = []
    for w_obj in ex.get(obj, "write_set", list, "transactions"):
        is_delete = ex.get(w_obj, "is_delete", bool, "write_set")
        if is_delete:
            value = None
        else:
            value = ex.get(w_obj, "value", str, "write_set")
        writes.append(WriteItem(
            key=ex.get(w_obj, "key", str, "write_set"),
            is_delete=is_delete,
            value=value,
        ))
    return RawTransaction(
        tx_id=ex.get(obj, "tx_id", str, "transactions"),
        channel_id=ex.get(obj, "channel_id", str, "transactions"),
        timestamp=ex.timestamp(obj, "timestamp", "transactions"),
        tx_type=ex.get(obj, "tx_type", str, "transactions"),
        creator=creator,
        chaincode_name=ex.get(obj, "chaincode_name", str, "transactions"),
        function=ex.get(obj, "function", str, "transactions"),
        args=tuple(ex.get(obj, "args", list, "transactions")),
        endorsers=tuple(endorsers),
        read_set=tuple(reads),
        write_set=tuple(writes),
    )


def parse_block_json(text: str) -> LedgerBlock:
    """Parse one interchange JSON document into a validated LedgerBlock."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedBlock(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise MalformedBlock("block document must be a JSON object")
    return block_from_dict(data)
