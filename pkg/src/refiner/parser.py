"""Block parsing and commit: blocks in, reorganized records out.

Each block becomes one store transaction: flat block and transaction rows,
one history entry per write-set item (valid and invalid transactions alike,
flagged), and world-state mutations for the valid write sets applied in
(tx_num, write position) order. Valid mutations are also handed to the
schema pipeline through a bounded queue after the commit.
"""

import json

from .errors import OutOfOrderBlock
from .model import LedgerBlock, RawTransaction, StateVersion, block_hash
from .records import (
    OP_DELETE,
    OP_WRITE,
    HistoryEntry,
    ParsedBlock,
    ParsedTransaction,
    StateEvent,
)
from .store import (
    META_RECORDED_HEIGHT,
    META_SCHEMA_SEQ_TOTAL,
    Store,
)
from dataclasses import dataclass


@dataclass(frozen=True)
class ParseReport:
    txs: int
    writes: int  # history entries, valid and invalid alike
    events: int  # valid world-state mutations handed to the schema queue


def extract_tx(raw: RawTransaction, block_num, tx_num, code) -> ParsedTransaction:
    """Pure projection of a raw transaction onto the flat record.

    Endorser organizations keep first-seen order with duplicates removed.
    CONFIG transactions always report empty chaincode and function names.
    """
    endorser_msps = tuple(dict.fromkeys(e.msp_id for e in raw.endorsers))
    is_config = raw.tx_type == "CONFIG"
    return ParsedTransaction(
        tx_id=raw.tx_id,
        block_num=block_num,
        tx_num=tx_num,
        channel_id=raw.channel_id,
        timestamp=raw.timestamp,
        tx_type=raw.tx_type,
        creator_msp=raw.creator.msp_id,
        creator_subject=raw.creator.subject,
        chaincode_name="" if is_config else raw.chaincode_name,
        function="" if is_config else raw.function,
        args=tuple(raw.args),
        endorser_msps=endorser_msps,
        validation_code=code,
        is_valid=code == 0,
        read_count=len(raw.read_set),
        write_count=len(raw.write_set),
    )


def _read_set_json(raw: RawTransaction) -> str:
    return json.dumps([
        {"key": r.key, "version": {"block_num": r.version.block_num,
                                   "tx_num": r.version.tx_num}}
        for r in raw.read_set
    ])


def parse_and_commit(block: LedgerBlock, store: Store, queue=None) -> ParseReport:
    """Atomically commit one block into the store.

    The block must extend the committed chain (height + 1). The recorded
    block height is persisted in the same transaction, so a crash between
    blocks neither loses nor duplicates anything on restart. When ``queue``
    is given, every valid world-state mutation is enqueued (blocking when
    full) after the commit succeeds.
    """
    number = block.header.number
    events = []
    with store.block_txn():
        height = store.get_meta_int(META_RECORDED_HEIGHT, -1)
        if number != height + 1:
            raise OutOfOrderBlock(
                f"block {number} does not extend committed height {height}")
        seq = store.get_meta_int(META_SCHEMA_SEQ_TOTAL, 0)
        commit_time = block.metadata.commit_time
        store.put_block_row(ParsedBlock(
            number=number,
            block_hash=block_hash(block),
            previous_hash=block.header.previous_hash,
            data_hash=block.header.data_hash,
            channel_id=block.transactions[0].channel_id,
            tx_count=len(block.transactions),
            commit_time=commit_time,
        ))
        writes = 0
        for tx_num, raw in enumerate(block.transactions):
            code = block.metadata.validation_codes[tx_num]
            ptx = extract_tx(raw, number, tx_num, code)
            store.put_tx_row(ptx, _read_set_json(raw))
            for pos, item in enumerate(raw.write_set):
                entry = HistoryEntry(
                    key=item.key, block_num=number, tx_num=tx_num,
                    write_pos=pos, tx_id=raw.tx_id,
                    op=OP_DELETE if item.is_delete else OP_WRITE,
                    value=item.value, is_valid=ptx.is_valid)
                store.put_history_row(entry)
                writes += 1
                if ptx.is_valid:
                    version = StateVersion(number, tx_num)
                    if item.is_delete:
                        store.world_delete(item.key)
                    else:
                        store.world_put(item.key, item.value, version)
                    seq += 1
                    events.append(StateEvent(seq=seq, key=item.key,
                                             value=item.value, version=version,
                                             commit_time=commit_time))
        store.set_meta_int(META_SCHEMA_SEQ_TOTAL, seq)
        store.set_meta_int(META_RECORDED_HEIGHT, number)
    if queue is not None:
        for event in events:
            queue.put(event)
    return ParseReport(txs=len(block.transactions), writes=writes,
                       events=len(events))
