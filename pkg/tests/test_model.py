"""Block interchange format: hashing, validation, round-trips."""

import json

import pytest

from refiner.errors import InvariantViolation, MalformedBlock
from refiner.genledger import GenConfig, generate
from refiner.model import (
    GENESIS_PREVIOUS_HASH,
    BlockHeader,
    BlockMetadata,
    Identity,
    LedgerBlock,
    RawTransaction,
    StateVersion,
    WriteItem,
    block_from_dict,
    block_hash,
    block_to_dict,
    block_to_json,
    format_rfc3339,
    parse_block_json,
    parse_rfc3339,
    validate_block,
)

# Computed with sha256sum over the literal header string before this test
# was written.
GOLDEN_HEADER_HASH = (
    "1850438c10fbddf5c8dd3364ae29e944840950e424f3b5be2efa0809027b66a5")


def _tx(tx_id="tx1", **kw):
    defaults = dict(
        tx_id=tx_id, channel_id="ch", timestamp=1_500_000_000_000_000,
        tx_type="ENDORSER_TRANSACTION",
        creator=Identity("Org1MSP", "user@org1"),
        chaincode_name="cc", function="create",
        args=("k",), endorsers=(Identity("Org2MSP", "peer@org2"),),
        write_set=(WriteItem(key="k", is_delete=False, value="{}"),))
    defaults.update(kw)
    return RawTransaction(**defaults)


def _block(number=1, txs=None, codes=None, previous_hash="ab" * 32):
    txs = (_tx(),) if txs is None else tuple(txs)
    codes = tuple([0] * len(txs)) if codes is None else tuple(codes)
    return LedgerBlock(
        header=BlockHeader(number=number, previous_hash=previous_hash,
                           data_hash="cd" * 32),
        transactions=txs,
        metadata=BlockMetadata(commit_time=1_500_000_000_000_000,
                               validation_codes=codes))


class TestTimestamps:
    def test_round_trip_microseconds(self):
        micros = parse_rfc3339("2020-01-01T00:00:00.000001Z")
        assert micros == 1577836800000001
        assert format_rfc3339(micros) == "2020-01-01T00:00:00.000001Z"

    def test_plain_z_suffix(self):
        assert parse_rfc3339("2020-01-01T00:00:00Z") == 1577836800000000

    def test_explicit_offset(self):
        assert parse_rfc3339("2020-01-01T01:00:00+01:00") == 1577836800000000

    def test_missing_offset_rejected(self):
        with pytest.raises(ValueError):
            parse_rfc3339("2020-01-01T00:00:00")

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            parse_rfc3339("yesterday")


class TestBlockHash:
    def test_golden_value(self):
        block = LedgerBlock(
            header=BlockHeader(number=0, previous_hash="00" * 32,
                               data_hash="ab" * 32))
        assert block_hash(block) == GOLDEN_HEADER_HASH

    def test_deterministic(self):
        b = _block()
        assert block_hash(b) == block_hash(b)

    def test_data_hash_changes_digest(self):
        b1 = _block()
        b2 = LedgerBlock(header=BlockHeader(number=b1.header.number,
                                            previous_hash=b1.header.previous_hash,
                                            data_hash="ef" * 32),
                         transactions=b1.transactions, metadata=b1.metadata)
        assert block_hash(b1) != block_hash(b2)


class TestValidateBlock:
    def test_valid_block_passes(self):
        validate_block(_block())

    def test_code_count_mismatch(self):
        block = _block(codes=[0, 0])
        with pytest.raises(InvariantViolation) as err:
            validate_block(block)
        assert err.value.field == "validation_codes"
        assert err.value.block_number == 1

    def test_genesis_must_be_zero_linked(self):
        with pytest.raises(InvariantViolation):
            validate_block(_block(number=0))
        validate_block(_block(number=0, previous_hash=GENESIS_PREVIOUS_HASH))

    def test_bad_digest_rejected(self):
        with pytest.raises(InvariantViolation):
            validate_block(_block(previous_hash="zz" * 32))
        with pytest.raises(InvariantViolation):
            validate_block(_block(previous_hash="ab" * 16))

    def test_empty_block_rejected(self):
        with pytest.raises(InvariantViolation):
            validate_block(_block(txs=(), codes=()))

    def test_duplicate_tx_id_rejected(self):
        with pytest.raises(InvariantViolation) as err:
            validate_block(_block(txs=(_tx(), _tx()), codes=(0, 0)))
        assert err.value.field == "tx_id"

    def test_delete_with_value_rejected(self):
        bad = _tx(write_set=(WriteItem(key="k", is_delete=True, value="{}"),))
        with pytest.raises(InvariantViolation):
            validate_block(_block(txs=(bad,)))

    def test_write_without_value_rejected(self):
        bad = _tx(write_set=(WriteItem(key="k", is_delete=False, value=None),))
        with pytest.raises(InvariantViolation):
            validate_block(_block(txs=(bad,)))

    def test_config_must_be_bare(self):
        bad = _tx(tx_type="CONFIG")
        with pytest.raises(InvariantViolation):
            validate_block(_block(txs=(bad,)))

    def test_unknown_tx_type(self):
        with pytest.raises(InvariantViolation):
            validate_block(_block(txs=(_tx(tx_type="WEIRD"),)))

    def test_code_out_of_range(self):
        with pytest.raises(InvariantViolation):
            validate_block(_block(codes=[999]))


class TestInterchange:
    def test_round_trip_single_block(self):
        block = _block()
        assert parse_block_json(block_to_json(block)) == block

    def test_round_trip_generated_corpus(self):
        blocks = list(generate(GenConfig(seed=3, block_count=12,
                                         txs_per_block=(1, 6),
                                         invalid_ratio=0.2)))
        for block in blocks:
            again = parse_block_json(block_to_json(block))
            assert again == block
            # canonical serialization is stable through a round trip
            assert block_to_json(again) == block_to_json(block)

    def test_missing_field_names_the_path(self):
        data = block_to_dict(_block())
        del data["transactions"][0]["creator"]["msp_id"]
        with pytest.raises(MalformedBlock) as err:
            block_from_dict(data)
        assert "creator.msp_id" in str(err.value)
        assert err.value.block_number == 1

    def test_code_length_mismatch_is_invariant_violation(self):
        data = block_to_dict(_block())
        data["metadata"]["validation_codes"] = [0, 0]
        with pytest.raises(InvariantViolation):
            block_from_dict(data)

    def test_invalid_json_rejected(self):
        with pytest.raises(MalformedBlock):
            parse_block_json("{nope")

    def test_non_object_rejected(self):
        with pytest.raises(MalformedBlock):
            parse_block_json("[1,2]")

    def test_bad_timestamp_named(self):
        data = block_to_dict(_block())
        data["metadata"]["commit_time"] = "not-a-time"
        with pytest.raises(MalformedBlock) as err:
            block_from_dict(data)
        assert "commit_time" in str(err.value)

    def test_delete_write_omits_value_on_wire(self):
        tx = _tx(write_set=(WriteItem(key="k", is_delete=True),))
        data = block_to_dict(_block(txs=(tx,)))
        wire = data["transactions"][0]["write_set"][0]
        assert wire == {"key": "k", "is_delete": True}

    def test_wire_field_names_exact(self):
        data = json.loads(block_to_json(_block()))
        assert set(data) == {"header", "transactions", "metadata"}
        assert set(data["header"]) == {"number", "previous_hash", "data_hash"}
        assert set(data["metadata"]) == {"commit_time", "validation_codes"}
        tx = data["transactions"][0]
        assert set(tx) == {"tx_id", "channel_id", "timestamp", "tx_type",
                           "creator", "chaincode_name", "function", "args",
                           "endorsers", "read_set", "write_set"}


class TestStateVersion:
    def test_lexicographic_order(self):
        assert StateVersion(1, 5) < StateVersion(2, 0)
        assert StateVersion(2, 0) < StateVersion(2, 1)
        assert not StateVersion(2, 1) < StateVersion(2, 1)

    def test_total_order_matches_tuples(self):
        versions = [StateVersion(b, t) for b in range(3) for t in range(3)]
        as_tuples = sorted((v.block_num, v.tx_num) for v in versions)
        assert [(v.block_num, v.tx_num) for v in sorted(versions)] == as_tuples
