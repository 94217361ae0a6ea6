"""Deterministic synthetic-ledger generation.

Emits chain-linked ledgers whose state values instantiate four built-in
JSON shapes with fixed field names, so schema clustering over a generated
ledger converges to exactly four schema records:

    A: 1 level, 14 properties          C: 1 level, 24 properties
    B: 2 levels, 11 + 4 properties     D: 2 levels, 12 + 15 properties

Generation is fully reproducible: one 64-bit seed drives a Mersenne Twister
stream and all timestamps are derived from block positions, so the same
config yields byte-identical ``.ledger.jsonl`` files on any machine.
"""

import hashlib
import json
import random
from dataclasses import dataclass, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import InvalidConfig
from .model import (
    GENESIS_PREVIOUS_HASH,
    MVCC_READ_CONFLICT,
    OTHER_INVALID,
    TX_CONFIG,
    TX_ENDORSER,
    VALID,
    BlockHeader,
    BlockMetadata,
    Identity,
    LedgerBlock,
    RawTransaction,
    ReadItem,
    StateVersion,
    WriteItem,
    block_hash,
    block_to_json,
    parse_rfc3339,
    validate_block,
)

GENESIS_TIME = parse_rfc3339("2020-01-01T00:00:00Z")
PRNG_NAME = "mt19937"

_SCALAR_KINDS = ("string", "number", "boolean")


def _scalar_fields(prefix, count):
    return tuple((f"{prefix}{i:02d}", _SCALAR_KINDS[(i - 1) % 3])
                 for i in range(1, count + 1))


@dataclass(frozen=True)
class ShapeSpec:
    """One of the built-in value shapes. Nested groups are (name, subfields)."""

    name: str
    fields: tuple

    def level_profile(self):
        """(level_count, props_per_level) this shape's values must produce."""
        top = len(self.fields)
        second = sum(len(kind) for _, kind in self.fields if isinstance(kind, tuple))
        if second:
            return 2, [top, second]
        return 1, [top]


SHAPE_A = ShapeSpec("A", _scalar_fields("a", 14))
SHAPE_B = ShapeSpec("B", _scalar_fields("b", 10) + (("detail", _scalar_fields("d", 4)),))
SHAPE_C = ShapeSpec("C", _scalar_fields("c", 24))
SHAPE_D = ShapeSpec("D", _scalar_fields("e", 10)
                    + (("main", _scalar_fields("m", 8)),
                       ("aux", _scalar_fields("x", 7))))
SHAPES = (SHAPE_A, SHAPE_B, SHAPE_C, SHAPE_D)

_SHAPE_MARKERS = {"a01": "A", "b01": "B", "c01": "C", "e01": "D"}


def shape_name_of(value_text):
    """Name of the built-in shape a generated value belongs to, else None."""
    try:
        obj = json.loads(value_text)
    except (ValueError, TypeError):
        return None
    if not isinstance(obj, dict):
        return None
    for marker, name in _SHAPE_MARKERS.items():
        if marker in obj:
            return name
    return None


@dataclass(frozen=True)
class GenConfig:
    seed: int = 1
    block_count: int = 10  # total blocks including genesis
    txs_per_block: object = 5  # int, or (lo, hi) inclusive range
    schema_mix: tuple = (0.25, 0.25, 0.25, 0.25)  # weights for shapes A..D
    update_ratio: float = 0.2
    delete_ratio: float = 0.05
    invalid_ratio: float = 0.05
    org_count: int = 3
    channel_id: str = "mychannel"

    def validate(self):
        if self.block_count < 1:
            raise InvalidConfig("block_count must be >= 1")
        tpb = self.txs_per_block
        if isinstance(tpb, int):
            if tpb < 1:
                raise InvalidConfig("txs_per_block must be >= 1")
        else:
            try:
                lo, hi = tpb
            except (TypeError, ValueError):
                raise InvalidConfig("txs_per_block must be an int or a (lo, hi) pair")
            if not (isinstance(lo, int) and isinstance(hi, int) and 1 <= lo <= hi):
                raise InvalidConfig("txs_per_block range must satisfy 1 <= lo <= hi")
        if len(self.schema_mix) != len(SHAPES):
            raise InvalidConfig(f"schema_mix needs {len(SHAPES)} weights")
        if any(w < 0 for w in self.schema_mix):
            raise InvalidConfig("schema_mix weights must be non-negative")
        if abs(sum(self.schema_mix) - 1.0) > 1e-9:
            raise InvalidConfig("schema_mix weights must sum to 1")
        for name in ("update_ratio", "delete_ratio", "invalid_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1]")
        if self.update_ratio + self.delete_ratio > 1.0 + 1e-9:
            raise InvalidConfig("update_ratio + delete_ratio must be <= 1")
        if self.org_count < 1:
            raise InvalidConfig("org_count must be >= 1")
        if not self.channel_id:
            raise InvalidConfig("channel_id must be non-empty")
        return self


_CONFIG_KEYS = ("seed", "block_count", "txs_per_block", "schema_mix",
                "update_ratio", "delete_ratio", "invalid_ratio", "org_count",
                "channel_id")


def load_gen_config(path) -> GenConfig:
    """Load a GenConfig from a TOML file of flat keys mirroring its fields."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfig(f"bad config file: {exc}") from exc
    unknown = set(data) - set(_CONFIG_KEYS)
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key in _CONFIG_KEYS:
        if key not in data:
            continue
        value = data[key]
        if key in ("txs_per_block",) and isinstance(value, list):
            value = tuple(value)
        if key == "schema_mix":
            if not isinstance(value, list):
                raise InvalidConfig("schema_mix must be an array of weights")
            value = tuple(float(w) for w in value)
        kwargs[key] = value
    return GenConfig(**kwargs).validate()


def config_summary(config: GenConfig) -> dict:
    """Effective configuration, including the PRNG algorithm, for run records."""
    tpb = config.txs_per_block
    return {
        "seed": config.seed,
        "block_count": config.block_count,
        "txs_per_block": list(tpb) if isinstance(tpb, tuple) else tpb,
        "schema_mix": list(config.schema_mix),
        "update_ratio": config.update_ratio,
        "delete_ratio": config.delete_ratio,
        "invalid_ratio": config.invalid_ratio,
        "org_count": config.org_count,
        "channel_id": config.channel_id,
        "prng": PRNG_NAME,
    }


def _scalar_value(kind, rng):
    if kind == "string":
        return f"v{rng.randrange(1_000_000):06d}"
    if kind == "number":
        if rng.random() < 0.25:
            return round(rng.random() * 1000, 3)
        return rng.randrange(1_000_000)
    return rng.random() < 0.5


def make_value(shape: ShapeSpec, rng) -> str:
    """JSON text instantiating the shape; field order is shuffled on purpose."""
    entries = list(shape.fields)
    rng.shuffle(entries)
    obj = {}
    for name, kind in entries:
        if isinstance(kind, tuple):
            sub_entries = list(kind)
            rng.shuffle(sub_entries)
            obj[name] = {sub: _scalar_value(skind, rng) for sub, skind in sub_entries}
        else:
            obj[name] = _scalar_value(kind, rng)
    return json.dumps(obj, separators=(",", ":"))


class LedgerBuilder:
    """Builds chain-linked blocks one at a time.

    Owns block numbering, previous-hash linking, the data hash, and default
    timestamps, so tests and the generator only describe transactions.
    """

    def __init__(self, channel_id="mychannel", start_micros=GENESIS_TIME):
        self.channel_id = channel_id
        self.start_micros = start_micros
        self._next_number = 0
        self._prev_hash = GENESIS_PREVIOUS_HASH
        self._tx_counter = 0

    @property
    def next_number(self):
        return self._next_number

    def commit_time_for(self, number):
        return self.start_micros + number * 2_000_000

    def next_tx_id(self):
        self._tx_counter += 1
        return f"tx{self._tx_counter:08d}"

    def tx(self, writes=(), *, reads=(), tx_id=None, creator=None, endorsers=(),
           chaincode_name="asset", function="invoke", args=None, timestamp=None):
        """ENDORSER transaction; writes are (key, value) pairs, value None = delete."""
        number = self._next_number
        write_set = tuple(
            WriteItem(key=k, is_delete=v is None, value=v) for k, v in writes)
        read_set = tuple(
            ReadItem(key=k, version=StateVersion(b, t)) for k, (b, t) in reads)
        if timestamp is None:
            timestamp = self.commit_time_for(number) - 1_500_000
        return RawTransaction(
            tx_id=tx_id or self.next_tx_id(),
            channel_id=self.channel_id,
            timestamp=timestamp,
            tx_type=TX_ENDORSER,
            creator=creator or Identity("Org1MSP", "user1@org1.example.com"),
            chaincode_name=chaincode_name,
            function=function,
            args=tuple(args) if args is not None else tuple(k for k, _ in writes),
            endorsers=tuple(endorsers),
            read_set=read_set,
            write_set=write_set,
        )

    def genesis(self):
        """Block 0: a single CONFIG transaction."""
        config_tx = RawTransaction(
            tx_id=f"config-{self.channel_id}",
            channel_id=self.channel_id,
            timestamp=self.start_micros,
            tx_type=TX_CONFIG,
            creator=Identity("OrdererMSP", "orderer@example.com"),
            chaincode_name="",
            function="",
        )
        return self.build([config_tx])

    def build(self, txs, codes=None, commit_time=None) -> LedgerBlock:
        """Seal the next block from an ordered transaction list."""
        number = self._next_number
        if codes is None:
            codes = (VALID,) * len(txs)
        data_hash = hashlib.sha256(
            "|".join(tx.tx_id for tx in txs).encode("utf-8")).hexdigest()
        block = LedgerBlock(
            header=BlockHeader(number=number, previous_hash=self._prev_hash,
                               data_hash=data_hash),
            transactions=tuple(txs),
            metadata=BlockMetadata(
                commit_time=commit_time if commit_time is not None
                else self.commit_time_for(number),
                validation_codes=tuple(codes),
            ),
        )
        validate_block(block)
        self._prev_hash = block_hash(block)
        self._next_number += 1
        return block


class _WorldModel:
    """Generator-side view of live keys, kept deterministic for removal."""

    def __init__(self):
        self.order = []  # live keys, stable order with swap-remove
        self.index = {}  # key -> position in order
        self.info = {}  # key -> (shape_index, StateVersion)

    def __len__(self):
        return len(self.order)

    def add(self, key, shape_idx, version):
        if key not in self.index:
            self.index[key] = len(self.order)
            self.order.append(key)
        self.info[key] = (shape_idx, version)

    def remove(self, key):
        pos = self.index.pop(key)
        last = self.order.pop()
        if last != key:
            self.order[pos] = last
            self.index[last] = pos
        del self.info[key]

    def pick(self, rng):
        return self.order[rng.randrange(len(self.order))]


def generate(config: GenConfig):
    """Yield the blocks of a synthetic ledger, genesis first."""
    config.validate()
    rng = random.Random(config.seed)
    builder = LedgerBuilder(channel_id=config.channel_id)
    world = _WorldModel()
    key_counter = 0
    weights = list(config.schema_mix)

    yield builder.genesis()

    for _ in range(1, config.block_count):
        number = builder.next_number
        tpb = config.txs_per_block
        tx_count = tpb if isinstance(tpb, int) else rng.randint(tpb[0], tpb[1])
        txs = []
        codes = []
        for tx_num in range(tx_count):
            is_valid = rng.random() >= config.invalid_ratio
            if is_valid:
                code = VALID
            else:
                code = MVCC_READ_CONFLICT if rng.random() < 0.8 else OTHER_INVALID
            write_count = 2 if rng.random() < 0.15 else 1
            version = StateVersion(number, tx_num)
            writes = []
            reads = []
            read_keys = set()
            ops = []
            for _pos in range(write_count):
                r = rng.random()
                if r < config.delete_ratio and len(world):
                    op = "delete"
                elif r < config.delete_ratio + config.update_ratio and len(world):
                    op = "update"
                else:
                    op = "create"
                if op == "create":
                    key_counter += 1
                    key = f"st{key_counter:07d}"
                    shape_idx = rng.choices(range(len(SHAPES)), weights=weights)[0]
                    value = make_value(SHAPES[shape_idx], rng)
                    writes.append(WriteItem(key=key, is_delete=False, value=value))
                    if is_valid:
                        world.add(key, shape_idx, version)
                else:
                    key = world.pick(rng)
                    shape_idx, prior = world.info[key]
                    # A key first written by this same transaction has no
                    # prior committed version to read.
                    if key not in read_keys and prior != version:
                        reads.append(ReadItem(key=key, version=prior))
                        read_keys.add(key)
                    if op == "delete":
                        writes.append(WriteItem(key=key, is_delete=True))
                        if is_valid:
                            world.remove(key)
                    else:
                        value = make_value(SHAPES[shape_idx], rng)
                        writes.append(
                            WriteItem(key=key, is_delete=False, value=value))
                        if is_valid:
                            world.add(key, shape_idx, version)
                ops.append((op, key, shape_idx))
            first_op, _, first_shape = ops[0]
            function = {"create": "createAsset", "update": "updateAsset",
                        "delete": "deleteAsset"}[first_op]
            chaincode = f"asset_{SHAPES[first_shape].name.lower()}"
            org = rng.randrange(config.org_count) + 1
            creator = Identity(f"Org{org}MSP",
                               f"user{rng.randrange(5)}@org{org}.example.com")
            endorser_orgs = rng.sample(range(config.org_count),
                                       rng.randint(1, min(3, config.org_count)))
            endorsers = [Identity(f"Org{o + 1}MSP",
                                  f"peer0@org{o + 1}.example.com")
                         for o in endorser_orgs]
            if rng.random() < 0.1:
                endorsers.append(endorsers[0])
            tx_id = (f"tx{number:05d}{tx_num:03d}"
                     f"{rng.getrandbits(32):08x}")
            txs.append(builder.tx(
                [(w.key, w.value) for w in writes],
                reads=[(r.key, (r.version.block_num, r.version.tx_num))
                       for r in reads],
                tx_id=tx_id,
                creator=creator,
                endorsers=endorsers,
                chaincode_name=chaincode,
                function=function,
                args=[w.key for w in writes],
                timestamp=builder.commit_time_for(number) - 1_500_000 + tx_num * 1000,
            ))
            codes.append(code)
        yield builder.build(txs, codes=codes)


def write_ledger_file(blocks, path) -> int:
    """Write blocks as JSON Lines; returns the number of blocks written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for block in blocks:
            fh.write(block_to_json(block))
            fh.write("\n")
            count += 1
    return count


def generate_file(config: GenConfig, path) -> int:
    return write_ledger_file(generate(config), path)
