"""Independent reference implementations the tests compare against.

Everything here works from the raw JSON Lines ledger files (or plain
Python values), deliberately bypassing the package's own parsing and
storage code paths.
"""

import json
import random
import sqlite3
import string

from refiner.querylang import And, Cond, Not, Or

VALID_CODE = 0


def load_ledger_file(path):
    """Ledger file -> list of block dicts, straight json.loads per line."""
    blocks = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                blocks.append(json.loads(line))
    return blocks


# -- world state / history ---------------------------------------------------

def replay_world_state(blocks):
    """Sequential replay of valid write sets: key -> (value, (block, tx))."""
    state = {}
    for block in blocks:
        number = block["header"]["number"]
        codes = block["metadata"]["validation_codes"]
        for tx_num, tx in enumerate(block["transactions"]):
            if codes[tx_num] != VALID_CODE:
                continue
            for item in tx["write_set"]:
                if item["is_delete"]:
                    state.pop(item["key"], None)
                else:
                    state[item["key"]] = (item["value"], (number, tx_num))
    return state


def history_by_key(blocks):
    """key -> ordered list of (block, tx, pos, op, value, is_valid)."""
    out = {}
    for block in blocks:
        number = block["header"]["number"]
        codes = block["metadata"]["validation_codes"]
        for tx_num, tx in enumerate(block["transactions"]):
            valid = codes[tx_num] == VALID_CODE
            for pos, item in enumerate(tx["write_set"]):
                op = "DELETE" if item["is_delete"] else "WRITE"
                out.setdefault(item["key"], []).append(
                    (number, tx_num, pos, op, item.get("value"), valid))
    return out


def valid_mutation_sequence(blocks):
    """Global order of valid mutations: (key, value-or-None, (block, tx))."""
    seq = []
    for block in blocks:
        number = block["header"]["number"]
        codes = block["metadata"]["validation_codes"]
        for tx_num, tx in enumerate(block["transactions"]):
            if codes[tx_num] != VALID_CODE:
                continue
            for item in tx["write_set"]:
                value = None if item["is_delete"] else item["value"]
                seq.append((item["key"], value, (number, tx_num)))
    return seq


# -- transaction filtering ---------------------------------------------------

def flat_transactions(blocks):
    """Every transaction as a plain dict for linear-scan filtering."""
    rows = []
    for block in blocks:
        number = block["header"]["number"]
        codes = block["metadata"]["validation_codes"]
        for tx_num, tx in enumerate(block["transactions"]):
            rows.append({
                "tx_id": tx["tx_id"],
                "block_num": number,
                "tx_num": tx_num,
                "channel_id": tx["channel_id"],
                "timestamp": tx["timestamp"],
                "creator_msp": tx["creator"]["msp_id"],
                "chaincode_name": ("" if tx["tx_type"] == "CONFIG"
                                   else tx["chaincode_name"]),
                "function": ("" if tx["tx_type"] == "CONFIG"
                             else tx["function"]),
                "endorsers": {e["msp_id"] for e in tx["endorsers"]},
                "is_valid": codes[tx_num] == VALID_CODE,
            })
    return rows


def filter_scan(rows, *, block_range=None, time_range=None, tx_id=None,
                creator_msp=None, endorser_msp=None, chaincode_name=None,
                function=None, channel_id=None, valid_only=True,
                timestamp_micros=None):
    """Linear scan applying the same predicate semantics as the engine.

    ``time_range`` is in microseconds; ``timestamp_micros`` converts the
    row's RFC 3339 timestamp.
    """
    out = []
    for row in rows:
        if block_range is not None and not (
                block_range[0] <= row["block_num"] <= block_range[1]):
            continue
        if time_range is not None:
            micros = timestamp_micros(row["timestamp"])
            if not time_range[0] <= micros <= time_range[1]:
                continue
        if tx_id is not None and row["tx_id"] != tx_id:
            continue
        if creator_msp is not None and row["creator_msp"] != creator_msp:
            continue
        if endorser_msp is not None and endorser_msp not in row["endorsers"]:
            continue
        if chaincode_name is not None and row["chaincode_name"] != chaincode_name:
            continue
        if function is not None and row["function"] != function:
            continue
        if channel_id is not None and row["channel_id"] != channel_id:
            continue
        if valid_only and not row["is_valid"]:
            continue
        out.append(row)
    out.sort(key=lambda r: (r["block_num"], r["tx_num"]))
    return out


# -- query-language evaluation ----------------------------------------------

def _kind(v):
    if v is None:
        return "null"
    if v is True or v is False:
        return "bool"
    if type(v) in (int, float):
        return "num"
    if type(v) is str:
        return "str"
    if type(v) is list:
        return "list"
    return "obj"


def eval_oracle(expr, value):
    """Brute-force interpreter written directly from the documented rules."""
    if isinstance(expr, Not):
        return not eval_oracle(expr.expr, value)
    if isinstance(expr, And):
        return eval_oracle(expr.left, value) and eval_oracle(expr.right, value)
    if isinstance(expr, Or):
        return eval_oracle(expr.left, value) or eval_oracle(expr.right, value)
    assert isinstance(expr, Cond)
    # descend object fields only
    node = value
    for name in expr.path:
        if _kind(node) != "obj" or name not in node:
            return False
        node = node[name]
    lit = expr.literal
    op = expr.op
    if op == "CONTAINS":
        if _kind(node) == "str":
            return _kind(lit) == "str" and lit in node
        if _kind(node) == "list":
            for item in node:
                if _kind(item) in ("null", "bool", "num", "str") and \
                        _kind(item) == _kind(lit) and item == lit:
                    return True
            return False
        return False
    nk = _kind(node)
    if nk in ("list", "obj"):
        return False
    same = nk == _kind(lit) and node == lit
    if op == "=":
        return same
    if op == "!=":
        return not same
    # ordering
    if nk not in ("num", "str") or nk != _kind(lit):
        return False
    return {"<": node < lit, "<=": node <= lit,
            ">": node > lit, ">=": node >= lit}[op]


# -- random data -------------------------------------------------------------

_FIELD_NAMES = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta",
                "theta", "Name", "EmployeeInfo", "EmployeeElement", "count",
                "tags", "flag", "nested", "x", "y", "z"]


def random_scalar(rng):
    roll = rng.random()
    if roll < 0.30:
        return "".join(rng.choices(string.ascii_letters + string.digits,
                                   k=rng.randint(0, 8)))
    if roll < 0.60:
        return rng.choice([0, 1, -1, 5, 42, 3.5, -2.25, 1000])
    if roll < 0.75:
        return rng.random() < 0.5
    if roll < 0.85:
        return None
    return rng.randint(-10**6, 10**6)


def random_json(rng, depth=3):
    """Random JSON value skewed toward small objects."""
    if depth <= 0 or rng.random() < 0.35:
        return random_scalar(rng)
    if rng.random() < 0.70:
        return {name: random_json(rng, depth - 1)
                for name in rng.sample(_FIELD_NAMES, rng.randint(0, 5))}
    return [random_json(rng, depth - 1) for _ in range(rng.randint(0, 4))]


def json_paths(value):
    """All object-descent paths of a value (for building relevant conds)."""
    out = []

    def walk(node, prefix):
        if _kind(node) == "obj":
            for name, sub in node.items():
                walk(sub, prefix + (name,))
        if prefix:
            out.append(prefix)

    walk(value, ())
    return out or [("x",)]


def random_cond(rng, path_pool):
    if rng.random() < 0.7 and path_pool:
        path = tuple(rng.choice(path_pool))
    else:
        path = tuple(rng.choices(_FIELD_NAMES, k=rng.randint(1, 3)))
    op = rng.choice(["=", "!=", "<", "<=", ">", ">=", "CONTAINS"])
    if op in ("<", "<=", ">", ">="):
        literal = rng.choice(["m", "v500000", 0, 3.5, 500000, -5])
    else:
        literal = rng.choice(["David", "v", "", 0, 1, 42, True, False, None])
    return Cond(path, op, literal)


def random_expr(rng, path_pool, depth=2):
    if depth <= 0 or rng.random() < 0.45:
        return random_cond(rng, path_pool)
    roll = rng.random()
    if roll < 0.4:
        return And(random_expr(rng, path_pool, depth - 1),
                   random_expr(rng, path_pool, depth - 1))
    if roll < 0.8:
        return Or(random_expr(rng, path_pool, depth - 1),
                  random_expr(rng, path_pool, depth - 1))
    return Not(random_expr(rng, path_pool, depth - 1))


# -- schema path extraction (independent recoding of the documented rules) ---

def schema_paths_oracle(value_text):
    """(path, type) set for a value, or {("", "binary")} when not JSON."""
    if isinstance(value_text, (bytes, bytearray)):
        try:
            value_text = value_text.decode("utf-8")
        except UnicodeDecodeError:
            return {("", "binary")}
    try:
        value = json.loads(value_text)
    except (ValueError, TypeError):
        return {("", "binary")}

    def shape(node):
        """Nested plain representation: ('leaf', t) | ('obj', {..}) | ('arr', s)."""
        k = _kind(node)
        if k == "obj":
            return ("obj", {name: shape(sub) for name, sub in node.items()})
        if k == "list":
            if not node:
                return ("arr", ("leaf", "null"))
            return ("arr", merge([shape(item) for item in node]))
        return ("leaf", {"null": "null", "bool": "boolean", "num": "number",
                         "str": "string"}[k])

    def merge(shapes):
        tags = {s[0] for s in shapes}
        if len(tags) > 1:
            return ("leaf", "mixed")
        tag = tags.pop()
        if tag == "leaf":
            types = {s[1] for s in shapes}
            return ("leaf", types.pop() if len(types) == 1 else "mixed")
        if tag == "arr":
            return ("arr", merge([s[1] for s in shapes]))
        fields = {}
        for s in shapes:
            for name, sub in s[1].items():
                fields.setdefault(name, []).append(sub)
        return ("obj", {name: merge(subs) for name, subs in fields.items()})

    paths = set()

    def flatten(s, prefix):
        tag = s[0]
        if tag == "leaf":
            paths.add((prefix, s[1]))
        elif tag == "obj":
            for name, sub in s[1].items():
                flatten(sub, f"{prefix}.{name}" if prefix else name)
        else:
            flatten(s[1], f"{prefix}.[]" if prefix else "[]")

    flatten(shape(value), "")
    return paths


def random_schema_value(rng, depth=2):
    """Random JSON with field names drawn from a small pool (collisions likely)."""
    if depth <= 0 or rng.random() < 0.3:
        return random_scalar(rng)
    if rng.random() < 0.25:
        return [random_schema_value(rng, depth - 1)
                for _ in range(rng.randint(0, 3))]
    return {name: random_schema_value(rng, depth - 1)
            for name in rng.sample(_FIELD_NAMES[:8], rng.randint(0, 4))}


# -- store dumping (raw sqlite, for exact-equality comparisons) --------------

_DUMP_TABLES = ("meta", "blocks", "transactions", "tx_endorsers", "history",
                "world_state", "schemas", "schema_members")


def dump_store(db_file):
    """Every row of every table, sorted, straight from sqlite."""
    conn = sqlite3.connect(db_file)
    try:
        dump = {}
        for table in _DUMP_TABLES:
            rows = conn.execute(f"SELECT * FROM {table}").fetchall()
            dump[table] = sorted(rows, key=repr)
        return dump
    finally:
        conn.close()


def rng_for(name, index=0):
    """Deterministic per-test RNG so failures reproduce."""
    return random.Random(f"{name}:{index}")
