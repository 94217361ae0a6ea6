"""Refresh the explorer test fixtures from real API responses.

Builds two small stores — the four-shape generated ledger and a
hand-planted employee roster — serves each through the regular app, and
saves selected response bodies byte-for-byte under tests/fixtures/.  Run
from the repository root after any change to the wire format:

    python frontend/scripts/capture_fixtures.py
"""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from refiner.api import create_app
from refiner.genledger import GenConfig, generate_file
from refiner.parser import parse_and_commit
from refiner.pipeline import Ingestor
from refiner.sources import FileReplaySource
from refiner.store import Store

REPO = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO / "tests"))

from test_parser import _block, _genesis, _put, _tx  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def save(name, resp):
    (FIXTURES / name).write_bytes(resp.content)
    print(f"  {name}: {resp.status_code}, {len(resp.content)} bytes")


def build_shapes_store(workdir):
    ledger = workdir / "ledger.jsonl"
    generate_file(GenConfig(seed=13, block_count=60, txs_per_block=(3, 6)),
                  ledger)
    store = Store(workdir / "shapes")
    Ingestor(store, FileReplaySource(ledger)).run_once()
    return store


def build_employees_store(workdir):
    store = Store(workdir / "employees")
    others = ["Davide", "david", "DAVID", "Dav", "Mary", "John"]
    planted = (7, 41, 88)
    txs = []
    for i in range(100):
        name = "David" if i in planted else others[i % len(others)]
        value = {"EmployeeInfo": {
                     "EmployeeElement": {"Name": name, "Age": 20 + i % 40},
                     "Department": f"dept{i % 5}"},
                 "Active": i % 2 == 0}
        txs.append(_tx(f"emp-tx{i:03d}",
                       writes=(_put(f"emp{i:03d}", json.dumps(value)),)))
    parse_and_commit(_genesis(), store)
    parse_and_commit(_block(1, txs), store)
    return store


def pick_history_key(client):
    """A key whose history includes an invalid attempt, found over HTTP."""
    fallback = None
    fallback_len = 0
    states = client.get("/schemas/1/states", params={"limit": 200}).json()
    for row in states["data"]:
        full = client.get(f"/states/{row['key']}/history",
                          params={"include_invalid": "true"}).json()["data"]
        if len(full) > fallback_len:
            fallback, fallback_len = row["key"], len(full)
        if len(full) >= 3 and any(not e["is_valid"] for e in full):
            return row["key"]
    return fallback


def capture_shapes(client):
    save("schemas.json", client.get("/schemas"))
    save("schema_detail.json", client.get("/schemas/1"))
    save("schema_states.json",
         client.get("/schemas/1/states", params={"limit": 25}))
    save("blocks.json", client.get("/blocks", params={"limit": 25}))
    block = client.get("/blocks/3")
    save("block_detail.json", block)
    tx_id = block.json()["data"]["transactions"][0]["tx_id"]
    save("tx_detail.json", client.get(f"/transactions/{tx_id}"))
    key = pick_history_key(client)
    print(f"  (history key: {key})")
    save("state.json", client.get(f"/states/{key}"))
    save("history.json",
         client.get(f"/states/{key}/history",
                    params={"include_invalid": "true"}))
    save("history_valid.json", client.get(f"/states/{key}/history"))
    save("stats.json", client.get("/stats"))
    save("sync_status.json", client.get("/sync/status"))
    save("error_syntax.json",
         client.post("/query", json={"expr": 'EmployeeInfo.Name= '}))
    save("error_not_found.json", client.get("/blocks/99999"))


def capture_employees(client):
    save("query_david.json",
         client.post("/query",
                     json={"expr": 'EmployeeInfo.EmployeeElement.Name="David"',
                           "offset": 0, "limit": 25}))


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        shapes = build_shapes_store(workdir)
        try:
            print("shapes store:")
            with TestClient(create_app(shapes)) as client:
                capture_shapes(client)
        finally:
            shapes.close()
        employees = build_employees_store(workdir)
        try:
            print("employees store:")
            with TestClient(create_app(employees)) as client:
                capture_employees(client)
        finally:
            employees.close()


if __name__ == "__main__":
    main()
