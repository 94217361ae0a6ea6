"""HTTP surface: envelopes, status codes, and parity with the service layer."""

import json

import pytest
from fastapi.testclient import TestClient

from refiner.api import ApiConfig, create_app
from refiner.errors import InvalidConfig
from refiner.service import RefinerService, _plain, dumps_canonical

from oracles import history_by_key, load_ledger_file, replay_world_state


@pytest.fixture(scope="module")
def service(ingested):
    store, _ = ingested
    return RefinerService(store)


@pytest.fixture(scope="module")
def client(ingested):
    store, _ = ingested
    app = create_app(store)
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


@pytest.fixture(scope="module")
def blocks(ledger_file):
    return load_ledger_file(ledger_file)


def _data(resp, status=200):
    assert resp.status_code == status, resp.text
    body = resp.json()
    assert "data" in body
    return body["data"]


class TestEnvelope:
    def test_success_envelope(self, client):
        resp = client.get("/blocks")
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("application/json")
        body = resp.json()
        assert set(body) == {"data", "total_count"}

    def test_error_envelope(self, client):
        body = client.get("/blocks/99999").json()
        assert body["data"] is None
        assert body["error"]["code"] == "NOT_FOUND"
        assert "message" in body["error"]

    def test_bytes_are_exactly_the_canonical_encoding(self, client, service):
        resp = client.get("/stats")
        items = service.stats()
        want = dumps_canonical({"data": items}).encode("utf-8")
        assert resp.content == want

    def test_detail_responses_have_no_total(self, client):
        assert set(client.get("/blocks/0").json()) == {"data"}


class TestBlocks:
    def test_listing_matches_service(self, client, service):
        items, total = service.blocks(limit=1000)
        data = _data(client.get("/blocks", params={"limit": 1000}))
        assert data == _plain(items)
        assert client.get("/blocks").json()["total_count"] == total

    def test_range_aliases(self, client):
        data = _data(client.get("/blocks", params={"from": 3, "to": 6}))
        assert [b["number"] for b in data] == [3, 4, 5, 6]

    def test_inverted_range_is_invalid(self, client):
        body = client.get("/blocks", params={"from": 6, "to": 3}).json()
        assert body["error"]["code"] == "INVALID_REQUEST"

    def test_detail(self, client, service, blocks):
        data = _data(client.get("/blocks/4"))
        assert data == _plain(service.block(4))
        assert data["block"]["number"] == 4
        assert len(data["transactions"]) == len(blocks[4]["transactions"])
        assert data["block"]["commit_time"].endswith("Z")

    def test_non_numeric_height_is_invalid(self, client):
        body = client.get("/blocks/four").json()
        assert body["error"]["code"] == "INVALID_REQUEST"


class TestTransactions:
    def test_listing_matches_service(self, client, service, blocks):
        data = _data(client.get("/transactions",
                                params={"valid": "false", "limit": 1000}))
        total = sum(len(b["transactions"]) for b in blocks)
        assert len(data) == total

    def test_creator_filter(self, client, blocks):
        creator = blocks[1]["transactions"][0]["creator"]["msp_id"]
        data = _data(client.get("/transactions",
                                params={"creator": creator, "limit": 1000}))
        assert data
        assert all(t["creator_msp"] == creator for t in data)

    def test_time_window(self, client, blocks):
        lo = blocks[2]["transactions"][0]["timestamp"]
        hi = blocks[4]["transactions"][0]["timestamp"]
        data = _data(client.get("/transactions",
                                params={"time_from": lo, "time_to": hi,
                                        "limit": 1000}))
        assert data
        assert all(lo <= t["timestamp"] <= hi for t in data)

    def test_bad_timestamp_is_invalid(self, client):
        body = client.get("/transactions",
                          params={"time_from": "yesterday"}).json()
        assert body["error"]["code"] == "INVALID_REQUEST"

    def test_detail_carries_read_and_write_sets(self, client, blocks):
        raw = next(t for b in blocks for t in b["transactions"]
                   if t["read_set"] and t["write_set"])
        data = _data(client.get(f"/transactions/{raw['tx_id']}"))
        assert data["read_set"] == raw["read_set"]
        assert [w["key"] for w in data["write_set"]] == [
            i["key"] for i in raw["write_set"]]

    def test_unknown_tx_is_404(self, client):
        assert client.get("/transactions/nope").status_code == 404


class TestStates:
    def test_state_detail(self, client, blocks):
        world = replay_world_state(blocks)
        key = sorted(world)[0]
        data = _data(client.get(f"/states/{key}"))
        assert data["key"] == key
        assert data["value"] == world[key][0]
        assert data["schema_id"] >= 1

    def test_unknown_state_is_404(self, client):
        assert client.get("/states/no-such-key").status_code == 404

    def test_history_ordering_and_validity_toggle(self, client, blocks):
        oracle = history_by_key(blocks)
        key = next(k for k, rows in oracle.items()
                   if any(not r[5] for r in rows))
        valid_rows = _data(client.get(f"/states/{key}/history"))
        all_rows = _data(client.get(f"/states/{key}/history",
                                    params={"include_invalid": "true"}))
        assert [(r["block_num"], r["tx_num"]) for r in all_rows] == [
            (r[0], r[1]) for r in oracle[key]]
        assert len(valid_rows) < len(all_rows)
        assert all(r["is_valid"] for r in valid_rows)


class TestSchemas:
    def test_listing(self, client):
        data = _data(client.get("/schemas"))
        assert [s["schema_id"] for s in data] == [1, 2, 3, 4]
        profiles = {(s["level_count"], tuple(s["props_per_level"]))
                    for s in data}
        assert profiles == {(1, (14,)), (2, (11, 4)), (1, (24,)),
                            (2, (12, 15))}

    def test_detail_includes_paths_and_tree(self, client):
        data = _data(client.get("/schemas/1"))
        assert data["paths"] == sorted(data["paths"], key=lambda p: p["path"])
        assert data["tree"]["kind"] == "object"
        assert len(data["paths"]) >= 14

    def test_states_of_a_schema(self, client):
        listing = _data(client.get("/schemas"))
        sid = listing[0]["schema_id"]
        resp = client.get(f"/schemas/{sid}/states", params={"limit": 1000})
        data = _data(resp)
        assert resp.json()["total_count"] == listing[0]["member_count"]
        assert all(s["schema_id"] == sid for s in data)

    def test_unknown_schema_is_404(self, client):
        assert client.get("/schemas/99").status_code == 404
        assert client.get("/schemas/99/states").status_code == 404


class TestQuery:
    def test_query_matches_service(self, client, service):
        items, total = service.run_query("a02 > 0", limit=1000)
        resp = client.post("/query", json={"expr": "a02 > 0", "limit": 1000})
        body = resp.json()
        assert body["data"] == _plain(items)
        assert body["total_count"] == total > 0

    def test_history_scope(self, client):
        latest = client.post("/query", json={"expr": "a02 >= 0",
                                             "limit": 1000}).json()
        history = client.post("/query", json={"expr": "a02 >= 0",
                                              "scope": "history",
                                              "limit": 1000}).json()
        assert history["total_count"] > latest["total_count"]

    def test_syntax_error_carries_offset_and_expectation(self, client):
        resp = client.post("/query", json={"expr": "a="})
        assert resp.status_code == 400
        error = resp.json()["error"]
        assert error["code"] == "SYNTAX_ERROR"
        assert error["offset"] == 2
        assert error["expected"] == "literal value"

    def test_schema_restriction_on_history_is_invalid(self, client):
        resp = client.post("/query", json={"expr": "a01 = 1",
                                           "scope": "history", "schema_id": 1})
        assert resp.status_code == 400
        assert resp.json()["error"]["code"] == "INVALID_REQUEST"

    def test_missing_expr_is_invalid(self, client):
        assert client.post("/query", json={}).status_code == 400


class TestStatsAndSync:
    def test_stats_counts(self, client, blocks):
        data = _data(client.get("/stats"))
        assert data["block_count"] == len(blocks)
        assert data["tx_count"] == data["valid_tx_count"] + data["invalid_tx_count"]
        assert data["state_count"] == len(replay_world_state(blocks))
        assert data["schema_count"] == 4

    def test_sync_status_without_an_ingestor(self, client, blocks):
        data = _data(client.get("/sync/status"))
        assert data["following"] is False
        assert data["recorded_block_height"] == len(blocks) - 1
        assert data["source_height"] is None
        assert data["schema_progress"] > 0


class TestConfigAndStatic:
    def test_limits_clamp_to_the_configured_maximum(self, ingested):
        store, _ = ingested
        app = create_app(store, config=ApiConfig(page_limit_max=5))
        with TestClient(app) as small:
            data = _data(small.get("/blocks", params={"limit": 100}))
            assert len(data) == 5

    def test_listen_address_validation(self):
        with pytest.raises(InvalidConfig):
            ApiConfig(listen_address="nonsense").validate()
        with pytest.raises(InvalidConfig):
            create_app(None, config=ApiConfig())  # no store, no path

    def test_static_dir_served_at_root(self, ingested, tmp_path):
        store, _ = ingested
        static = tmp_path / "ui"
        static.mkdir()
        (static / "index.html").write_text("<!doctype html><title>ui</title>")
        app = create_app(store, static_dir=static)
        with TestClient(app) as c:
            resp = c.get("/")
            assert resp.status_code == 200
            assert "ui" in resp.text
            # API routes registered first still win.
            assert c.get("/stats").json()["data"]["block_count"] > 0

    def test_no_static_dir_means_no_root_page(self, client):
        assert client.get("/").status_code == 404
