import pytest

from refiner.genledger import GenConfig, generate_file
from refiner.pipeline import Ingestor
from refiner.sources import FileReplaySource
from refiner.store import Store


def make_store(path) -> Store:
    return Store(path)


def ingest_file(store, ledger_path, **kwargs) -> Ingestor:
    """One-shot ingest of a ledger file; returns the finished ingestor."""
    ingestor = Ingestor(store, FileReplaySource(ledger_path), **kwargs)
    ingestor.run_once()
    return ingestor


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "store")
    yield s
    s.close()


@pytest.fixture
def history_rows():
    """All history rows for one key, in commit order."""
    from refiner.store import history_entry_from_row

    def fetch(store, key):
        with store.snapshot() as snap:
            return [history_entry_from_row(r) for r in snap.cursor().execute(
                "SELECT key, block_num, tx_num, write_pos, tx_id, op, value,"
                " is_valid FROM history WHERE key=?"
                " ORDER BY block_num, tx_num, write_pos", (key,))]
    return fetch


@pytest.fixture(scope="session")
def ledger_file(tmp_path_factory):
    """A middling ledger exercised by most read-side tests."""
    path = tmp_path_factory.mktemp("ledger") / "main.ledger.jsonl"
    config = GenConfig(seed=7, block_count=30, txs_per_block=(3, 8),
                       update_ratio=0.3, delete_ratio=0.08, invalid_ratio=0.1)
    generate_file(config, path)
    return path


@pytest.fixture(scope="session")
def ingested(tmp_path_factory, ledger_file):
    """(store, ledger_path) with the session ledger fully ingested."""
    s = Store(tmp_path_factory.mktemp("ingested") / "store")
    ingest_file(s, ledger_file)
    yield s, ledger_file
    s.close()
