"""Ledger data query platform.

Ingests blocks from a permissioned ledger, reorganizes them into a queryable
embedded store (blocks, transactions, per-key operation history, world state),
infers and clusters the JSON schemas of state values, and serves fine-grained
queries over all of it through a CLI and an HTTP API.
"""

__version__ = "0.1.0"
