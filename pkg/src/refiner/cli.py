"""Command-line frontend over the same engine the API serves.

Exit codes: 0 success, 1 user error (bad flags, query syntax), 2 data or
store error. All data goes to stdout; ``--format json`` emits exactly the
API's data payloads through the shared canonical serializer.
"""

import signal
import sys
import threading

import click

from .api import ApiConfig, serve as api_serve
from .bench import run_bench
from .errors import (
    InvalidConfig,
    InvalidFilter,
    InvalidQuery,
    QuerySyntaxError,
    RefinerError,
)
from .genledger import GenConfig, config_summary, generate_file, load_gen_config
from .pipeline import Ingestor
from .service import RefinerService, dumps_canonical
from .sources import FileReplaySource
from .store import Store

_USER_ERRORS = (QuerySyntaxError, InvalidFilter, InvalidQuery, InvalidConfig)


def common_options(fn):
    fn = click.option("--db", envvar="REFINER_DB", default=None,
                      help="Store directory (or set REFINER_DB).")(fn)
    fn = click.option("--format", "fmt",
                      type=click.Choice(["json", "table"]), default="table",
                      help="Output style; json matches the API payloads.")(fn)
    return fn


def _open_store(db) -> Store:
    if not db:
        raise click.UsageError("no store given: pass --db or set REFINER_DB")
    return Store(db)


def _emit(fmt, payload, table_fn):
    if fmt == "json":
        click.echo(dumps_canonical(payload))
    else:
        table_fn(payload)


def _kv_lines(pairs):
    width = max((len(str(k)) for k, _ in pairs), default=0)
    for k, v in pairs:
        click.echo(f"{str(k):<{width}}  {v}")


def _table(headers, rows):
    rows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip())
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())


def _trunc(text, limit=60):
    if text is None:
        return ""
    return text if len(text) <= limit else text[:limit - 1] + "…"


@click.group()
def cli():
    """Ledger data refinement: sync, reorganize, and query a ledger."""


# -- generate ----------------------------------------------------------------

def _parse_txs_per_block(text):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return int(lo), int(hi)
    return int(text)


@cli.command()
@click.option("--config", "config_path", default=None,
              help="TOML file with generator settings (flags override).")
@click.option("--seed", type=int, default=None)
@click.option("--blocks", type=int, default=None,
              help="Total block count including genesis.")
@click.option("--txs-per-block", default=None,
              help="Fixed count, or lo:hi for a random range.")
@click.option("--schema-mix", default=None,
              help="Four comma-separated weights for shapes A,B,C,D.")
@click.option("--update-ratio", type=float, default=None)
@click.option("--delete-ratio", type=float, default=None)
@click.option("--invalid-ratio", type=float, default=None)
@click.option("--org-count", type=int, default=None)
@click.option("--channel", default=None)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Ledger file to write (JSON Lines).")
@common_options
def generate(config_path, seed, blocks, txs_per_block, schema_mix,
             update_ratio, delete_ratio, invalid_ratio, org_count, channel,
             out, db, fmt):
    """Write a deterministic synthetic ledger file."""
    config = load_gen_config(config_path) if config_path else GenConfig()
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if blocks is not None:
        overrides["block_count"] = blocks
    if txs_per_block is not None:
        overrides["txs_per_block"] = _parse_txs_per_block(txs_per_block)
    if schema_mix is not None:
        overrides["schema_mix"] = tuple(float(w) for w in schema_mix.split(","))
    if update_ratio is not None:
        overrides["update_ratio"] = update_ratio
    if delete_ratio is not None:
        overrides["delete_ratio"] = delete_ratio
    if invalid_ratio is not None:
        overrides["invalid_ratio"] = invalid_ratio
    if org_count is not None:
        overrides["org_count"] = org_count
    if channel is not None:
        overrides["channel_id"] = channel
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    count = generate_file(config, out)
    summary = dict(config_summary(config))
    summary["blocks_written"] = count
    summary["path"] = out
    _emit(fmt, summary, lambda p: _kv_lines(sorted(p.items())))


# -- ingest ------------------------------------------------------------------

@cli.command()
@click.option("--source", required=True, type=click.Path(exists=True,
                                                         dir_okay=False),
              help="Ledger file (JSON Lines) to sync from.")
@click.option("--follow", is_flag=True,
              help="Keep polling the file for appended blocks until Ctrl-C.")
@click.option("--poll-interval", type=float, default=2.0, show_default=True)
@common_options
def ingest(source, follow, poll_interval, db, fmt):
    """Sync blocks into the store and build all derived tables."""
    store = _open_store(db)
    try:
        ingestor = Ingestor(store, FileReplaySource(source),
                            poll_interval=poll_interval)
        if follow:
            ingestor.start_follow()
            stop = threading.Event()
            signal.signal(signal.SIGINT, lambda *a: stop.set())
            signal.signal(signal.SIGTERM, lambda *a: stop.set())
            while not stop.wait(0.2):
                pass
            report = ingestor.stop()
        else:
            report = ingestor.run_once()
        _emit(fmt, dict(report), lambda p: _kv_lines(sorted(p.items())))
    finally:
        store.close()


# -- serve -------------------------------------------------------------------

@cli.command()
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              help="host:port to bind.")
@click.option("--source", default=None, type=click.Path(dir_okay=False),
              help="Also ingest from this ledger file while serving.")
@click.option("--poll-interval", type=float, default=2.0, show_default=True)
@click.option("--static", "static_dir", default=None,
              type=click.Path(file_okay=False),
              help="Directory with the browser UI build to serve at /.")
@click.option("--cors", default="*",
              help="Comma-separated allowed origins (empty disables CORS).")
@common_options
def serve(listen, source, poll_interval, static_dir, cors, db, fmt):
    """Run the HTTP API (and optionally background ingest) until stopped."""
    store = _open_store(db)
    ingestor = None
    try:
        if source:
            ingestor = Ingestor(store, FileReplaySource(source),
                                poll_interval=poll_interval)
            ingestor.start_follow()
        origins = tuple(o for o in cors.split(",") if o) if cors else ()
        api_serve(ApiConfig(listen_address=listen,
                            cors_allowed_origins=origins),
                  store=store, ingestor=ingestor, static_dir=static_dir)
    finally:
        if ingestor is not None and ingestor.following:
            ingestor.stop()
        store.close()


# -- read commands -----------------------------------------------------------

@cli.command()
@click.argument("number", type=int, required=False)
@click.option("--from", "number_from", type=int, default=None)
@click.option("--to", "number_to", type=int, default=None)
@click.option("--offset", type=int, default=0)
@click.option("--limit", type=int, default=50, show_default=True)
@common_options
def blocks(number, number_from, number_to, offset, limit, db, fmt):
    """List blocks, or show one block with its transactions."""
    store = _open_store(db)
    try:
        service = RefinerService(store)
        if number is not None:
            detail = service.block(number)
            def show(p):
                _kv_lines(sorted(p.block.model_dump().items()))
                click.echo()
                _table(["tx_num", "tx_id", "type", "valid", "function"],
                       [[t.tx_num, t.tx_id, t.tx_type, t.is_valid, t.function]
                        for t in p.transactions])
            _emit(fmt, detail, show)
        else:
            items, total = service.blocks(number_from, number_to, offset, limit)
            def show_list(payload):
                _table(["number", "txs", "commit_time", "block_hash"],
                       [[b.number, b.tx_count, b.commit_time, b.block_hash]
                        for b in payload])
                click.echo(f"total: {total}", err=True)
            _emit(fmt, items, show_list)
    finally:
        store.close()


@cli.command()
@click.argument("tx_id")
@common_options
def tx(tx_id, db, fmt):
    """Show one transaction with its read and write sets."""
    store = _open_store(db)
    try:
        detail = RefinerService(store).transaction(tx_id)

        def show(p):
            d = p.model_dump()
            reads = d.pop("read_set")
            writes = d.pop("write_set")
            _kv_lines(sorted(d.items()))
            if reads:
                click.echo()
                _table(["read key", "version"],
                       [[r["key"],
                         f"{r['version']['block_num']}.{r['version']['tx_num']}"]
                        for r in reads])
            if writes:
                click.echo()
                _table(["write key", "op", "value"],
                       [[w["key"], w["op"], _trunc(w["value"])]
                        for w in writes])

        _emit(fmt, detail, show)
    finally:
        store.close()


@cli.command()
@click.argument("key")
@click.option("--include-invalid", is_flag=True,
              help="Also show writes from invalidated transactions.")
@common_options
def history(key, include_invalid, db, fmt):
    """Show every operation ever applied to a state key, oldest first."""
    store = _open_store(db)
    try:
        entries = RefinerService(store).state_history(key, include_invalid)

        def show(payload):
            _table(["block", "tx", "pos", "op", "valid", "value"],
                   [[e.block_num, e.tx_num, e.write_pos, e.op, e.is_valid,
                     _trunc(e.value)] for e in payload])

        _emit(fmt, entries, show)
    finally:
        store.close()


@cli.command()
@click.argument("expr")
@click.option("--scope", type=click.Choice(["latest", "history"]),
              default="latest", show_default=True)
@click.option("--schema-id", type=int, default=None,
              help="Restrict the scan to one schema's members.")
@click.option("--offset", type=int, default=0)
@click.option("--limit", type=int, default=50, show_default=True)
@common_options
def query(expr, scope, schema_id, offset, limit, db, fmt):
    """Run a condition query over state values.

    Example: 'EmployeeInfo.EmployeeElement.Name="David"'
    """
    store = _open_store(db)
    try:
        items, total = RefinerService(store).run_query(
            expr, scope=scope, schema_id=schema_id, offset=offset, limit=limit)

        def show(payload):
            _table(["key", "version", "schema", "value"],
                   [[r.key, f"{r.version.block_num}.{r.version.tx_num}",
                     "" if r.schema_id is None else r.schema_id,
                     _trunc(r.value)] for r in payload])
            click.echo(f"total: {total}", err=True)

        _emit(fmt, items, show)
    finally:
        store.close()


@cli.command()
@click.argument("schema_id", type=int, required=False)
@click.option("--states", "show_states", is_flag=True,
              help="List the states currently classified under SCHEMA_ID.")
@click.option("--offset", type=int, default=0)
@click.option("--limit", type=int, default=50, show_default=True)
@common_options
def schemas(schema_id, show_states, offset, limit, db, fmt):
    """Schema overview, one schema's detail, or one schema's members."""
    store = _open_store(db)
    try:
        service = RefinerService(store)
        if schema_id is None:
            items = service.schemas()
            _emit(fmt, items, lambda payload: _table(
                ["id", "levels", "props_per_level", "members", "updated_at"],
                [[s.schema_id, s.level_count,
                  ",".join(str(n) for n in s.props_per_level),
                  s.member_count, s.updated_at] for s in payload]))
        elif show_states:
            items, total = service.schema_states(schema_id, offset, limit)

            def show(payload):
                _table(["key", "version", "value"],
                       [[s.key, f"{s.version.block_num}.{s.version.tx_num}",
                         _trunc(s.value)] for s in payload])
                click.echo(f"total: {total}", err=True)

            _emit(fmt, items, show)
        else:
            detail = service.schema(schema_id)

            def show_detail(p):
                d = p.model_dump()
                paths = d.pop("paths")
                d.pop("tree")
                _kv_lines(sorted(d.items()))
                click.echo()
                _table(["path", "type"],
                       [[e["path"], e["type"]] for e in paths])

            _emit(fmt, detail, show_detail)
    finally:
        store.close()


@cli.command()
@common_options
def stats(db, fmt):
    """Ledger-wide totals and the schema overview."""
    store = _open_store(db)
    try:
        payload = RefinerService(store).stats()

        def show(p):
            d = p.model_dump()
            schemas_rows = d.pop("schemas")
            per_cc = d.pop("per_chaincode")
            per_creator = d.pop("per_creator")
            _kv_lines(sorted(d.items()))
            if schemas_rows:
                click.echo()
                _table(["schema", "levels", "props_per_level", "members"],
                       [[s["schema_id"], s["level_count"],
                         ",".join(str(n) for n in s["props_per_level"]),
                         s["member_count"]] for s in schemas_rows])
            if per_cc:
                click.echo()
                _table(["chaincode", "txs"],
                       [[r["name"], r["tx_count"]] for r in per_cc])
            if per_creator:
                click.echo()
                _table(["creator", "txs"],
                       [[r["name"], r["tx_count"]] for r in per_creator])

        _emit(fmt, payload, show)
    finally:
        store.close()


# -- bench -------------------------------------------------------------------

@cli.command()
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--blocks", type=int, default=401, show_default=True)
@click.option("--txs-per-block", default="10", show_default=True)
@click.option("--checkpoints", default="1000,2000,4000", show_default=True,
              help="Comma-separated cumulative tx counts to time.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the CSV here instead of stdout.")
@click.option("--workdir", type=click.Path(file_okay=False), default=None,
              help="Keep the generated ledger and store here.")
@common_options
def bench(seed, blocks, txs_per_block, checkpoints, out, workdir, db, fmt):
    """Time both ingest pipelines over a freshly generated ledger."""
    config = GenConfig(seed=seed, block_count=blocks,
                       txs_per_block=_parse_txs_per_block(txs_per_block))
    marks = [int(c) for c in checkpoints.split(",") if c]
    report = run_bench(config, marks, workdir=workdir)
    csv_text = report.to_csv()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    if fmt == "json":
        click.echo(dumps_canonical({
            "rows": [row.to_csv() for row in report.rows],
            "r_squared": report.r_squared,
            "windows_overlap": report.windows_overlap(),
            "total_txs": report.total_txs,
            "total_events": report.total_events,
            "wall_seconds": round(report.wall_seconds, 3),
            "config": report.config,
        }))
    else:
        if not out:
            click.echo(csv_text, nl=False)
        for name, r2 in sorted(report.r_squared.items()):
            click.echo(f"{name}: r_squared={r2:.4f}", err=True)
        click.echo(f"windows_overlap={report.windows_overlap()}", err=True)


# -- entry point -------------------------------------------------------------

def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except (click.Abort, KeyboardInterrupt):
        click.echo("aborted", err=True)
        return 1
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except RefinerError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def entrypoint():  # console script
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
