"""HTTP/JSON API over the query engine.

Every response is the fixed envelope ``{"data": ..., "total_count"?,
"error"?}`` serialized with the same canonical encoder the CLI uses. The
API is strictly read-only; ingest runs either in the same process (serve
with ingest enabled) or elsewhere against the same store directory.
"""

import os
from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import (
    BindFailure,
    InvalidConfig,
    InvalidFilter,
    InvalidQuery,
    NotFound,
    QuerySyntaxError,
    RefinerError,
)
from .model import parse_rfc3339
from .query import DEFAULT_PAGE_LIMIT, MAX_PAGE_LIMIT, TxFilter, Page
from .service import RefinerService, dumps_canonical
from .store import Store


@dataclass
class ApiConfig:
    listen_address: str = "127.0.0.1:8000"
    store_path: str = None
    cors_allowed_origins: tuple = ("*",)
    page_limit_max: int = MAX_PAGE_LIMIT

    def validate(self):
        if self.page_limit_max < 1:
            raise InvalidConfig(
                f"page_limit_max must be >= 1, got {self.page_limit_max}")
        host, _, port = self.listen_address.rpartition(":")
        if not host or not port.isdigit():
            raise InvalidConfig(
                f"listen_address must look like host:port,"
                f" got {self.listen_address!r}")

    @property
    def host(self):
        return self.listen_address.rpartition(":")[0]

    @property
    def port(self):
        return int(self.listen_address.rpartition(":")[2])


def _json_response(body, status_code=200):
    return Response(content=dumps_canonical(body), status_code=status_code,
                    media_type="application/json")


def _ok(data, total_count=None):
    body = {"data": data}
    if total_count is not None:
        body["total_count"] = total_count
    return _json_response(body)


def _err(status_code, code, message, **extra):
    error = {"code": code, "message": message}
    error.update(extra)
    return _json_response({"data": None, "error": error}, status_code)


class QueryRequest(BaseModel):
    expr: str
    scope: str = "latest"
    schema_id: int | None = None
    offset: int = 0
    limit: int | None = None


def create_app(store: Store = None, *, config: ApiConfig = None,
               ingestor=None, static_dir=None) -> FastAPI:
    """Build the application over an open store (or config.store_path)."""
    config = config or ApiConfig()
    config.validate()
    owns_store = store is None
    if owns_store:
        if not config.store_path:
            raise InvalidConfig("either an open store or store_path is required")
        store = Store(config.store_path)
    service = RefinerService(store, ingestor=ingestor)

    @asynccontextmanager
    async def lifespan(app):
        yield
        if owns_store:
            store.close()

    app = FastAPI(title="ledger refiner", docs_url=None, redoc_url=None,
                  openapi_url=None, lifespan=lifespan)
    app.state.service = service
    if config.cors_allowed_origins:
        app.add_middleware(CORSMiddleware,
                           allow_origins=list(config.cors_allowed_origins),
                           allow_methods=["*"], allow_headers=["*"])

    def _limit(limit):
        if limit is None:
            return DEFAULT_PAGE_LIMIT
        return min(limit, config.page_limit_max)

    # -- error translation --------------------------------------------------

    @app.exception_handler(QuerySyntaxError)
    def _syntax_error(request: Request, exc: QuerySyntaxError):
        return _err(400, "SYNTAX_ERROR", str(exc), offset=exc.offset,
                    expected=exc.expected)

    @app.exception_handler(InvalidFilter)
    @app.exception_handler(InvalidQuery)
    def _invalid(request: Request, exc):
        return _err(400, "INVALID_REQUEST", str(exc))

    @app.exception_handler(NotFound)
    def _not_found(request: Request, exc):
        return _err(404, "NOT_FOUND", str(exc))

    @app.exception_handler(RequestValidationError)
    def _validation(request: Request, exc):
        return _err(400, "INVALID_REQUEST", str(exc))

    @app.exception_handler(RefinerError)
    def _internal(request: Request, exc):
        return _err(500, "INTERNAL", str(exc))

    # -- endpoints ----------------------------------------------------------

    @app.get("/blocks")
    def blocks(number_from: int | None = Query(default=None, alias="from"),
               number_to: int | None = Query(default=None, alias="to"),
               offset: int = 0, limit: int | None = None):
        items, total = service.blocks(number_from, number_to, offset,
                                      _limit(limit))
        return _ok(items, total)

    @app.get("/blocks/{number}")
    def block(number: int):
        return _ok(service.block(number))

    @app.get("/transactions")
    def transactions(creator: str | None = None, endorser: str | None = None,
                     chaincode: str | None = None, function: str | None = None,
                     channel: str | None = None,
                     time_from: str | None = None, time_to: str | None = None,
                     valid: bool = True, offset: int = 0,
                     limit: int | None = None):
        time_range = None
        if time_from is not None or time_to is not None:
            try:
                lo = 0 if time_from is None else parse_rfc3339(time_from)
                hi = (2**62 if time_to is None else parse_rfc3339(time_to))
            except ValueError as exc:
                raise InvalidFilter(f"bad timestamp: {exc}")
            time_range = (lo, hi)
        flt = TxFilter(creator_msp=creator, endorser_msp=endorser,
                       chaincode_name=chaincode, function=function,
                       channel_id=channel, time_range=time_range,
                       valid_only=valid,
                       page=Page(offset=offset, limit=_limit(limit)))
        items, total = service.transactions(flt)
        return _ok(items, total)

    @app.get("/transactions/{tx_id}")
    def transaction(tx_id: str):
        return _ok(service.transaction(tx_id))

    @app.get("/states/{key:path}/history")
    def state_history(key: str, include_invalid: bool = False):
        entries = service.state_history(key, include_invalid)
        return _ok(entries, len(entries))

    @app.get("/states/{key:path}")
    def state(key: str):
        return _ok(service.state(key))

    @app.get("/schemas")
    def schemas():
        items = service.schemas()
        return _ok(items, len(items))

    @app.get("/schemas/{schema_id}/states")
    def schema_states(schema_id: int, offset: int = 0,
                      limit: int | None = None):
        items, total = service.schema_states(schema_id, offset, _limit(limit))
        return _ok(items, total)

    @app.get("/schemas/{schema_id}")
    def schema(schema_id: int):
        return _ok(service.schema(schema_id))

    @app.post("/query")
    def run_query(req: QueryRequest):
        items, total = service.run_query(req.expr, scope=req.scope,
                                         schema_id=req.schema_id,
                                         offset=req.offset,
                                         limit=_limit(req.limit))
        return _ok(items, total)

    @app.get("/stats")
    def stats():
        return _ok(service.stats())

    @app.get("/sync/status")
    def sync_status():
        return _ok(service.sync_status())

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app


def serve(config: ApiConfig, store: Store = None, ingestor=None,
          static_dir=None):  # pragma: no cover - exercised manually
    """Run the API server until interrupted."""
    import uvicorn

    app = create_app(store, config=config, ingestor=ingestor,
                     static_dir=static_dir)
    try:
        uvicorn.run(app, host=config.host or "127.0.0.1", port=config.port,
                    log_level="warning")
    except OSError as exc:
        raise BindFailure(f"cannot bind {config.listen_address}: {exc}") from exc
