"""JSON-over-HTTP facade around :class:`Engine`.

Endpoints::

    POST /register  {"agent_id", "role", "predicates": [...], "intents": [...], "domains": [...]}
                    -> 201 {"session_id", "agent_id", "role", "granted", "expires_at"}
    POST /query     {"token", "query"} -> 200 {"outcome", "rows" | "reason" | "predicate"}
    POST /revoke    {"token"} -> 200 {"removed"}
    GET  /audit     ?agent_id=..&event=.. -> 200 {"records": [...]}
    GET  /health    -> 200 {"status": "ok", counts...}

Errors are ``{"error": <code>, "message": <text>}`` with one status per code.
"""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, urlsplit

from kgauthz.audit import EVENTS, AuditRecord
from kgauthz.enforcement import AccessDenied, Allowed, EnforcementOutcome, SessionRevoked
from kgauthz.service.config import EngineConfig
from kgauthz.service.engine import Engine, UnknownToken
from kgauthz.session import AgentContext, AgentDescriptor, DuplicateAgent, EmptyGrant, UnknownRole
from kgauthz.terms import iri

logger = logging.getLogger(__name__)

ERROR_STATUS = {
    "ParseError": HTTPStatus.BAD_REQUEST,
    "UnknownToken": HTTPStatus.UNAUTHORIZED,
    "EmptyGrant": HTTPStatus.FORBIDDEN,
    "NotFound": HTTPStatus.NOT_FOUND,
    "MethodNotAllowed": HTTPStatus.METHOD_NOT_ALLOWED,
    "DuplicateAgent": HTTPStatus.CONFLICT,
    "UnknownRole": HTTPStatus.UNPROCESSABLE_ENTITY,
    "InternalError": HTTPStatus.INTERNAL_SERVER_ERROR,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.status = int(ERROR_STATUS[code])


def outcome_to_json(outcome: EnforcementOutcome) -> dict[str, Any]:
    if isinstance(outcome, Allowed):
        rows = [{var.name[1:]: term.n3() for var, term in row.items()} for row in outcome.rows]
        return {"outcome": outcome.kind, "rows": rows}
    if isinstance(outcome, SessionRevoked):
        return {"outcome": outcome.kind, "predicate": outcome.predicate.n3()}
    assert isinstance(outcome, AccessDenied)
    return {"outcome": outcome.kind, "reason": outcome.reason}


def record_to_json(record: AuditRecord) -> dict[str, Any]:
    return {
        "sequence": record.sequence,
        "timestamp": record.iso_timestamp,
        "agent_id": record.agent_id,
        "event": record.event,
        "predicate": record.predicate.n3() if record.predicate is not None else None,
        "detail": record.detail,
    }


def _body(raw: bytes) -> dict[str, Any]:
    try:
        data = json.loads(raw.decode("utf-8") or "{}")
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError("ParseError", f"malformed JSON body: {exc}") from None
    if not isinstance(data, dict):
        raise ApiError("ParseError", "request body must be a JSON object")
    return data


def _field(data: dict, name: str, kind: type, default: Any = ...) -> Any:
    if name not in data:
        if default is ...:
            raise ApiError("ParseError", f"missing field {name!r}")
        return default
    value = data[name]
    if not isinstance(value, kind) or (kind is list and not all(isinstance(v, str) for v in value)):
        raise ApiError("ParseError", f"field {name!r} has the wrong type")
    return value


def descriptor_from_json(data: dict[str, Any]) -> AgentDescriptor:
    try:
        terms = lambda key: frozenset(iri(t) for t in _field(data, key, list, []))
        return AgentDescriptor(
            agent_id=_field(data, "agent_id", str),
            role=_field(data, "role", str),
            requested_predicates=frozenset(iri(t) for t in _field(data, "predicates", list)),
            context=AgentContext(terms("intents"), terms("domains")),
        )
    except ValueError as exc:
        raise ApiError("ParseError", f"invalid descriptor: {exc}") from None


class Api:
    """Transport-independent request dispatcher; the HTTP handler is a thin shell over it."""

    def __init__(self, engine: Engine):
        self.engine = engine

    def handle(self, method: str, target: str, body: bytes = b"") -> tuple[int, dict[str, Any]]:
        url = urlsplit(target)
        routes = {
            "/register": ("POST", self._register),
            "/query": ("POST", self._query),
            "/revoke": ("POST", self._revoke),
            "/audit": ("GET", self._audit),
            "/health": ("GET", self._health),
        }
        try:
            if url.path not in routes:
                raise ApiError("NotFound", f"no endpoint {url.path}")
            allowed, fn = routes[url.path]
            if method != allowed:
                raise ApiError("MethodNotAllowed", f"{url.path} accepts {allowed}")
            arg = parse_qs(url.query) if method == "GET" else _body(body)
            return fn(arg)
        except ApiError as exc:
            return exc.status, {"error": exc.code, "message": str(exc)}
        except (DuplicateAgent, UnknownRole, EmptyGrant, UnknownToken) as exc:
            return int(ERROR_STATUS[exc.code]), {"error": exc.code, "message": str(exc)}
        except Exception:
            logger.exception("unhandled error on %s %s", method, target)
            return 500, {"error": "InternalError", "message": "internal error"}

    def _register(self, data):
        session = self.engine.register(descriptor_from_json(data))
        return 201, {
            "session_id": session.session_id,
            "agent_id": session.agent_id,
            "role": session.agent.role,
            "granted": sorted(p.text for p in session.granted),
            "expires_at": session.expires_at,
        }

    def _query(self, data):
        token = _field(data, "token", str)
        text = _field(data, "query", str)
        return 200, outcome_to_json(self.engine.query(token, text))

    def _revoke(self, data):
        return 200, {"removed": self.engine.revoke(_field(data, "token", str))}

    def _audit(self, params):
        agent_id = params.get("agent_id", [None])[-1]
        event = params.get("event", [None])[-1]
        if event is not None and event not in EVENTS:
            raise ApiError("ParseError", f"unknown event kind {event!r}")
        records = self.engine.audit_records(agent_id, event)
        return 200, {"records": [record_to_json(r) for r in records]}

    def _health(self, _params):
        return 200, {"status": "ok", **self.engine.counts()}


def _handler_for(api: Api) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        server_version = "kgauthz/0.1"

        def _dispatch(self):
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            status, payload = api.handle(self.command, self.path, body)
            data = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        do_GET = do_POST = do_PUT = do_DELETE = _dispatch

        def log_message(self, format, *args):
            logger.debug("%s - " + format, self.address_string(), *args)

    return Handler


def make_server(engine: Engine, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _handler_for(Api(engine)))
    server.daemon_threads = True
    return server


def start_background(engine: Engine, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a daemon thread; returns ``(server, base_url)``."""
    server = make_server(engine, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}"


def serve(config: EngineConfig) -> None:
    engine = Engine.from_config(config)
    host, port = config.host_port
    server = make_server(engine, host, port)
    logger.info("listening on %s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
