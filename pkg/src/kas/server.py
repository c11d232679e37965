"""Read-only HTTP JSON API over a loaded index, plus static UI serving.

Endpoints:
    GET  /api/patterns                 registered template patterns
    GET  /api/classes/{class}/options  selectable bindings for the query builder
    POST /api/search                   query JSON -> results + trace
    GET  /api/docs/{id}                full document text

Handlers share one immutable application state, so concurrent requests are
safe and a restart reproduces every response.
"""

from __future__ import annotations

import json
import mimetypes
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .config import Config, Resources
from .errors import KasError, QueryError
from .index import AnnotationIndex
from .matcher import canonical_json, results_to_dict, search
from .queryproc import RULE_CLASSES, parse_query


@dataclass
class AppState:
    resources: Resources
    index: AnnotationIndex
    config: Config


def patterns_payload(state: AppState) -> dict:
    g = state.resources.grammar
    return {
        "patterns": [
            {"id": pid, "classes": list(g.patterns[pid].classes),
             "gaps": list(g.patterns[pid].gaps)}
            for pid in g.pattern_order
        ]
    }


def class_options_payload(state: AppState, cls: str) -> dict:
    g = state.resources.grammar
    model = state.resources.model
    if cls not in g.classes:
        raise KasError(f"unknown template class {cls!r}")
    source = g.binds.get(cls, "rule" if cls in RULE_CLASSES else "grammar")
    payload: dict = {"class": cls, "source": source}
    if source == "ontology":
        payload["concepts"] = [
            {"id": c.id, "kind": c.kind, "label": c.label, "parent": c.parent,
             "slang_count": len(c.slang_labels)}
            for c in sorted(model.concepts.values(), key=lambda c: c.id)
        ]
    elif cls == "DOSAGE":
        payload["operators"] = [
            {"symbol": sym, "kind": kind}
            for sym, kind in (
                (">", "gt"), ("<", "lt"), (">=", "ge"), ("<=", "le"), ("=", "eq"))
        ]
        payload["units"] = sorted(state.resources.tables.symbol_factors)
    elif cls == "INTERVAL":
        payload["subcategories"] = sorted(
            alt[0].name for alt in g.productions["BY_SPAN"] if alt[0].is_nt
        )
    elif cls == "FREQUENCY":
        payload["subcategories"] = sorted(
            alt[0].name for alt in g.productions["PER_TIME_INDICATOR"] if alt[0].is_nt
        )
    else:
        payload["subcategories"] = sorted(
            alt[0].name for alt in g.productions.get(cls, ()) if len(alt) == 1 and alt[0].is_nt
        )
    return payload


class _Handler(BaseHTTPRequestHandler):
    server_version = "kas"

    @property
    def state(self) -> AppState:
        return self.server.state  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, body: str, content_type: str = "application/json") -> None:
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", f"{content_type}; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _send_json(self, status: int, obj) -> None:
        self._send(status, canonical_json(obj))

    def _error(self, status: int, error: str, detail: str) -> None:
        self._send_json(status, {"error": error, "detail": detail})

    def do_GET(self):
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/patterns":
                self._send_json(200, patterns_payload(self.state))
            elif path.startswith("/api/classes/") and path.endswith("/options"):
                cls = path[len("/api/classes/") : -len("/options")]
                try:
                    self._send_json(200, class_options_payload(self.state, cls))
                except KasError as e:
                    self._error(404, "unknown_class", str(e))
            elif path.startswith("/api/docs/"):
                doc_id = path[len("/api/docs/") :]
                try:
                    doc = self.state.index.doc(doc_id)
                except KasError as e:
                    self._error(404, "unknown_document", str(e))
                    return
                self._send_json(200, {"id": doc_id, "source": doc["source"], "text": doc["text"]})
            else:
                self._serve_static(path)
        except Exception as e:  # noqa: BLE001 - boundary
            self._error(500, "internal", str(e))

    def do_POST(self):
        try:
            if self.path.split("?", 1)[0] != "/api/search":
                self._error(404, "not_found", self.path)
                return
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                obj = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                self._error(400, "invalid_json", str(e))
                return
            res = self.state.resources
            try:
                query = parse_query(res.grammar, res.model, res.tables, obj,
                                    self.state.config.range_ceiling)
                results, trace = search(self.state.index, res.tables, query,
                                        self.state.config.snippet_context)
            except (QueryError, KasError) as e:
                self._error(400, "invalid_query", str(e))
                return
            self._send(200, canonical_json(results_to_dict(results, trace)))
        except Exception as e:  # noqa: BLE001 - boundary
            self._error(500, "internal", str(e))

    def _serve_static(self, path: str) -> None:
        ui_dir = self.state.config.ui_dir
        if ui_dir is None:
            self._error(404, "not_found", path)
            return
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (Path(ui_dir) / rel).resolve()
        if not str(target).startswith(str(Path(ui_dir).resolve())) or not target.is_file():
            self._error(404, "not_found", path)
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send(200, target.read_text(encoding="utf-8"), ctype)


def make_server(state: AppState, host: str | None = None, port: int | None = None) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer(
        (host or state.config.host, state.config.port if port is None else port), _Handler
    )
    server.state = state  # type: ignore[attr-defined]
    return server


def serve_forever(state: AppState) -> None:
    server = make_server(state)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
