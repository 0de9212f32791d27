"""Python bindings for the cqms query-management engine.

Every method goes through the same request router as the HTTP service and
the ``cqms`` command line tool, so results are the same JSON documents.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from . import _core

__all__ = ["Engine", "CqmsError", "canonicalize", "template", "features", "diff", "similarity"]
__version__ = "0.1.0"


class CqmsError(Exception):
    """An engine error: ``code`` names the kind, ``status`` is the HTTP status."""

    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.status = status


def _native(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _core.NativeError as e:
        code, message = e.args if len(e.args) == 2 else ("Internal", str(e))
        raise CqmsError(code, message, 500) from None


def _schema_text(schema: Optional[Mapping[str, Any]]) -> Optional[str]:
    return None if schema is None else json.dumps(schema)


def canonicalize(text: str) -> str:
    return _native(_core.canonicalize, text)


def template(text: str) -> str:
    return _native(_core.template, text)


def features(text: str, schema: Optional[Mapping[str, Any]] = None) -> dict:
    return json.loads(_native(_core.features, text, _schema_text(schema)))


def diff(before: str, after: str, schema: Optional[Mapping[str, Any]] = None) -> list:
    return json.loads(_native(_core.diff, before, after, _schema_text(schema)))


def similarity(a: str, b: str, schema: Optional[Mapping[str, Any]] = None) -> float:
    return _native(_core.similarity, a, b, _schema_text(schema))


Body = Union[None, str, Mapping[str, Any], Sequence[Any]]


class Engine:
    """An engine over one store. ``store=None`` keeps everything in memory.

    ``user=None`` acts as an administrator; otherwise the user and groups are
    resolved the way the HTTP service resolves its principal headers.
    """

    def __init__(self, store: Optional[str] = None, config: Optional[Mapping[str, Any]] = None,
                 user: Optional[str] = None, groups: Iterable[str] = ()):
        self._native = _native(_core.Engine, json.dumps(config) if config else "", store)
        self.user = user
        self.groups = set(groups)

    def as_user(self, user: Optional[str], groups: Iterable[str] = ()) -> "Engine":
        """A view of the same engine acting as another principal."""
        view = object.__new__(Engine)
        view._native = self._native
        view.user = user
        view.groups = set(groups)
        return view

    @property
    def seq(self) -> int:
        return self._native.seq

    def sync(self) -> None:
        self._native.sync()

    def request_raw(self, method: str, path: str, body: Body = None,
                    params: Optional[Mapping[str, Any]] = None) -> tuple:
        """Returns ``(status, body_text)`` exactly as the HTTP service would."""
        if body is None:
            text = ""
        elif isinstance(body, str):
            text = body
        else:
            text = json.dumps(body)
        p = {k: str(v) for k, v in (params or {}).items() if v is not None}
        return self._native.request(method, path, text, p, self.user, self.groups)

    def request(self, method: str, path: str, body: Body = None,
                params: Optional[Mapping[str, Any]] = None) -> Any:
        status, text = self.request_raw(method, path, body, params)
        doc = json.loads(text)
        if status >= 400:
            err = doc["error"]
            raise CqmsError(err["code"], err["message"], status)
        return doc

    # Convenience wrappers over the routes.

    def log(self, query: str, **record: Any) -> str:
        return self.request("POST", "/queries", {"query": query, **record})["qid"]

    def ingest(self, lines: Union[str, Iterable[Mapping[str, Any]]]) -> dict:
        if not isinstance(lines, str):
            lines = "\n".join(json.dumps(r) for r in lines)
        return self.request("POST", "/queries/batch", lines)

    def get(self, qid: Union[int, str]) -> dict:
        return self.request("GET", f"/queries/{qid}")

    def search(self, meta_query: Optional[Mapping[str, Any]] = None) -> list:
        return self.request("POST", "/search", meta_query or "")["results"]

    def suggest(self, partial: str, kind: str = "any", limit: int = 10) -> list:
        return self.request("GET", "/suggest", params={"partial": partial, "kind": kind, "limit": limit})["completions"]

    def corrections(self, query: str, signal: str = "unknown-identifier") -> list:
        return self.request("POST", "/corrections", {"query": query, "signal": signal})["corrections"]

    def recommend(self, recent: Sequence[Union[int, str]] = (), text: Optional[str] = None, k: int = 10) -> list:
        params = {"recent": ",".join(str(q) for q in recent), "text": text, "k": k}
        return self.request("GET", "/recommend", params=params)["results"]

    def sessions(self, user: str) -> list:
        return self.request("GET", f"/sessions/{user}")["sessions"]

    def annotate(self, qid: Union[int, str], text: str, span: Optional[Sequence[int]] = None) -> dict:
        body: dict = {"qid": str(qid), "text": text}
        if span is not None:
            body["span"] = list(span)
        return self.request("POST", "/annotations", body)["annotation"]

    def delete(self, qid: Union[int, str]) -> None:
        self.request("DELETE", f"/queries/{qid}")

    def set_visibility(self, qid: Union[int, str], visibility: str) -> None:
        self.request("PUT", f"/queries/{qid}/access", {"visibility": visibility})

    def add_schema(self, schema: Mapping[str, Any]) -> dict:
        return self.request("POST", "/schema", schema)

    def mine(self) -> dict:
        return self.request("POST", "/admin/mine")

    def maintain(self, data_changed_at: Optional[int] = None, relations: Optional[Iterable[str]] = None) -> dict:
        body: dict = {}
        if data_changed_at is not None:
            body["data_changed_at"] = data_changed_at
        if relations is not None:
            body["relations"] = list(relations)
        return self.request("POST", "/admin/maintain", body)
