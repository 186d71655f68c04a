"""HTTP issuer service and the fetchers verifiers use to reach it.

Two GET endpoints, read fresh from the store on every request so a
revocation shows up without a restart:

    /issuer/profile.json
    /issuer/revocations.json
"""

from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit, urlunsplit

from .canonical import canonicalize
from .issuance import IssuerStore, StoreError
from .profile import IssuerProfile, RevocationList, SchemaError

log = logging.getLogger(__name__)

PROFILE_PATH = "/issuer/profile.json"
REVOCATIONS_PATH = "/issuer/revocations.json"


class FetchError(Exception):
    pass


class IssuerUnreachable(FetchError):
    pass


class IssuerHTTPError(FetchError):
    def __init__(self, url: str, status: int) -> None:
        super().__init__(f"{url} answered HTTP {status}")
        self.status = status


class IssuerSchemaError(FetchError):
    pass


def profile_url(base_url: str) -> str:
    return base_url.rstrip("/") + PROFILE_PATH


def revocations_url(base_url: str) -> str:
    return base_url.rstrip("/") + REVOCATIONS_PATH


class _Handler(BaseHTTPRequestHandler):
    store: IssuerStore

    def do_GET(self) -> None:  # noqa: N802
        path = urlsplit(self.path).path
        try:
            if path == PROFILE_PATH:
                body = canonicalize(self.store.profile.to_dict())
            elif path == REVOCATIONS_PATH:
                body = canonicalize(self.store.revocations().to_dict())
            else:
                self._send(404, b'{"error":"not found"}')
                return
        except StoreError as exc:
            log.error("store read failed: %s", exc)
            self._send(500, canonicalize({"error": "issuer store unavailable"}))
            return
        self._send(200, body)

    def _send(self, status: int, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)


@dataclass
class ServiceHandle:
    server: ThreadingHTTPServer
    thread: threading.Thread

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def shutdown(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)

    def __enter__(self) -> ServiceHandle:
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def make_server(store: IssuerStore, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    store.profile  # fail early on a corrupt store
    store.revocations()
    handler = type("IssuerHandler", (_Handler,), {"store": store})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve(store: IssuerStore, bind_address: str = "127.0.0.1:0") -> ServiceHandle:
    """Start the service on a background thread; port 0 picks a free port."""
    host, _, port = bind_address.rpartition(":")
    server = make_server(store, host or "127.0.0.1", int(port))
    thread = threading.Thread(target=server.serve_forever, args=(0.05,), name="issuer-service", daemon=True)
    thread.start()
    return ServiceHandle(server, thread)


def _get_json(url: str, timeout: float) -> object:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise IssuerHTTPError(url, exc.code) from None
    except (urllib.error.URLError, OSError) as exc:
        reason = getattr(exc, "reason", exc)
        raise IssuerUnreachable(f"{url} unreachable: {reason}") from None
    try:
        return json.loads(body)
    except (ValueError, UnicodeDecodeError) as exc:
        raise IssuerSchemaError(f"{url} did not return JSON: {exc}") from None


def fetch_profile(url: str, timeout: float = 5.0) -> IssuerProfile:
    doc = _get_json(url, timeout)
    try:
        return IssuerProfile.from_dict(doc)
    except SchemaError as exc:
        raise IssuerSchemaError(f"invalid issuer profile at {url}: {exc}") from None


def fetch_revocations(url: str, timeout: float = 5.0) -> RevocationList:
    doc = _get_json(url, timeout)
    try:
        return RevocationList.from_dict(doc)
    except SchemaError as exc:
        raise IssuerSchemaError(f"invalid revocation list at {url}: {exc}") from None


class HttpIssuerFetcher:
    """Fetch issuer documents over HTTP.

    ``base_override`` redirects every request to another scheme/host/port
    while keeping the path, e.g. to reach a locally running service when the
    receipt carries the issuer's public URL.
    """

    def __init__(self, base_override: str | None = None, timeout: float = 5.0) -> None:
        self.base_override = base_override
        self.timeout = timeout

    def _resolve(self, url: str) -> str:
        if not self.base_override:
            return url
        base = urlsplit(self.base_override)
        parts = urlsplit(url)
        return urlunsplit((base.scheme, base.netloc, parts.path, parts.query, ""))

    def fetch_profile(self, url: str) -> IssuerProfile:
        return fetch_profile(self._resolve(url), self.timeout)

    def fetch_revocations(self, url: str) -> RevocationList:
        return fetch_revocations(self._resolve(url), self.timeout)


class LocalIssuerFetcher:
    """Reads the issuer store directly; URLs are ignored."""

    def __init__(self, store: IssuerStore) -> None:
        self.store = store

    def fetch_profile(self, url: str) -> IssuerProfile:
        return self.store.profile

    def fetch_revocations(self, url: str) -> RevocationList:
        return self.store.revocations()
