"""Deterministic JSON encoding and SHA-256 hashing.

Every party that hashes a document (issuer, chain, verifier) goes through
``canonicalize`` so that the same logical document always yields the same
bytes: keys sorted by code point, no whitespace, integers in shortest form,
UTF-8 output. Floats are refused outright instead of being normalised.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Any

DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)

_HEX64 = re.compile(r"[0-9a-f]{64}")


class CanonicalizationError(ValueError):
    """The document holds a value with no canonical encoding."""


def _check(value: Any, path: str) -> None:
    # bool is a subclass of int, so it is accepted by the int branch as well
    if value is None or isinstance(value, (str, int)):
        if isinstance(value, str):
            try:
                value.encode("utf-8")
            except UnicodeEncodeError as exc:
                raise CanonicalizationError(f"{path}: string is not valid unicode") from exc
        return
    if isinstance(value, float):
        raise CanonicalizationError(f"{path}: floating-point values are not supported")
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise CanonicalizationError(f"{path}: non-string key {key!r}")
            _check(key, f"{path}.<key>")
            _check(item, f"{path}.{key}")
        return
    raise CanonicalizationError(f"{path}: unsupported type {type(value).__name__}")


def canonicalize(document: Any) -> bytes:
    """Return the canonical UTF-8 bytes of ``document``.

    Raises :class:`CanonicalizationError` for floats, non-string keys or any
    type outside str/int/bool/None/list/dict.
    """
    _check(document, "$")
    return json.dumps(
        document,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def hash_bytes(data: bytes) -> bytes:
    """SHA-256 of ``data`` (32 bytes)."""
    return hashlib.sha256(data).digest()


def digest_hex(digest: bytes) -> str:
    if len(digest) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(digest)}")
    return digest.hex()


def digest_from_hex(text: str) -> bytes:
    """Parse a 64-character lowercase hex digest."""
    if not isinstance(text, str) or not _HEX64.fullmatch(text):
        raise ValueError(f"not a 64-char lowercase hex digest: {text!r}")
    return bytes.fromhex(text)
