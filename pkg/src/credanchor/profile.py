"""Public issuer documents: the issuer profile and the revocation list.

Both are published by the issuer service and consumed by verifiers, so the
parsers here validate everything and raise :class:`SchemaError` on bad input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

_HEX_KEY = re.compile(r"[0-9a-f]{64}")


class SchemaError(ValueError):
    pass


def _require(doc: Any, key: str, kind: type | tuple[type, ...], optional: bool = False) -> Any:
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object")
    if key not in doc or doc[key] is None:
        if optional:
            return None
        raise SchemaError(f"missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) and kind is int:
        raise SchemaError(f"field {key!r} must be an integer")
    if not isinstance(value, kind):
        raise SchemaError(f"field {key!r} has wrong type {type(value).__name__}")
    return value


@dataclass(frozen=True)
class IssuerKey:
    key: str
    created: int
    expires: int | None = None
    revoked: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.key, str) or not _HEX_KEY.fullmatch(self.key):
            raise SchemaError(f"key must be 64 lowercase hex chars: {self.key!r}")
        for name in ("expires", "revoked"):
            bound = getattr(self, name)
            if bound is not None and bound <= self.created:
                raise SchemaError(f"key {self.key[:12]}: {name} must be later than created")

    def valid_at(self, t: int) -> bool:
        """created <= t, and t strictly before expiry/revocation."""
        if t < self.created:
            return False
        if self.expires is not None and t >= self.expires:
            return False
        if self.revoked is not None and t >= self.revoked:
            return False
        return True

    def to_dict(self) -> dict:
        doc = {"key": self.key, "created": self.created}
        if self.expires is not None:
            doc["expires"] = self.expires
        if self.revoked is not None:
            doc["revoked"] = self.revoked
        return doc

    @classmethod
    def from_dict(cls, doc: Any) -> IssuerKey:
        return cls(
            key=_require(doc, "key", str),
            created=_require(doc, "created", int),
            expires=_require(doc, "expires", int, optional=True),
            revoked=_require(doc, "revoked", int, optional=True),
        )


@dataclass(frozen=True)
class IssuerProfile:
    issuer_id: str
    name: str
    public_keys: tuple[IssuerKey, ...]
    revocation_list_url: str

    def __post_init__(self) -> None:
        if not self.public_keys:
            raise SchemaError("issuer profile must list at least one key")

    def keys_valid_at(self, t: int) -> list[IssuerKey]:
        return [k for k in self.public_keys if k.valid_at(t)]

    def to_dict(self) -> dict:
        return {
            "issuer_id": self.issuer_id,
            "name": self.name,
            "public_keys": [k.to_dict() for k in self.public_keys],
            "revocation_list_url": self.revocation_list_url,
        }

    @classmethod
    def from_dict(cls, doc: Any) -> IssuerProfile:
        keys = _require(doc, "public_keys", list)
        return cls(
            issuer_id=_require(doc, "issuer_id", str),
            name=_require(doc, "name", str),
            public_keys=tuple(IssuerKey.from_dict(k) for k in keys),
            revocation_list_url=_require(doc, "revocation_list_url", str),
        )


@dataclass(frozen=True)
class RevocationEntry:
    target: str
    reason: str
    revoked_at: int

    def to_dict(self) -> dict:
        return {"target": self.target, "reason": self.reason, "revoked_at": self.revoked_at}

    @classmethod
    def from_dict(cls, doc: Any) -> RevocationEntry:
        return cls(
            target=_require(doc, "target", str),
            reason=_require(doc, "reason", str),
            revoked_at=_require(doc, "revoked_at", int),
        )


@dataclass(frozen=True)
class RevocationList:
    """Revoked credential ids and batch names; a batch entry covers every member."""

    issuer_id: str
    entries: tuple[RevocationEntry, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        targets = [e.target for e in self.entries]
        if len(targets) != len(set(targets)):
            raise SchemaError("revocation list has duplicate targets")

    @property
    def targets(self) -> frozenset[str]:
        return frozenset(e.target for e in self.entries)

    def entry_for(self, credential_id: str, batch_name: str) -> RevocationEntry | None:
        for entry in self.entries:
            if entry.target in (credential_id, batch_name):
                return entry
        return None

    def is_revoked(self, credential_id: str, batch_name: str) -> bool:
        return self.entry_for(credential_id, batch_name) is not None

    def appended(self, entry: RevocationEntry) -> RevocationList:
        return RevocationList(self.issuer_id, self.entries + (entry,))

    def to_dict(self) -> dict:
        return {"issuer_id": self.issuer_id, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, doc: Any) -> RevocationList:
        entries = _require(doc, "entries", list)
        return cls(
            issuer_id=_require(doc, "issuer_id", str),
            entries=tuple(RevocationEntry.from_dict(e) for e in entries),
        )
