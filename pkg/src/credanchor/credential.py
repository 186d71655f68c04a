"""Credential documents, issuer key pairs and detached signatures.

Signatures are Ed25519 (RFC 8032), which is deterministic: the same key and
message always give the same 64 signature bytes, so the hash of a signed
credential is reproducible.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from .canonical import canonicalize, hash_bytes

SIGNATURE_SIZE = 64
KEY_SIZE = 32


class CredentialError(ValueError):
    pass


class UnsignedCredentialError(CredentialError):
    """Hash requested for a credential that has not been signed yet."""


class AlreadySignedError(CredentialError):
    pass


class SignatureFormatError(CredentialError):
    """Signature or key is not well-formed hex of the right length."""


@dataclass(frozen=True)
class Credential:
    id: str
    issuer_id: str
    recipient_address: str
    title: str
    description: str
    issued_on: int
    batch_name: str
    expires: int | None = None
    signature: str | None = None

    def __post_init__(self) -> None:
        for name in ("id", "issuer_id", "recipient_address", "title", "description", "batch_name"):
            if not isinstance(getattr(self, name), str):
                raise CredentialError(f"{name} must be a string")
        if not self.id:
            raise CredentialError("credential id must be non-empty")
        if not self.recipient_address:
            raise CredentialError("recipient_address must be non-empty")
        if not _is_int(self.issued_on):
            raise CredentialError("issued_on must be integer seconds")
        if self.expires is not None:
            if not _is_int(self.expires):
                raise CredentialError("expires must be integer seconds")
            if self.expires <= self.issued_on:
                raise CredentialError("expires must be later than issued_on")
        if self.signature is not None and not isinstance(self.signature, str):
            raise CredentialError("signature must be a hex string")

    def to_dict(self, include_signature: bool = True) -> dict[str, Any]:
        doc = dataclasses.asdict(self)
        if not include_signature:
            doc.pop("signature")
        return {k: v for k, v in doc.items() if v is not None}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Credential:
        if not isinstance(doc, dict):
            raise CredentialError("credential must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise CredentialError(f"unknown credential fields: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise CredentialError(str(exc)) from exc

    def signing_bytes(self) -> bytes:
        return canonicalize(self.to_dict(include_signature=False))


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 key pair, both halves as lowercase hex of the raw 32 bytes."""

    public_key: str
    private_key: str = dataclasses.field(repr=False)

    @classmethod
    def generate(cls) -> KeyPair:
        return cls.from_private_hex(
            Ed25519PrivateKey.generate()
            .private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
            .hex()
        )

    @classmethod
    def from_private_hex(cls, private_hex: str) -> KeyPair:
        priv = Ed25519PrivateKey.from_private_bytes(_unhex(private_hex.strip(), KEY_SIZE, "private key"))
        pub = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return cls(public_key=pub.hex(), private_key=private_hex.strip().lower())

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(bytes.fromhex(self.private_key)).sign(message)


def _unhex(text: str, size: int, what: str) -> bytes:
    if not isinstance(text, str):
        raise SignatureFormatError(f"{what} must be a hex string")
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise SignatureFormatError(f"{what} is not valid hex") from exc
    if len(raw) != size or len(text) != 2 * size:
        raise SignatureFormatError(f"{what} must be {size} bytes")
    return raw


def verify_bytes(public_key: str, message: bytes, signature: str) -> bool:
    pub = Ed25519PublicKey.from_public_bytes(_unhex(public_key, KEY_SIZE, "public key"))
    try:
        pub.verify(_unhex(signature, SIGNATURE_SIZE, "signature"), message)
    except InvalidSignature:
        return False
    return True


def sign_credential(cred: Credential, key: KeyPair) -> Credential:
    if cred.signature is not None:
        raise AlreadySignedError(f"credential {cred.id} is already signed")
    return dataclasses.replace(cred, signature=key.sign(cred.signing_bytes()).hex())


def verify_signature(cred: Credential, public_key: str) -> bool:
    """True iff the credential's signature is valid under ``public_key``.

    A signature that does not even decode (bad hex, wrong length) raises
    :class:`SignatureFormatError` rather than returning False.
    """
    if cred.signature is None:
        raise UnsignedCredentialError(f"credential {cred.id} has no signature")
    return verify_bytes(public_key, cred.signing_bytes(), cred.signature)


def credential_hash(cred: Credential) -> bytes:
    """SHA-256 over the canonical encoding of the signed credential."""
    if cred.signature is None:
        raise UnsignedCredentialError(f"credential {cred.id} must be signed before hashing")
    return hash_bytes(canonicalize(cred.to_dict()))


def load_credential(path: str | Path) -> Credential:
    return Credential.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def dump_credential(cred: Credential, path: str | Path) -> None:
    Path(path).write_bytes(canonicalize(cred.to_dict()))
