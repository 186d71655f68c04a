"""Issuer-side workflow: invites, address binding, batch issuance, revocation.

The issuer store is a plain directory::

    profile.json              IssuerProfile (served publicly)
    settings.json             {"profile_url": ...}
    invites/<invite_id>.json  Invite files
    responses.json            {invite_id: recipient_address}
    batches.json              one record per anchored batch
    revocations.json          RevocationList (served publicly)
    receipts/<tx_id>/<credential_id>.receipt.json

Mutations take a per-store lock (thread lock + lock file), so several
processes may share a store.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
import threading
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterator

from filelock import FileLock

from .canonical import canonicalize, digest_from_hex, digest_hex
from .chain import ChainClient
from .credential import (
    Credential,
    CredentialError,
    KeyPair,
    credential_hash,
    sign_credential,
)
from .merkle import MerkleError, MerkleProof, build_tree, generate_proof
from .profile import IssuerProfile, RevocationEntry, RevocationList, SchemaError

log = logging.getLogger(__name__)


class IssuanceError(Exception):
    pass


class StoreError(IssuanceError):
    pass


class ReceiptFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Invite:
    invite_id: str
    issuer_id: str
    recipient_email: str
    message: str

    def to_dict(self) -> dict:
        return {
            "invite_id": self.invite_id,
            "issuer_id": self.issuer_id,
            "recipient_email": self.recipient_email,
            "message": self.message,
        }


@dataclass(frozen=True)
class IntroductionResponse:
    invite_id: str
    recipient_address: str


@dataclass(frozen=True)
class MerkleReceipt:
    credential: Credential
    target_hash: bytes
    proof: MerkleProof
    merkle_root: bytes
    tx_id: bytes
    issuer_profile_url: str

    def to_dict(self) -> dict:
        return {
            "credential": self.credential.to_dict(),
            "target_hash": digest_hex(self.target_hash),
            "proof": self.proof.to_dict(),
            "merkle_root": digest_hex(self.merkle_root),
            "tx_id": digest_hex(self.tx_id),
            "issuer_profile_url": self.issuer_profile_url,
        }

    @classmethod
    def from_dict(cls, doc: Any) -> MerkleReceipt:
        if not isinstance(doc, dict):
            raise ReceiptFormatError("receipt must be a JSON object")
        try:
            url = doc["issuer_profile_url"]
            if not isinstance(url, str):
                raise ReceiptFormatError("issuer_profile_url must be a string")
            return cls(
                credential=Credential.from_dict(doc["credential"]),
                target_hash=digest_from_hex(doc["target_hash"]),
                proof=MerkleProof.from_dict(doc["proof"]),
                merkle_root=digest_from_hex(doc["merkle_root"]),
                tx_id=digest_from_hex(doc["tx_id"]),
                issuer_profile_url=url,
            )
        except KeyError as exc:
            raise ReceiptFormatError(f"receipt is missing field {exc}") from exc
        except (CredentialError, MerkleError, ValueError, TypeError) as exc:
            raise ReceiptFormatError(str(exc)) from exc


def load_receipt(path: str | Path) -> MerkleReceipt:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ReceiptFormatError(f"receipt is not JSON: {exc}") from exc
    return MerkleReceipt.from_dict(doc)


def dump_receipt(receipt: MerkleReceipt, path: str | Path) -> None:
    Path(path).write_bytes(canonicalize(receipt.to_dict()))


def receipt_filename(credential_id: str) -> str:
    return credential_id.replace("/", "_") + ".receipt.json"


def _write_json(path: Path, doc: Any) -> None:
    # write-then-rename so readers never see a half-written document
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "wb") as fh:
        fh.write(canonicalize(doc))
    os.replace(tmp, path)


class IssuerStore:
    _thread_locks: dict[str, threading.RLock] = {}

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        if not (self.root / "profile.json").is_file():
            raise StoreError(f"{self.root} is not an issuer store (no profile.json)")
        key = str(self.root.resolve())
        self._thread_lock = self._thread_locks.setdefault(key, threading.RLock())
        self._file_lock = FileLock(str(self.root / ".lock"), thread_local=False)

    @classmethod
    def create(cls, root: str | Path, profile: IssuerProfile, profile_url: str) -> IssuerStore:
        root = Path(root)
        if (root / "profile.json").exists():
            raise StoreError(f"issuer store already exists at {root}")
        (root / "invites").mkdir(parents=True, exist_ok=True)
        (root / "receipts").mkdir(exist_ok=True)
        _write_json(root / "settings.json", {"profile_url": profile_url})
        _write_json(root / "responses.json", {})
        _write_json(root / "batches.json", [])
        _write_json(root / "revocations.json", RevocationList(profile.issuer_id).to_dict())
        _write_json(root / "profile.json", profile.to_dict())
        return cls(root)

    @contextmanager
    def locked(self) -> Iterator[None]:
        with self._thread_lock, self._file_lock:
            yield

    def _read(self, name: str) -> Any:
        try:
            return json.loads((self.root / name).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"cannot read {name}: {exc}") from exc

    @property
    def profile(self) -> IssuerProfile:
        try:
            return IssuerProfile.from_dict(self._read("profile.json"))
        except SchemaError as exc:
            raise StoreError(f"corrupt profile.json: {exc}") from exc

    def save_profile(self, profile: IssuerProfile) -> None:
        with self.locked():
            _write_json(self.root / "profile.json", profile.to_dict())

    @property
    def profile_url(self) -> str:
        return self._read("settings.json")["profile_url"]

    def revocations(self) -> RevocationList:
        try:
            return RevocationList.from_dict(self._read("revocations.json"))
        except SchemaError as exc:
            raise StoreError(f"corrupt revocations.json: {exc}") from exc

    def invites(self) -> list[Invite]:
        out = []
        for path in sorted((self.root / "invites").glob("*.json")):
            out.append(Invite(**json.loads(path.read_text(encoding="utf-8"))))
        return out

    def get_invite(self, invite_id: str) -> Invite:
        path = self.root / "invites" / f"{invite_id}.json"
        if not path.is_file():
            raise IssuanceError(f"unknown invite {invite_id!r}")
        return Invite(**json.loads(path.read_text(encoding="utf-8")))

    def responses(self) -> dict[str, str]:
        return self._read("responses.json")

    def address_for(self, invite_id: str) -> str:
        try:
            return self.responses()[invite_id]
        except KeyError:
            raise IssuanceError(f"invite {invite_id!r} has not been accepted") from None

    def batches(self) -> list[dict]:
        return self._read("batches.json")

    def receipts_dir(self, tx_id: bytes) -> Path:
        return self.root / "receipts" / tx_id.hex()

    def issued_ids(self) -> set[str]:
        return {cid for b in self.batches() for cid in b["credential_ids"]}

    def revoked_credential_ids(self) -> set[str]:
        """Every issued credential id covered by the revocation list."""
        targets = self.revocations().targets
        out = set()
        for batch in self.batches():
            for cid in batch["credential_ids"]:
                if cid in targets or batch["batch_name"] in targets:
                    out.add(cid)
        return out


def render_template(template: str, issuer_id: str, recipient_email: str) -> str:
    return template.replace("{{recipient_email}}", recipient_email).replace("{{issuer_id}}", issuer_id)


def create_invite(store: IssuerStore, issuer_id: str, recipient_email: str, template: str) -> Invite:
    if not template:
        raise IssuanceError("invite template must be non-empty")
    if issuer_id != store.profile.issuer_id:
        raise IssuanceError(f"store belongs to {store.profile.issuer_id!r}, not {issuer_id!r}")
    with store.locked():
        if any(inv.recipient_email == recipient_email for inv in store.invites()):
            raise IssuanceError(f"{recipient_email} has already been invited by {issuer_id}")
        invite = Invite(
            invite_id=uuid.uuid4().hex,
            issuer_id=issuer_id,
            recipient_email=recipient_email,
            message=render_template(template, issuer_id, recipient_email),
        )
        _write_json(store.root / "invites" / f"{invite.invite_id}.json", invite.to_dict())
    return invite


def accept_invite(store: IssuerStore, invite_id: str, recipient_address: str) -> IntroductionResponse:
    if not recipient_address or not recipient_address.strip():
        raise IssuanceError("recipient address must be non-empty")
    with store.locked():
        store.get_invite(invite_id)
        responses = store.responses()
        if invite_id in responses:
            raise IssuanceError(f"invite {invite_id} has already been answered")
        responses[invite_id] = recipient_address
        _write_json(store.root / "responses.json", responses)
    return IntroductionResponse(invite_id, recipient_address)


def issue_batch(
    credentials: list[Credential],
    key: KeyPair,
    batch_name: str,
    client: ChainClient,
    store: IssuerStore,
) -> list[MerkleReceipt]:
    """Sign, hash, tree, anchor once, and emit one receipt per credential.

    Receipts come back ordered by credential id (which is also leaf order).
    Nothing is written to the store unless the anchor was accepted.
    """
    if not credentials:
        raise IssuanceError("cannot issue an empty batch")
    if not batch_name:
        raise IssuanceError("batch name must be non-empty")
    ids = [c.id for c in credentials]
    if len(set(ids)) != len(ids):
        raise IssuanceError("duplicate credential ids in batch")
    profile = store.profile
    if key.public_key not in {k.key for k in profile.public_keys}:
        raise IssuanceError("signing key is not listed in the issuer profile")

    prepared = []
    for cred in credentials:
        if cred.issuer_id != profile.issuer_id:
            raise IssuanceError(f"credential {cred.id} names issuer {cred.issuer_id!r}")
        if cred.signature is not None:
            raise IssuanceError(f"credential {cred.id} is already signed")
        if cred.batch_name and cred.batch_name != batch_name:
            raise IssuanceError(f"credential {cred.id} belongs to batch {cred.batch_name!r}")
        prepared.append(replace(cred, batch_name=batch_name))

    signed = sorted((sign_credential(c, key) for c in prepared), key=lambda c: c.id)
    leaves = [credential_hash(c) for c in signed]
    tree = build_tree(leaves)

    try:
        tx_id = client.submit_anchor(tree.root, key.public_key)
    except Exception as exc:
        raise IssuanceError(f"anchoring failed, no receipts issued: {exc}") from exc

    profile_url = store.profile_url
    receipts = [
        MerkleReceipt(
            credential=cred,
            target_hash=leaf,
            proof=generate_proof(tree, i),
            merkle_root=tree.root,
            tx_id=tx_id,
            issuer_profile_url=profile_url,
        )
        for i, (cred, leaf) in enumerate(zip(signed, leaves))
    ]

    with store.locked():
        final = store.receipts_dir(tx_id)
        staging = Path(tempfile.mkdtemp(dir=store.root / "receipts", prefix=".staging-"))
        try:
            for r in receipts:
                dump_receipt(r, staging / receipt_filename(r.credential.id))
            os.replace(staging, final)
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise
        batches = store.batches()
        batches.append(
            {
                "batch_name": batch_name,
                "tx_id": tx_id.hex(),
                "merkle_root": tree.root.hex(),
                "credential_ids": [c.id for c in signed],
            }
        )
        _write_json(store.root / "batches.json", batches)
    log.info("issued batch %s: %d credentials, tx %s", batch_name, len(receipts), tx_id.hex())
    return receipts


def revoke(store: IssuerStore, target: str, reason: str, at: int) -> RevocationList:
    """Append a revocation for a credential id or a whole batch name.

    Revoking something already on the list logs a warning and leaves the
    list as it was.
    """
    with store.locked():
        batches = store.batches()
        known = {b["batch_name"] for b in batches} | {c for b in batches for c in b["credential_ids"]}
        if target not in known:
            raise IssuanceError(f"{target!r} is neither an issued credential id nor a batch name")
        current = store.revocations()
        if target in current.targets:
            log.warning("%s is already revoked; revocation list unchanged", target)
            return current
        updated = current.appended(RevocationEntry(target, reason, at))
        _write_json(store.root / "revocations.json", updated.to_dict())
    return updated
