"""In-process blockchain simulator used as the anchoring backend.

Transactions carry a single 32-byte anchor (the OP_RETURN slot) plus a random
nonce. Blocks are only produced by an explicit :meth:`ChainSimulator.mine_block`
call. With a ``path`` the simulator keeps an append-only JSON-lines journal
(``{"kind": "tx" | "block", ...}``) and rebuilds its state by replaying it,
re-checking tx ids, the fee law and block linkage along the way.
"""

from __future__ import annotations

import dataclasses
import json
import os
import secrets
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Protocol, runtime_checkable

from filelock import FileLock

from .canonical import (
    DIGEST_SIZE,
    ZERO_DIGEST,
    canonicalize,
    digest_from_hex,
    digest_hex,
    hash_bytes,
)

NONCE_SIZE = 16


class ChainError(Exception):
    pass


class TransactionNotFound(ChainError, LookupError):
    pass


class TransactionUnconfirmed(ChainError):
    pass


class FeeRateUnset(ChainError):
    pass


class ChainIntegrityError(ChainError):
    """The journal does not replay into a consistent chain."""


def compute_fee(size_bytes: int, fee_rate: int) -> int:
    return size_bytes * fee_rate


def _payload_bytes(anchor_payload: bytes, issuer_address: str, nonce: bytes) -> bytes:
    return canonicalize(
        {
            "anchor_payload": anchor_payload.hex(),
            "issuer_address": issuer_address,
            "nonce": nonce.hex(),
        }
    )


@dataclass(frozen=True)
class ChainTransaction:
    tx_id: bytes
    anchor_payload: bytes
    issuer_address: str
    nonce: bytes
    size_bytes: int
    fee_rate: int
    fee_paid: int
    block_height: int | None = None
    timestamp: int | None = None

    @classmethod
    def create(cls, anchor_payload: bytes, issuer_address: str, nonce: bytes, fee_rate: int) -> ChainTransaction:
        size = len(_payload_bytes(anchor_payload, issuer_address, nonce))
        body = {
            "anchor_payload": anchor_payload.hex(),
            "issuer_address": issuer_address,
            "nonce": nonce.hex(),
            "size_bytes": size,
            "fee_rate": fee_rate,
            "fee_paid": compute_fee(size, fee_rate),
        }
        return cls(
            tx_id=hash_bytes(canonicalize(body)),
            anchor_payload=anchor_payload,
            issuer_address=issuer_address,
            nonce=nonce,
            size_bytes=size,
            fee_rate=fee_rate,
            fee_paid=body["fee_paid"],
        )

    @property
    def confirmed(self) -> bool:
        return self.block_height is not None

    def identity_dict(self) -> dict:
        """Fields covered by tx_id (everything except mining results)."""
        return {
            "anchor_payload": self.anchor_payload.hex(),
            "issuer_address": self.issuer_address,
            "nonce": self.nonce.hex(),
            "size_bytes": self.size_bytes,
            "fee_rate": self.fee_rate,
            "fee_paid": self.fee_paid,
        }

    def to_dict(self) -> dict:
        return {
            "tx_id": digest_hex(self.tx_id),
            **self.identity_dict(),
            "block_height": self.block_height,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ChainTransaction:
        return cls(
            tx_id=digest_from_hex(doc["tx_id"]),
            anchor_payload=bytes.fromhex(doc["anchor_payload"]),
            issuer_address=doc["issuer_address"],
            nonce=bytes.fromhex(doc["nonce"]),
            size_bytes=doc["size_bytes"],
            fee_rate=doc["fee_rate"],
            fee_paid=doc["fee_paid"],
            block_height=doc.get("block_height"),
            timestamp=doc.get("timestamp"),
        )


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    tx_ids: tuple[bytes, ...]
    timestamp: int
    block_hash: bytes

    @staticmethod
    def compute_hash(height: int, prev_hash: bytes, tx_ids: tuple[bytes, ...], timestamp: int) -> bytes:
        return hash_bytes(
            canonicalize(
                {
                    "height": height,
                    "prev_hash": prev_hash.hex(),
                    "tx_ids": [t.hex() for t in tx_ids],
                    "timestamp": timestamp,
                }
            )
        )

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "prev_hash": digest_hex(self.prev_hash),
            "tx_ids": [digest_hex(t) for t in self.tx_ids],
            "timestamp": self.timestamp,
            "block_hash": digest_hex(self.block_hash),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Block:
        return cls(
            height=doc["height"],
            prev_hash=digest_from_hex(doc["prev_hash"]),
            tx_ids=tuple(digest_from_hex(t) for t in doc["tx_ids"]),
            timestamp=doc["timestamp"],
            block_hash=digest_from_hex(doc["block_hash"]),
        )


@runtime_checkable
class ChainClient(Protocol):
    """What issuers and verifiers need from a chain backend."""

    @property
    def fee_rate(self) -> int | None: ...

    def submit_anchor(self, root: bytes, issuer_address: str) -> bytes: ...

    def get_transaction(self, tx_id: bytes) -> ChainTransaction: ...

    def confirmations(self, tx_id: bytes) -> int: ...


def remote_root(client: ChainClient, tx_id: bytes) -> bytes:
    """Anchor payload of a confirmed transaction."""
    tx = client.get_transaction(tx_id)
    if not tx.confirmed:
        raise TransactionUnconfirmed(f"transaction {tx_id.hex()} is awaiting confirmation")
    return tx.anchor_payload


class ChainSimulator:
    """Single-writer simulated chain; safe to share between threads."""

    def __init__(
        self,
        path: str | Path | None = None,
        fee_rate: int | None = 1,
        nonce_source: Callable[[int], bytes] = secrets.token_bytes,
    ) -> None:
        self._fee_rate = fee_rate
        self._nonce_source = nonce_source
        self._lock = threading.RLock()
        self._txs: dict[bytes, ChainTransaction] = {}
        self._tx_order: list[bytes] = []
        self._pending: list[bytes] = []
        self._blocks: list[Block] = []
        self._path = Path(path) if path is not None else None
        self._offset = 0
        self._file_lock = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._file_lock = FileLock(str(self._path) + ".lock")
            with self._file_lock:
                self._path.touch(exist_ok=True)
                self._replay()

    # ---- ChainClient -------------------------------------------------

    @property
    def fee_rate(self) -> int | None:
        return self._fee_rate

    @fee_rate.setter
    def fee_rate(self, value: int | None) -> None:
        self._fee_rate = value

    def submit_anchor(self, root: bytes, issuer_address: str) -> bytes:
        if not isinstance(root, (bytes, bytearray)) or len(root) != DIGEST_SIZE:
            raise ChainError(f"anchor payload must be exactly {DIGEST_SIZE} bytes")
        if self._fee_rate is None:
            raise FeeRateUnset("fee rate is not configured")
        with self._mutation():
            tx = ChainTransaction.create(bytes(root), issuer_address, self._nonce_source(NONCE_SIZE), self._fee_rate)
            if tx.tx_id in self._txs:
                raise ChainError("transaction id collision")
            self._append({"kind": "tx", **tx.to_dict()})
            self._add_tx(tx)
            return tx.tx_id

    def get_transaction(self, tx_id: bytes) -> ChainTransaction:
        with self._lock:
            try:
                return self._txs[bytes(tx_id)]
            except KeyError:
                raise TransactionNotFound(f"transaction {bytes(tx_id).hex()} not found") from None

    def confirmations(self, tx_id: bytes) -> int:
        with self._lock:
            tx = self.get_transaction(tx_id)
            if not tx.confirmed:
                return 0
            return self._blocks[-1].height - tx.block_height + 1

    # ---- simulator controls -------------------------------------------

    def mine_block(self, timestamp: int) -> Block:
        with self._mutation():
            if self._blocks and timestamp <= self._blocks[-1].timestamp:
                raise ChainError(
                    f"block timestamp {timestamp} must exceed previous {self._blocks[-1].timestamp}"
                )
            height = len(self._blocks)
            prev = self._blocks[-1].block_hash if self._blocks else ZERO_DIGEST
            tx_ids = tuple(self._pending)
            block = Block(height, prev, tx_ids, timestamp, Block.compute_hash(height, prev, tx_ids, timestamp))
            self._append({"kind": "block", **block.to_dict()})
            self._add_block(block)
            return block

    @property
    def height(self) -> int:
        """Height of the tip, -1 for an empty chain."""
        return len(self._blocks) - 1

    @property
    def blocks(self) -> list[Block]:
        with self._lock:
            return list(self._blocks)

    def transactions(self) -> list[ChainTransaction]:
        with self._lock:
            return [self._txs[t] for t in self._tx_order]

    def pending(self) -> list[ChainTransaction]:
        with self._lock:
            return [self._txs[t] for t in self._pending]

    # ---- internals ----------------------------------------------------

    def _add_tx(self, tx: ChainTransaction) -> None:
        self._txs[tx.tx_id] = tx
        self._tx_order.append(tx.tx_id)
        self._pending.append(tx.tx_id)

    def _add_block(self, block: Block) -> None:
        for tx_id in block.tx_ids:
            self._txs[tx_id] = dataclasses.replace(
                self._txs[tx_id], block_height=block.height, timestamp=block.timestamp
            )
        mined = set(block.tx_ids)
        self._pending = [t for t in self._pending if t not in mined]
        self._blocks.append(block)

    @contextmanager
    def _mutation(self) -> Iterator[None]:
        # thread lock, then journal lock, then catch up with other writers
        with self._lock:
            if self._file_lock is None:
                yield
                return
            with self._file_lock:
                self._replay()
                yield

    def _append(self, record: dict) -> None:
        if self._path is None:
            return
        with open(self._path, "ab") as fh:
            fh.write(canonicalize(record) + b"\n")
            fh.flush()
            os.fsync(fh.fileno())
            self._offset = fh.tell()

    def _replay(self) -> None:
        """Apply journal lines written since the last replay."""
        with open(self._path, "rb") as fh:
            fh.seek(self._offset)
            data = fh.read()
        if data and not data.endswith(b"\n"):
            raise ChainIntegrityError("journal ends with a partial record")
        for lineno, line in enumerate(data.splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                kind = record.pop("kind")
            except (ValueError, KeyError, AttributeError) as exc:
                raise ChainIntegrityError(f"bad journal record near line {lineno}: {exc}") from exc
            if kind == "tx":
                self._replay_tx(record)
            elif kind == "block":
                self._replay_block(record)
            else:
                raise ChainIntegrityError(f"unknown record kind {kind!r}")
        self._offset += len(data)

    def _replay_tx(self, record: dict) -> None:
        try:
            tx = ChainTransaction.from_dict(record)
        except (KeyError, TypeError, ValueError) as exc:
            raise ChainIntegrityError(f"bad transaction record: {exc}") from exc
        expected = ChainTransaction.create(tx.anchor_payload, tx.issuer_address, tx.nonce, tx.fee_rate)
        if expected != tx:
            raise ChainIntegrityError(f"transaction {tx.tx_id.hex()} fails id/size/fee audit")
        if len(tx.anchor_payload) != DIGEST_SIZE:
            raise ChainIntegrityError("anchor payload is not 32 bytes")
        if tx.tx_id in self._txs:
            raise ChainIntegrityError(f"duplicate transaction {tx.tx_id.hex()}")
        self._add_tx(tx)

    def _replay_block(self, record: dict) -> None:
        try:
            block = Block.from_dict(record)
        except (KeyError, TypeError, ValueError) as exc:
            raise ChainIntegrityError(f"bad block record: {exc}") from exc
        prev = self._blocks[-1].block_hash if self._blocks else ZERO_DIGEST
        if block.height != len(self._blocks) or block.prev_hash != prev:
            raise ChainIntegrityError(f"block {block.height} does not extend the chain")
        if self._blocks and block.timestamp <= self._blocks[-1].timestamp:
            raise ChainIntegrityError(f"block {block.height} timestamp is not increasing")
        if block.block_hash != Block.compute_hash(block.height, block.prev_hash, block.tx_ids, block.timestamp):
            raise ChainIntegrityError(f"block {block.height} hash mismatch")
        if any(t not in self._pending for t in block.tx_ids):
            raise ChainIntegrityError(f"block {block.height} confirms an unknown or mined transaction")
        self._add_block(block)

