"""Third-party verification of a receipt, as an ordered nine-step checklist.

Steps run in a fixed order and stop at the first failure; everything after
it is reported as skipped. Failures never raise, they become a failed step
with a readable detail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

from .canonical import canonicalize
from .chain import ChainClient, ChainTransaction, TransactionNotFound, TransactionUnconfirmed, remote_root
from .credential import SignatureFormatError, credential_hash, verify_signature
from .issuance import MerkleReceipt
from .merkle import verify_proof
from .profile import IssuerKey, IssuerProfile, RevocationList

STEP_NAMES = (
    "get_tx_id",
    "compute_local_hash",
    "fetch_remote_hash",
    "get_issuer_profile",
    "parse_issuer_keys",
    "compare_hashes",
    "check_merkle_root",
    "check_revoked",
    "check_expiry",
)

PASSED = "passed"
FAILED = "failed"
SKIPPED = "skipped"
VALID = "valid"
INVALID = "invalid"


class IssuerFetcher(Protocol):
    def fetch_profile(self, url: str) -> IssuerProfile: ...

    def fetch_revocations(self, url: str) -> RevocationList: ...


@dataclass(frozen=True)
class VerificationStep:
    name: str
    status: str
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


@dataclass(frozen=True)
class VerificationReport:
    steps: tuple[VerificationStep, ...]
    overall: str
    verified_at: int

    @property
    def valid(self) -> bool:
        return self.overall == VALID

    @property
    def failed_step(self) -> str | None:
        for step in self.steps:
            if step.status == FAILED:
                return step.name
        return None

    def status_of(self, name: str) -> str:
        return next(s.status for s in self.steps if s.name == name)

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "overall": self.overall,
            "verified_at": self.verified_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> VerificationReport:
        steps = tuple(VerificationStep(s["name"], s["status"], s["detail"]) for s in doc["steps"])
        if tuple(s.name for s in steps) != STEP_NAMES:
            raise ValueError("report steps are not the nine verification steps in order")
        if any(s.status not in (PASSED, FAILED, SKIPPED) for s in steps):
            raise ValueError("unknown step status")
        if doc["overall"] not in (VALID, INVALID):
            raise ValueError(f"unknown overall status {doc['overall']!r}")
        return cls(steps=steps, overall=doc["overall"], verified_at=doc["verified_at"])


class StepFailed(Exception):
    pass


class _Run:
    """Holds intermediate values that later steps read."""

    def __init__(self, receipt: MerkleReceipt, chain: ChainClient, fetcher: IssuerFetcher, now: int):
        self.receipt = receipt
        self.chain = chain
        self.fetcher = fetcher
        self.now = now
        self.tx: ChainTransaction | None = None
        self.local_hash = b""
        self.remote_hash = b""
        self.profile: IssuerProfile | None = None
        self.keys: list[IssuerKey] = []

    def get_tx_id(self) -> str:
        tx_id = self.receipt.tx_id
        try:
            tx = self.chain.get_transaction(tx_id)
        except TransactionNotFound:
            raise StepFailed(f"transaction {tx_id.hex()} not found on chain") from None
        if not tx.confirmed:
            raise StepFailed(f"transaction {tx_id.hex()} is awaiting confirmation")
        self.tx = tx
        n = self.chain.confirmations(tx_id)
        return f"transaction {tx_id.hex()} in block {tx.block_height} ({n} confirmations)"

    def compute_local_hash(self) -> str:
        self.local_hash = credential_hash(self.receipt.credential)
        return f"local hash {self.local_hash.hex()}"

    def fetch_remote_hash(self) -> str:
        try:
            self.remote_hash = remote_root(self.chain, self.receipt.tx_id)
        except TransactionUnconfirmed:
            raise StepFailed("awaiting confirmation") from None
        return f"anchored hash {self.remote_hash.hex()}"

    def get_issuer_profile(self) -> str:
        url = self.receipt.issuer_profile_url
        try:
            profile = self.fetcher.fetch_profile(url)
        except Exception as exc:
            raise StepFailed(f"cannot fetch issuer profile from {url}: {exc}") from None
        cred_issuer = self.receipt.credential.issuer_id
        if profile.issuer_id != cred_issuer:
            raise StepFailed(f"profile is for issuer {profile.issuer_id!r}, credential names {cred_issuer!r}")
        self.profile = profile
        return f"issuer {profile.issuer_id} ({profile.name})"

    def parse_issuer_keys(self) -> str:
        t = self.tx.timestamp
        self.keys = self.profile.keys_valid_at(t)
        if not self.keys:
            raise StepFailed(f"no issuer key was valid at anchoring time {t}")
        if self.tx.issuer_address not in {k.key for k in self.keys}:
            raise StepFailed(
                f"anchoring address {self.tx.issuer_address[:16]}... is not an issuer key valid at time {t}"
            )
        return f"{len(self.keys)} issuer key(s) valid at anchoring time {t}"

    def compare_hashes(self) -> str:
        r = self.receipt
        if self.local_hash != r.target_hash:
            raise StepFailed(f"local hash {self.local_hash.hex()} != receipt target hash {r.target_hash.hex()}")
        if self.local_hash != r.proof.leaf:
            raise StepFailed(f"local hash {self.local_hash.hex()} != proof leaf {r.proof.leaf.hex()}")
        try:
            signer = next((k for k in self.keys if verify_signature(r.credential, k.key)), None)
        except SignatureFormatError as exc:
            raise StepFailed(f"malformed signature: {exc}") from None
        if signer is None:
            raise StepFailed("signature does not verify under any issuer key valid at anchoring time")
        return f"hashes match; signed by {signer.key[:16]}..."

    def check_merkle_root(self) -> str:
        r = self.receipt
        if not verify_proof(r.proof):
            raise StepFailed("merkle proof does not lead from the leaf to its root")
        if r.proof.root != r.merkle_root:
            raise StepFailed("proof root differs from receipt merkle_root")
        if r.merkle_root != self.remote_hash:
            raise StepFailed(f"merkle root {r.merkle_root.hex()} != anchored {self.remote_hash.hex()}")
        return f"merkle root {r.merkle_root.hex()} matches anchor"

    def check_revoked(self) -> str:
        url = self.profile.revocation_list_url
        try:
            revocations = self.fetcher.fetch_revocations(url)
        except Exception as exc:
            raise StepFailed(f"cannot fetch revocation list from {url}: {exc}") from None
        cred = self.receipt.credential
        entry = revocations.entry_for(cred.id, cred.batch_name)
        if entry is not None:
            raise StepFailed(f"{entry.target} revoked at {entry.revoked_at}: {entry.reason}")
        return "not revoked"

    def check_expiry(self) -> str:
        expires = self.receipt.credential.expires
        if expires is None:
            return "no expiry date"
        if expires > self.now:
            return f"expires at {expires}"
        raise StepFailed(f"expired at {expires} (now {self.now})")


def verify_credential(
    receipt: MerkleReceipt,
    chain: ChainClient,
    issuer_fetcher: IssuerFetcher,
    now: int,
) -> VerificationReport:
    run = _Run(receipt, chain, issuer_fetcher, now)
    steps = []
    failed = False
    for name in STEP_NAMES:
        if failed:
            steps.append(VerificationStep(name, SKIPPED, "skipped after earlier failure"))
            continue
        try:
            detail = getattr(run, name)()
            steps.append(VerificationStep(name, PASSED, detail))
        except StepFailed as exc:
            failed = True
            steps.append(VerificationStep(name, FAILED, str(exc)))
        except Exception as exc:
            failed = True
            steps.append(VerificationStep(name, FAILED, f"{type(exc).__name__}: {exc}"))
    return VerificationReport(tuple(steps), INVALID if failed else VALID, now)


def render_report(report: VerificationReport, format: str = "text") -> bytes:
    if format == "json":
        return canonicalize(report.to_dict())
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    lines = [f"{s.name}: {s.status.upper()} — {s.detail}" for s in report.steps]
    lines.append(f"overall: {report.overall.upper()}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_report(data: bytes | str) -> VerificationReport:
    return VerificationReport.from_dict(json.loads(data))
