"""Batch-anchored academic credentials: issue, anchor, receipt, verify."""

from .canonical import canonicalize, hash_bytes
from .chain import Block, ChainClient, ChainSimulator, ChainTransaction, remote_root
from .credential import Credential, KeyPair, credential_hash, sign_credential, verify_signature
from .issuance import (
    Invite,
    IssuerStore,
    MerkleReceipt,
    accept_invite,
    create_invite,
    issue_batch,
    load_receipt,
    revoke,
)
from .merkle import MerkleProof, MerkleTree, build_tree, generate_proof, verify_proof
from .profile import IssuerKey, IssuerProfile, RevocationEntry, RevocationList
from .verification import VerificationReport, render_report, verify_credential

__version__ = "0.1.0"
