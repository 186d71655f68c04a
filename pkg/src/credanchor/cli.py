"""Command-line entry point.

Exit codes: 0 success / valid, 1 verification invalid, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from .canonical import canonicalize
from .chain import ChainError, ChainSimulator
from .credential import CredentialError, KeyPair, load_credential
from .issuance import (
    IssuanceError,
    IssuerStore,
    ReceiptFormatError,
    accept_invite,
    create_invite,
    dump_receipt,
    issue_batch,
    load_receipt,
    receipt_filename,
    revoke,
)
from .profile import IssuerKey, IssuerProfile, SchemaError
from .service import HttpIssuerFetcher, LocalIssuerFetcher, make_server, profile_url, revocations_url
from .verification import render_report, verify_credential

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ERROR = 2

CHAIN_ENV = "CREDANCHOR_CHAIN"
ISSUER_ENV = "CREDANCHOR_ISSUER"

DEFAULT_INVITE_TEMPLATE = """Hello {{recipient_email}},

{{issuer_id}} would like to issue you a blockchain credential.
To accept, reply with the blockchain address you want it bound to.
"""

log = logging.getLogger("credanchor")


class CLIError(Exception):
    pass


def _now() -> int:
    return int(time.time())


def _store_path(args: argparse.Namespace) -> Path:
    if not args.issuer_store:
        raise CLIError(f"issuer store not given (use --issuer-store or ${ISSUER_ENV})")
    return Path(args.issuer_store)


def _chain_path(args: argparse.Namespace) -> Path:
    if not args.chain:
        raise CLIError(f"chain store not given (use --chain or ${CHAIN_ENV})")
    return Path(args.chain)


def _read_hex_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def _mine(sim: ChainSimulator, timestamp: int | None) -> int:
    last = sim.blocks[-1].timestamp if sim.blocks else -1
    ts = timestamp if timestamp is not None else max(_now(), last + 1)
    return sim.mine_block(ts).height


def cmd_keygen(args: argparse.Namespace) -> int:
    pub_path = Path(str(args.out) + ".pub")
    key_path = Path(str(args.out) + ".key")
    for p in (pub_path, key_path):
        if p.exists():
            raise CLIError(f"{p} already exists; refusing to overwrite")
    pair = KeyPair.generate()
    fd = os.open(key_path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(pair.private_key + "\n")
    pub_path.write_text(pair.public_key + "\n", encoding="utf-8")
    print(pair.public_key)
    return EXIT_OK


def cmd_init(args: argparse.Namespace) -> int:
    public_key = _read_hex_file(args.public_key)
    base = args.base_url
    profile = IssuerProfile(
        issuer_id=args.issuer_id,
        name=args.name or args.issuer_id,
        public_keys=(IssuerKey(public_key, args.created if args.created is not None else _now()),),
        revocation_list_url=revocations_url(base),
    )
    store = IssuerStore.create(_store_path(args), profile, profile_url(base))
    print(f"issuer store created at {store.root}")
    return EXIT_OK


def cmd_invite(args: argparse.Namespace) -> int:
    store = IssuerStore(_store_path(args))
    template = Path(args.template).read_text(encoding="utf-8") if args.template else DEFAULT_INVITE_TEMPLATE
    invite = create_invite(store, store.profile.issuer_id, args.email, template)
    if args.out:
        Path(args.out).write_bytes(canonicalize(invite.to_dict()))
    print(invite.invite_id)
    return EXIT_OK


def cmd_accept(args: argparse.Namespace) -> int:
    store = IssuerStore(_store_path(args))
    resp = accept_invite(store, args.invite_id, args.address)
    print(f"{resp.invite_id} -> {resp.recipient_address}")
    return EXIT_OK


def cmd_issue(args: argparse.Namespace) -> int:
    batch_dir = Path(args.batch_dir)
    if not batch_dir.is_dir():
        raise CLIError(f"{batch_dir} is not a directory")
    files = sorted(batch_dir.glob("*.json"))
    if not files:
        raise CLIError(f"no credential files in {batch_dir}")
    creds = [load_credential(f) for f in files]
    key = KeyPair.from_private_hex(_read_hex_file(args.key))
    store = IssuerStore(_store_path(args))
    sim = ChainSimulator(_chain_path(args), fee_rate=args.fee_rate)
    receipts = issue_batch(creds, key, args.batch_name, sim, store)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for r in receipts:
        dump_receipt(r, out_dir / receipt_filename(r.credential.id))
    if args.mine:
        height = _mine(sim, args.timestamp)
        log.info("mined block %d", height)
    print(receipts[0].tx_id.hex())
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        receipt = load_receipt(args.receipt)
    except (OSError, ReceiptFormatError) as exc:
        raise CLIError(f"cannot read receipt {args.receipt}: {exc}") from exc
    chain_path = _chain_path(args)
    if not chain_path.is_file():
        raise CLIError(f"chain store {chain_path} does not exist")
    sim = ChainSimulator(chain_path)
    if args.issuer_store and not args.issuer_url:
        fetcher = LocalIssuerFetcher(IssuerStore(args.issuer_store))
    else:
        fetcher = HttpIssuerFetcher(args.issuer_url)
    now = args.now if args.now is not None else _now()
    report = verify_credential(receipt, sim, fetcher, now)
    sys.stdout.write(render_report(report, "json" if args.json else "text").decode("utf-8"))
    if args.json:
        sys.stdout.write("\n")
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_revoke(args: argparse.Namespace) -> int:
    store = IssuerStore(_store_path(args))
    before = store.revocations()
    updated = revoke(store, args.target, args.reason, args.at if args.at is not None else _now())
    if updated == before:
        print(f"warning: {args.target} is already revoked; list unchanged", file=sys.stderr)
    print(json.dumps(updated.to_dict(), indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    store = IssuerStore(_store_path(args))
    server = make_server(store, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"serving {store.profile.issuer_id} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_chain(args: argparse.Namespace) -> int:
    sim = ChainSimulator(_chain_path(args), fee_rate=args.fee_rate)
    if args.action == "mine":
        print(f"height {_mine(sim, args.timestamp)}")
        return EXIT_OK
    if args.json:
        doc = {
            "height": sim.height,
            "blocks": [b.to_dict() for b in sim.blocks],
            "transactions": [t.to_dict() for t in sim.transactions()],
        }
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(f"height {sim.height}, {len(sim.transactions())} transaction(s)")
    for tx in sim.transactions():
        where = f"block {tx.block_height}" if tx.confirmed else "pending"
        print(f"{tx.tx_id.hex()}  anchor={tx.anchor_payload.hex()}  fee={tx.fee_paid}  {where}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="credanchor", description="Anchor and verify batched credentials.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_store(p: argparse.ArgumentParser) -> None:
        p.add_argument("--issuer-store", default=os.environ.get(ISSUER_ENV), help=f"issuer store dir (${ISSUER_ENV})")

    def with_chain(p: argparse.ArgumentParser) -> None:
        p.add_argument("--chain", default=os.environ.get(CHAIN_ENV), help=f"chain journal file (${CHAIN_ENV})")

    p = sub.add_parser("keygen", help="generate an issuer key pair")
    p.add_argument("out", help="path prefix; writes <out>.key and <out>.pub")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("init", help="create an issuer store and profile")
    with_store(p)
    p.add_argument("--issuer-id", required=True)
    p.add_argument("--name")
    p.add_argument("--public-key", required=True, help="file holding the hex public key")
    p.add_argument("--base-url", default="http://127.0.0.1:8000", help="where the issuer service will be reachable")
    p.add_argument("--created", type=int, help="key creation time (default: now)")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("invite", help="create an invite for a recipient")
    with_store(p)
    p.add_argument("--email", required=True)
    p.add_argument("--template", help="template file; {{recipient_email}} and {{issuer_id}} are substituted")
    p.add_argument("--out", help="also write the invite file here")
    p.set_defaults(func=cmd_invite)

    p = sub.add_parser("accept", help="record a recipient's address for an invite")
    with_store(p)
    p.add_argument("invite_id")
    p.add_argument("address")
    p.set_defaults(func=cmd_accept)

    p = sub.add_parser("issue", help="sign, anchor and emit receipts for a batch")
    with_store(p)
    with_chain(p)
    p.add_argument("batch_dir")
    p.add_argument("--key", required=True, help="private key file")
    p.add_argument("--batch-name", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--fee-rate", type=int, default=1)
    p.add_argument("--timestamp", type=int, help="block timestamp when mining")
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("verify", help="verify a receipt")
    with_chain(p)
    p.add_argument("receipt")
    p.add_argument("--issuer-url", help="fetch issuer documents from this base URL instead")
    p.add_argument("--issuer-store", help="read issuer documents from a local store instead of HTTP")
    p.add_argument("--json", action="store_true")
    p.add_argument("--now", type=int, help="verification time (default: now)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("revoke", help="revoke a credential id or batch name")
    with_store(p)
    p.add_argument("target")
    p.add_argument("--reason", default="revoked by issuer")
    p.add_argument("--at", type=int)
    p.set_defaults(func=cmd_revoke)

    p = sub.add_parser("serve", help="serve the issuer profile and revocation list")
    with_store(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("chain", help="inspect or mine the simulated chain")
    with_chain(p)
    p.add_argument("action", choices=["mine", "show"])
    p.add_argument("--timestamp", type=int)
    p.add_argument("--fee-rate", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_chain)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CLIError, IssuanceError, ChainError, CredentialError, SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
