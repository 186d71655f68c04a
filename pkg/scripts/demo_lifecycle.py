"""Walk the whole credential lifecycle once and print every verification report.

    python scripts/demo_lifecycle.py --recipients 4 --workdir /tmp/credanchor-demo
"""

from __future__ import annotations

import argparse
import shutil
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from credanchor.chain import ChainSimulator
from credanchor.credential import Credential, KeyPair
from credanchor.issuance import IssuerStore, accept_invite, create_invite, issue_batch, revoke
from credanchor.profile import IssuerKey, IssuerProfile
from credanchor.service import HttpIssuerFetcher, profile_url, revocations_url, serve
from credanchor.verification import render_report, verify_credential


@dataclass
class DemoConfig:
    recipients: int = 4
    issuer_id: str = "urn:issuer:gatech"
    batch_name: str = "class-of-2019"
    workdir: Path | None = None
    revoke_first: bool = True


def run(cfg: DemoConfig) -> None:
    workdir = cfg.workdir or Path(tempfile.mkdtemp(prefix="credanchor-demo-"))
    if cfg.workdir and workdir.exists():
        shutil.rmtree(workdir)
    now = int(time.time())
    key = KeyPair.generate()

    # port unknown until the service binds; the fetcher's base override fills it in
    placeholder = "http://127.0.0.1:0"
    profile = IssuerProfile(cfg.issuer_id, "Georgia Tech", (IssuerKey(key.public_key, now - 60),), revocations_url(placeholder))
    store = IssuerStore.create(workdir / "issuer", profile, profile_url(placeholder))
    chain = ChainSimulator(workdir / "chain.jsonl")

    with serve(store) as service:
        fetcher = HttpIssuerFetcher(service.base_url)
        print(f"issuer service at {service.base_url}")

        creds = []
        for i in range(cfg.recipients):
            invite = create_invite(store, cfg.issuer_id, f"student{i}@example.edu", "Hello {{recipient_email}}")
            accept_invite(store, invite.invite_id, KeyPair.generate().public_key)
            creds.append(
                Credential(
                    id=f"urn:uuid:demo-{i}",
                    issuer_id=cfg.issuer_id,
                    recipient_address=store.address_for(invite.invite_id),
                    title="Master of Science",
                    description=f"Conferred on student {i}",
                    issued_on=now,
                    batch_name=cfg.batch_name,
                )
            )
        receipts = issue_batch(creds, key, cfg.batch_name, chain, store)
        chain.mine_block(now)
        tx = chain.get_transaction(receipts[0].tx_id)
        print(f"anchored {len(receipts)} credentials in tx {tx.tx_id.hex()} ({tx.size_bytes} bytes, fee {tx.fee_paid})\n")

        if cfg.revoke_first:
            revoke(store, receipts[0].credential.id, "issued in error", now)

        for r in receipts:
            print(f"== {r.credential.id}")
            print(render_report(verify_credential(r, chain, fetcher, now + 1)).decode())
    print(f"artifacts left in {workdir}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--recipients", type=int, default=DemoConfig.recipients)
    parser.add_argument("--workdir", type=Path)
    parser.add_argument("--no-revoke", action="store_true")
    args = parser.parse_args()
    run(DemoConfig(recipients=args.recipients, workdir=args.workdir, revoke_first=not args.no_revoke))


if __name__ == "__main__":
    main()
