"""Anchor size and fee as a function of batch size (one transaction per batch)."""

from __future__ import annotations

import argparse
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from credanchor.chain import ChainSimulator
from credanchor.credential import Credential, KeyPair
from credanchor.issuance import IssuerStore, issue_batch
from credanchor.profile import IssuerKey, IssuerProfile


@dataclass
class CostConfig:
    batch_sizes: list[int] = field(default_factory=lambda: [1, 2, 8, 32, 128, 512])
    fee_rate: int = 2


def run(cfg: CostConfig, workdir: Path) -> None:
    key = KeyPair.generate()
    profile = IssuerProfile("urn:issuer:cost", "Cost U", (IssuerKey(key.public_key, 0),), "http://x/r.json")
    store = IssuerStore.create(workdir / "issuer", profile, "http://x/p.json")
    chain = ChainSimulator(fee_rate=cfg.fee_rate)
    print(f"{'batch':>6} {'txs':>4} {'tx bytes':>9} {'fee':>6} {'fee/credential':>15} {'proof len':>10}")
    for n in cfg.batch_sizes:
        before = len(chain.transactions())
        batch = f"b{n}"
        creds = [Credential(f"c{n}-{i:05d}", profile.issuer_id, f"a{i}", "t", "d", 1, batch) for i in range(n)]
        receipts = issue_batch(creds, key, batch, chain, store)
        tx = chain.get_transaction(receipts[0].tx_id)
        longest = max(len(r.proof.path) for r in receipts)
        print(
            f"{n:>6} {len(chain.transactions()) - before:>4} {tx.size_bytes:>9} {tx.fee_paid:>6} "
            f"{tx.fee_paid / n:>15.2f} {longest:>10}"
        )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fee-rate", type=int, default=CostConfig.fee_rate)
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        run(CostConfig(fee_rate=args.fee_rate), Path(tmp))


if __name__ == "__main__":
    main()
