"""Mutate every receipt of batches of several sizes and tabulate where verification stops."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from credanchor.chain import ChainSimulator
from credanchor.credential import Credential, KeyPair
from credanchor.issuance import IssuerStore, MerkleReceipt, issue_batch
from credanchor.merkle import LEFT, RIGHT
from credanchor.profile import IssuerKey, IssuerProfile
from credanchor.service import LocalIssuerFetcher
from credanchor.verification import verify_credential


@dataclass
class SweepConfig:
    batch_sizes: list[int] = field(default_factory=lambda: [2, 4, 8])
    issued_on: int = 1_700_000_000


def _flip(b: bytes) -> bytes:
    return bytes(x ^ 0x01 for x in b)


MUTATIONS = {
    "credential_field": lambda r: dataclasses.replace(
        r, credential=dataclasses.replace(r.credential, description=r.credential.description + ".")
    ),
    "signature": lambda r: dataclasses.replace(
        r, credential=dataclasses.replace(r.credential, signature=_flip(bytes.fromhex(r.credential.signature)).hex())
    ),
    "proof_sibling": lambda r: dataclasses.replace(
        r, proof=dataclasses.replace(r.proof, path=((r.proof.path[0][0], _flip(r.proof.path[0][1])),) + r.proof.path[1:])
    ),
    "proof_side": lambda r: dataclasses.replace(
        r,
        proof=dataclasses.replace(
            r.proof,
            path=((RIGHT if r.proof.path[0][0] == LEFT else LEFT, r.proof.path[0][1]),) + r.proof.path[1:],
        ),
    ),
    "merkle_root": lambda r: dataclasses.replace(r, merkle_root=_flip(r.merkle_root)),
    "tx_id": lambda r: dataclasses.replace(r, tx_id=_flip(r.tx_id)),
}


def run(cfg: SweepConfig, workdir: Path) -> int:
    key = KeyPair.generate()
    profile = IssuerProfile("urn:issuer:sweep", "Sweep U", (IssuerKey(key.public_key, 0),), "http://x/r.json")
    store = IssuerStore.create(workdir / "issuer", profile, "http://x/p.json")
    chain = ChainSimulator()
    fetcher = LocalIssuerFetcher(store)
    table: Counter[tuple[str, str]] = Counter()
    false_accepts = 0
    for n in cfg.batch_sizes:
        batch = f"sweep-{n}"
        creds = [
            Credential(f"urn:uuid:{n}-{i}", profile.issuer_id, f"addr-{i}", "BSc", f"student {i}", cfg.issued_on, batch)
            for i in range(n)
        ]
        receipts: list[MerkleReceipt] = issue_batch(creds, key, batch, chain, store)
        chain.mine_block(cfg.issued_on + n)
        for r in receipts:
            for kind, mutate in MUTATIONS.items():
                report = verify_credential(mutate(r), chain, fetcher, cfg.issued_on + 1000)
                if report.valid:
                    false_accepts += 1
                table[(kind, report.failed_step or "-")] += 1

    print(f"{'mutation':<18} {'failed at':<20} count")
    for (kind, step), count in sorted(table.items()):
        print(f"{kind:<18} {step:<20} {count}")
    print(f"false accepts: {false_accepts}")
    return 1 if false_accepts else 0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=SweepConfig().batch_sizes)
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        sys.exit(run(SweepConfig(batch_sizes=args.sizes), Path(tmp)))


if __name__ == "__main__":
    main()
