"""End-to-end acceptance criteria, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get a PASS/FAIL line per criterion
in the terminal summary.
"""

import dataclasses
import hashlib
import os
import random

import pytest

from credanchor.canonical import canonicalize, hash_bytes
from credanchor.chain import ChainSimulator
from credanchor.credential import KeyPair, credential_hash, sign_credential
from credanchor.issuance import IssuerStore, accept_invite, create_invite, issue_batch, revoke
from credanchor.merkle import build_tree, generate_proof, verify_proof
from credanchor.profile import IssuerKey, IssuerProfile
from credanchor.service import HttpIssuerFetcher, LocalIssuerFetcher, serve
from credanchor.verification import FAILED, PASSED, SKIPPED, STEP_NAMES, verify_credential

from conftest import BLOCK_TIME, ISSUER_ID, KEY_CREATED, NOW, REVOCATIONS_URL, PROFILE_URL, make_credential
from test_merkle import mutations, oracle_root
from test_verification import EXPECTED_STEP, MUTATION_KINDS, mutate


def steps_until_failure(report, step):
    k = STEP_NAMES.index(step)
    return [s.status for s in report.steps] == [PASSED] * k + [FAILED] + [SKIPPED] * (8 - k)


@pytest.mark.criterion(1, "end-to-end happy path, 5 recipients, one anchor")
def test_end_to_end_happy_path(tmp_path):
    key = KeyPair.generate()
    profile = IssuerProfile(ISSUER_ID, "Georgia Tech", (IssuerKey(key.public_key, KEY_CREATED),), REVOCATIONS_URL)
    store = IssuerStore.create(tmp_path / "issuer", profile, PROFILE_URL)
    chain = ChainSimulator(tmp_path / "chain.jsonl")

    creds = []
    for i in range(5):
        invite = create_invite(store, ISSUER_ID, f"student{i}@gatech.edu", "Hello {{recipient_email}}")
        recipient = KeyPair.generate()
        accept_invite(store, invite.invite_id, recipient.public_key)
        creds.append(make_credential(i, recipient_address=store.address_for(invite.invite_id)))

    receipts = issue_batch(creds, key, "class-of-2019", chain, store)
    chain.mine_block(BLOCK_TIME)

    assert len(chain.transactions()) == 1
    fetcher = LocalIssuerFetcher(store)
    for r in receipts:
        report = verify_credential(r, chain, fetcher, NOW)
        assert [s.status for s in report.steps] == [PASSED] * 9
        assert report.overall == "valid"


@pytest.mark.criterion(2, "tamper sweep, batch of 8 x 6 mutations -> 48/48 invalid")
def test_tamper_sweep(issue, chain, fetcher):
    receipts = issue(8)
    results = []
    for r in receipts:
        assert verify_credential(r, chain, fetcher, NOW).valid
        for kind in MUTATION_KINDS:
            report = verify_credential(mutate(r, kind), chain, fetcher, NOW)
            results.append((kind, report.overall, report.failed_step))
    assert len(results) == 48
    false_accepts = [res for res in results if res[1] != "invalid"]
    assert false_accepts == []
    wrong_step = [res for res in results if res[2] != EXPECTED_STEP[res[0]]]
    assert wrong_step == []


@pytest.mark.criterion(3, "merkle root == recursive oracle, all proofs verify, all mutations fail (n=1..16)")
def test_merkle_oracle_equivalence():
    rnd = random.Random(2019)
    for n in range(1, 17):
        leaves = [rnd.randbytes(32) for _ in range(n)]
        tree = build_tree(leaves)
        assert tree.root == oracle_root(leaves)
        for i in range(n):
            proof = generate_proof(tree, i)
            assert verify_proof(proof)
            for label, bad in mutations(proof, rnd):
                assert not verify_proof(bad), (n, i, label)


@pytest.mark.criterion(4, "batch revocation fails at check_revoked; re-issued batch verifies")
def test_revocation_semantics(issue, chain, store, fetcher):
    old = issue(5, batch="class-of-2019")
    revoke(store, "class-of-2019", "wrong degree title", NOW - 100)
    for r in old:
        report = verify_credential(r, chain, fetcher, NOW)
        assert report.failed_step == "check_revoked"
        assert steps_until_failure(report, "check_revoked")

    corrected = issue(5, batch="class-of-2019-corrected", title="Master of Science in Computing")
    for r in corrected:
        assert [s.status for s in verify_credential(r, chain, fetcher, NOW).steps] == [PASSED] * 9


@pytest.mark.criterion(5, "expiry boundary: expires == now fails, now + 1 passes")
def test_expiry_boundary(issue, chain, fetcher):
    at_now = issue(1, batch="exp-a", expires=NOW)[0]
    later = issue(1, batch="exp-b", expires=NOW + 1)[0]
    report = verify_credential(at_now, chain, fetcher, NOW)
    assert report.failed_step == "check_expiry" and steps_until_failure(report, "check_expiry")
    assert verify_credential(later, chain, fetcher, NOW).valid


@pytest.mark.criterion(6, "privacy: sentinel in every string field never reaches the chain store")
def test_privacy(tmp_path):
    sentinel = "S3NT1NEL-c0ffee"
    key = KeyPair.generate()
    issuer_id = f"urn:issuer:{sentinel}"
    profile = IssuerProfile(issuer_id, sentinel, (IssuerKey(key.public_key, KEY_CREATED),), REVOCATIONS_URL)
    store = IssuerStore.create(tmp_path / "issuer", profile, PROFILE_URL)
    chain_path = tmp_path / "chain.jsonl"
    chain = ChainSimulator(chain_path)
    batch = f"{sentinel}-batch"
    creds = [
        make_credential(
            i,
            batch,
            id=f"{sentinel}-{i}",
            issuer_id=issuer_id,
            recipient_address=f"{sentinel}-addr-{i}",
            title=f"{sentinel} title",
            description=f"{sentinel} description",
        )
        for i in range(6)
    ]
    issue_batch(creds, key, batch, chain, store)
    chain.mine_block(BLOCK_TIME)
    raw = chain_path.read_bytes()
    assert raw
    assert sentinel.encode() not in raw
    assert sentinel.encode().hex().encode() not in raw


@pytest.mark.criterion(7, "issuer key revoked before anchoring block fails parse_issuer_keys")
def test_key_window(issue, chain, store, fetcher):
    receipts = issue(3)
    block_time = chain.get_transaction(receipts[0].tx_id).timestamp
    [k] = store.profile.public_keys
    backdated = dataclasses.replace(k, revoked=block_time - 1)
    store.save_profile(dataclasses.replace(store.profile, public_keys=(backdated,)))
    for r in receipts:
        report = verify_credential(r, chain, fetcher, NOW)
        assert report.failed_step == "parse_issuer_keys"
        assert steps_until_failure(report, "parse_issuer_keys")


@pytest.mark.criterion(8, "1,000 key-order permutations of a credential hash to one digest")
def test_canonicalization_determinism(key):
    doc = sign_credential(make_credential(7, expires=NOW + 10), key).to_dict()
    expected = credential_hash(sign_credential(make_credential(7, expires=NOW + 10), key))
    rnd = random.Random(8)
    digests = set()
    items = list(doc.items())
    for _ in range(1000):
        rnd.shuffle(items)
        digests.add(hash_bytes(canonicalize(dict(items))))
    assert digests == {expected}
    assert expected == hashlib.sha256(canonicalize(doc)).digest()


@pytest.mark.criterion(9, "fee law fee_paid == size_bytes x fee_rate for rates 1, 2, 10")
@pytest.mark.parametrize("rate", [1, 2, 10])
def test_fee_law(tmp_path, key, store, rate):
    chain = ChainSimulator(tmp_path / f"chain-{rate}.jsonl", fee_rate=rate)
    for b in range(3):
        issue_batch([make_credential(i, f"b{b}") for i in range(b + 1)], key, f"b{b}", chain, store)
    for _ in range(3):
        chain.submit_anchor(os.urandom(32), key.public_key)
    txs = ChainSimulator(tmp_path / f"chain-{rate}.jsonl").transactions()
    assert len(txs) == 6
    for tx in txs:
        assert tx.fee_rate == rate
        assert tx.fee_paid == tx.size_bytes * rate


@pytest.mark.criterion(10, "HTTP issuer service and in-process fetcher give identical reports")
def test_http_parity(issue, chain, store, fetcher):
    receipts = issue(6)
    revoke(store, receipts[2].credential.id, "withdrawn", NOW - 1)
    tampered = [mutate(receipts[0], kind) for kind in MUTATION_KINDS]
    with serve(store) as service:
        http = HttpIssuerFetcher(service.base_url)
        for r in receipts + tampered:
            assert verify_credential(r, chain, http, NOW) == verify_credential(r, chain, fetcher, NOW)
