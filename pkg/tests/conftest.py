from __future__ import annotations

import pytest

from credanchor.chain import ChainSimulator
from credanchor.credential import Credential, KeyPair
from credanchor.issuance import IssuerStore, issue_batch
from credanchor.profile import IssuerKey, IssuerProfile
from credanchor.service import LocalIssuerFetcher

ISSUER_ID = "urn:issuer:gatech"
KEY_CREATED = 1_600_000_000
ISSUED_ON = 1_700_000_000
BLOCK_TIME = 1_700_000_100
NOW = 1_700_001_000
PROFILE_URL = "http://issuer.invalid/issuer/profile.json"
REVOCATIONS_URL = "http://issuer.invalid/issuer/revocations.json"

# fixed seed so signatures and hashes in frozen-value tests are reproducible
FIXED_PRIVATE_KEY = "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"


def make_credential(i: int, batch: str = "class-of-2019", **overrides) -> Credential:
    fields = dict(
        id=f"urn:uuid:cred-{i:04d}",
        issuer_id=ISSUER_ID,
        recipient_address=f"{i:064x}",
        title="Master of Science in Computer Science",
        description=f"Awarded to student {i}",
        issued_on=ISSUED_ON,
        batch_name=batch,
    )
    fields.update(overrides)
    return Credential(**fields)


@pytest.fixture
def key() -> KeyPair:
    return KeyPair.from_private_hex(FIXED_PRIVATE_KEY)


@pytest.fixture
def store(tmp_path, key) -> IssuerStore:
    profile = IssuerProfile(
        issuer_id=ISSUER_ID,
        name="Georgia Tech",
        public_keys=(IssuerKey(key.public_key, KEY_CREATED),),
        revocation_list_url=REVOCATIONS_URL,
    )
    return IssuerStore.create(tmp_path / "issuer", profile, PROFILE_URL)


@pytest.fixture
def chain(tmp_path) -> ChainSimulator:
    return ChainSimulator(tmp_path / "chain.jsonl")


@pytest.fixture
def fetcher(store) -> LocalIssuerFetcher:
    return LocalIssuerFetcher(store)


@pytest.fixture
def issue(key, chain, store):
    """Issue and mine a batch; returns the receipts."""

    def _issue(n: int, batch: str = "class-of-2019", block_time: int | None = None, **overrides):
        creds = [make_credential(i, batch, **overrides) for i in range(n)]
        receipts = issue_batch(creds, key, batch, chain, store)
        last = chain.blocks[-1].timestamp if chain.blocks else BLOCK_TIME - 1
        chain.mine_block(block_time if block_time is not None else last + 1)
        return receipts

    return _issue


# ---- acceptance reporting -------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        # parametrized criteria: any failing case fails the criterion
        previous = _criteria.get(number, (title, "PASS"))[1]
        status = "PASS" if report.passed and previous == "PASS" else "FAIL"
        _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}")
