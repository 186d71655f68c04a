import hashlib
import json

import pytest
import rfc8785
from hypothesis import given
from hypothesis import strategies as st

from credanchor.canonical import (
    CanonicalizationError,
    canonicalize,
    digest_from_hex,
    digest_hex,
    hash_bytes,
)

SAFE_INT = 2**53 - 1

# keys below the surrogate block sort identically by code point and by UTF-16 unit
keys = st.text(st.characters(max_codepoint=0xD7FF, blacklist_categories=("Cs",)), max_size=8)
scalars = (
    st.none()
    | st.booleans()
    | st.integers(-SAFE_INT, SAFE_INT)
    | st.text(st.characters(blacklist_categories=("Cs",)), max_size=12)
)
documents = st.recursive(
    scalars,
    lambda children: st.lists(children, max_size=4) | st.dictionaries(keys, children, max_size=4),
    max_leaves=20,
)


def test_key_order_independent():
    assert canonicalize({"b": 1, "a": 2}) == canonicalize({"a": 2, "b": 1}) == b'{"a":2,"b":1}'


def test_empty_document():
    assert canonicalize({}) == b"{}"


def test_nested_matches_rfc8785():
    doc = {
        "z": [1, {"b": True, "a": [None, "é", {"y": -5, "x": "ü "}]}],
        "a": {"m": {"k": [0, 9007199254740991]}},
        "é": "x\n\t\"q\"",
    }
    assert canonicalize(doc) == rfc8785.dumps(doc)


@given(documents)
def test_agrees_with_rfc8785(doc):
    assert canonicalize(doc) == rfc8785.dumps(doc)


@given(documents)
def test_reparse_is_fixed_point(doc):
    once = canonicalize(doc)
    assert canonicalize(json.loads(once)) == once


@given(st.dictionaries(keys, scalars, min_size=2, max_size=10), st.randoms())
def test_insertion_order_irrelevant(doc, rnd):
    items = list(doc.items())
    rnd.shuffle(items)
    assert canonicalize(dict(items)) == canonicalize(doc)


@pytest.mark.parametrize(
    "bad",
    [1.5, {"a": 0.0}, [1, 2.0], {1: "x"}, {"a": {(1, 2): 3}}, {"a": b"bytes"}, {"a": {1, 2}}],
)
def test_rejects_unsupported(bad):
    with pytest.raises(CanonicalizationError):
        canonicalize(bad)


def test_rejects_lone_surrogate():
    with pytest.raises(CanonicalizationError):
        canonicalize({"a": "\ud800"})


def test_large_integers_shortest_form():
    assert canonicalize([12345678901234567890, -0, 7]) == b"[12345678901234567890,0,7]"


def test_sha256_known_values():
    # cross-checked with coreutils sha256sum
    assert hash_bytes(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert hash_bytes(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@given(st.binary(max_size=256))
def test_hash_deterministic(data):
    assert hash_bytes(data) == hash_bytes(data) == hashlib.sha256(data).digest()
    assert len(hash_bytes(data)) == 32


def test_digest_hex_round_trip():
    d = bytes(range(32))
    assert digest_from_hex(digest_hex(d)) == d
    for bad in ["00" * 31, "AB" * 32, "zz" * 32, " " + "0" * 63]:
        with pytest.raises(ValueError):
            digest_from_hex(bad)
    with pytest.raises(ValueError):
        digest_hex(b"short")

