import hashlib
import os
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from credanchor.merkle import (
    LEFT,
    RIGHT,
    MerkleError,
    MerkleProof,
    build_tree,
    generate_proof,
    verify_proof,
)


def _h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def oracle_root(leaves: list[bytes]) -> bytes:
    """Recursive split at the largest power of two below n.

    Level-wise pairing with odd-node promotion gives the same tree shape, but
    this is computed top-down, sharing no code with credanchor.merkle.
    """
    if len(leaves) == 1:
        return leaves[0]
    k = 1
    while k * 2 < len(leaves):
        k *= 2
    return _h(oracle_root(leaves[:k]) + oracle_root(leaves[k:]))


def random_leaves(n: int, rnd: random.Random) -> list[bytes]:
    return [rnd.randbytes(32) for _ in range(n)]


def test_single_leaf_is_root():
    leaf = os.urandom(32)
    tree = build_tree([leaf])
    assert tree.root == leaf
    proof = generate_proof(tree, 0)
    assert proof.path == () and proof.root == leaf and verify_proof(proof)


def test_two_leaves():
    a, b = os.urandom(32), os.urandom(32)
    tree = build_tree([a, b])
    assert tree.root == _h(a + b)
    assert generate_proof(tree, 0).path == ((RIGHT, b),)
    assert generate_proof(tree, 1).path == ((LEFT, a),)


def test_empty_rejected():
    with pytest.raises(MerkleError):
        build_tree([])


def test_bad_leaf_size_rejected():
    with pytest.raises(MerkleError):
        build_tree([b"short"])


def test_index_out_of_range():
    tree = build_tree([os.urandom(32)] * 3)
    for bad in (-1, 3):
        with pytest.raises(IndexError):
            generate_proof(tree, bad)


@pytest.mark.parametrize("n", range(1, 17))
def test_root_matches_oracle_and_all_proofs_verify(n):
    leaves = random_leaves(n, random.Random(n))
    tree = build_tree(leaves)
    assert tree.root == oracle_root(leaves)
    for i in range(n):
        proof = generate_proof(tree, i)
        assert proof.leaf == leaves[i] and proof.root == tree.root
        assert verify_proof(proof)
        assert len(proof.path) <= (n - 1).bit_length()


@pytest.mark.parametrize("n", range(1, 17))
def test_level_structure(n):
    tree = build_tree(random_leaves(n, random.Random(100 + n)))
    assert tree.levels[0] == tree.leaves
    for lower, upper in zip(tree.levels, tree.levels[1:]):
        assert len(upper) == (len(lower) + 1) // 2
        if len(lower) % 2:
            assert upper[-1] == lower[-1]  # promoted unchanged
        for j in range(len(lower) // 2):
            assert upper[j] == _h(lower[2 * j] + lower[2 * j + 1])
    assert len(tree.levels[-1]) == 1


def mutations(proof: MerkleProof, rnd: random.Random):
    """Every single-element mutation of a proof."""
    yield "leaf", MerkleProof(rnd.randbytes(32), proof.path, proof.root)
    yield "root", MerkleProof(proof.leaf, proof.path, rnd.randbytes(32))
    for k, (side, sib) in enumerate(proof.path):
        path = list(proof.path)
        path[k] = (side, rnd.randbytes(32))
        yield f"sibling{k}", MerkleProof(proof.leaf, tuple(path), proof.root)
        path = list(proof.path)
        path[k] = (LEFT if side == RIGHT else RIGHT, sib)
        yield f"side{k}", MerkleProof(proof.leaf, tuple(path), proof.root)


@pytest.mark.parametrize("n", range(1, 17))
def test_exhaustive_single_mutations_fail(n):
    rnd = random.Random(200 + n)
    tree = build_tree(random_leaves(n, rnd))
    for i in range(n):
        for label, bad in mutations(generate_proof(tree, i), rnd):
            assert not verify_proof(bad), (n, i, label)


def test_malformed_side_tag_is_false():
    tree = build_tree(random_leaves(4, random.Random(1)))
    p = generate_proof(tree, 0)
    bad = MerkleProof(p.leaf, (("up", p.path[0][1]),) + p.path[1:], p.root)
    assert verify_proof(bad) is False


def test_malformed_sibling_length_is_false():
    tree = build_tree(random_leaves(2, random.Random(2)))
    p = generate_proof(tree, 0)
    assert verify_proof(MerkleProof(p.leaf, ((RIGHT, b"x"),), p.root)) is False


def test_serialization_round_trip():
    tree = build_tree(random_leaves(7, random.Random(3)))
    p = generate_proof(tree, 6)
    doc = p.to_dict()
    assert doc["path"][0].keys() == {"side", "hash"}
    assert MerkleProof.from_dict(doc) == p


def test_from_dict_rejects_bad_hex():
    with pytest.raises(MerkleError):
        MerkleProof.from_dict({"leaf": "00", "path": [], "root": "00" * 32})


@given(st.lists(st.binary(min_size=32, max_size=32), min_size=2, max_size=12, unique=True), st.randoms())
def test_permuting_leaves_changes_root(leaves, rnd):
    shuffled = list(leaves)
    rnd.shuffle(shuffled)
    if shuffled != leaves:
        assert build_tree(shuffled).root != build_tree(leaves).root
    assert build_tree(leaves).root == build_tree(list(leaves)).root
