"""Batch Merkle tree over credential digests.

Internal nodes are ``sha256(left || right)`` over the raw 32-byte children,
with no domain-separation prefix. An unpaired trailing node is carried up to
the next level unchanged rather than being duplicated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import DIGEST_SIZE, digest_from_hex, digest_hex, hash_bytes

LEFT = "left"
RIGHT = "right"


class MerkleError(ValueError):
    pass


@dataclass(frozen=True)
class MerkleTree:
    leaves: tuple[bytes, ...]
    levels: tuple[tuple[bytes, ...], ...]

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]


@dataclass(frozen=True)
class MerkleProof:
    leaf: bytes
    path: tuple[tuple[str, bytes], ...]
    root: bytes

    def to_dict(self) -> dict:
        return {
            "leaf": digest_hex(self.leaf),
            "path": [{"side": side, "hash": digest_hex(sib)} for side, sib in self.path],
            "root": digest_hex(self.root),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> MerkleProof:
        # side tags are kept verbatim; verify_proof rejects unknown ones
        try:
            path = tuple((str(step["side"]), digest_from_hex(step["hash"])) for step in doc["path"])
            return cls(digest_from_hex(doc["leaf"]), path, digest_from_hex(doc["root"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MerkleError(f"malformed proof: {exc}") from exc


def build_tree(leaves: list[bytes]) -> MerkleTree:
    if not leaves:
        raise MerkleError("cannot build a tree with no leaves")
    for leaf in leaves:
        if len(leaf) != DIGEST_SIZE:
            raise MerkleError("every leaf must be a 32-byte digest")
    level = tuple(bytes(leaf) for leaf in leaves)
    levels = [level]
    while len(level) > 1:
        nxt = [hash_bytes(level[i] + level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = tuple(nxt)
        levels.append(level)
    return MerkleTree(leaves=levels[0], levels=tuple(levels))


def generate_proof(tree: MerkleTree, index: int) -> MerkleProof:
    if not 0 <= index < len(tree.leaves):
        raise IndexError(f"leaf index {index} out of range for {len(tree.leaves)} leaves")
    path = []
    pos = index
    for level in tree.levels[:-1]:
        sibling = pos ^ 1
        if sibling < len(level):
            path.append((LEFT if sibling < pos else RIGHT, level[sibling]))
        pos //= 2
    return MerkleProof(leaf=tree.leaves[index], path=tuple(path), root=tree.root)


def verify_proof(proof: MerkleProof) -> bool:
    node = proof.leaf
    if len(node) != DIGEST_SIZE or len(proof.root) != DIGEST_SIZE:
        return False
    for side, sibling in proof.path:
        if len(sibling) != DIGEST_SIZE:
            return False
        if side == LEFT:
            node = hash_bytes(sibling + node)
        elif side == RIGHT:
            node = hash_bytes(node + sibling)
        else:
            return False
    return node == proof.root
