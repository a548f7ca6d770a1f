"""Binary search trees with prefix-code leaf depths for each search set.

Leaf depths are the Shannon-Fano lengths ceil(-log2(p_i / P_S)) of the
normalized in-set distribution (0 for singletons). The depth of an item is
the number of pool tests a binary descent needs to isolate it. Topology is
the canonical prefix code for those lengths: items sorted by (length, id)
receive codewords greedily left to right, which makes every tree, and hence
every simulated test sequence, deterministic and platform independent.

A Huffman variant is available; it shortens the expected descent but the
closed-form depth guarantees in `bounds` are stated for Shannon-Fano lengths.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSet, RatioViolated
from .partition import SearchSet, guarded_ceil
from .priors import binary_entropy

SHANNON_FANO = "shannon-fano"
HUFFMAN = "huffman"


@dataclass
class TreeNode:
    """One node of the search tree; `subset` holds all item ids at or below it."""

    subset: frozenset[int]
    item: Optional[int] = None  # set only on leaves
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.item is not None


@dataclass(frozen=True)
class CodeTree:
    search_set: SearchSet
    lengths: np.ndarray  # leaf depth per item, aligned with search_set.items
    root: TreeNode = field(repr=False)
    code: str = SHANNON_FANO


def shannon_fano_lengths(sset: SearchSet) -> np.ndarray:
    """ceil(-log2(p_i / P_S)) per item; all zeros for a singleton set."""
    total = float(np.sum(sset.probs))
    if not total > 0.0:
        raise DegenerateSet("search set has zero probability mass")
    if len(sset) == 1:
        return np.zeros(1, dtype=np.int64)
    x = np.log2(total) - np.log2(sset.probs)
    # Normalized probabilities are strictly below 1 here, so depths are >= 1.
    return np.asarray([max(1, guarded_ceil(float(v))) for v in x], dtype=np.int64)


def huffman_lengths(sset: SearchSet) -> np.ndarray:
    """Optimal prefix-code depths for the normalized in-set distribution."""
    total = float(np.sum(sset.probs))
    if not total > 0.0:
        raise DegenerateSet("search set has zero probability mass")
    k = len(sset)
    if k == 1:
        return np.zeros(1, dtype=np.int64)
    # (weight, tiebreak, member leaf positions)
    heap = [(float(p) / total, i, [i]) for i, p in enumerate(sset.probs)]
    heapq.heapify(heap)
    depths = np.zeros(k, dtype=np.int64)
    tiebreak = k
    while len(heap) > 1:
        w1, _, m1 = heapq.heappop(heap)
        w2, _, m2 = heapq.heappop(heap)
        for pos in m1 + m2:
            depths[pos] += 1
        heapq.heappush(heap, (w1 + w2, tiebreak, m1 + m2))
        tiebreak += 1
    return depths


def kraft_sum(lengths: np.ndarray) -> float:
    return float(np.sum(np.exp2(-np.asarray(lengths, dtype=np.float64))))


def _canonical_codes(lengths: np.ndarray) -> list[int]:
    # Kraft <= 1 guarantees the greedy assignment never overflows a level.
    codes = []
    code = 0
    prev = int(lengths[0])
    for i, ell in enumerate(int(v) for v in lengths):
        if i:
            code = (code + 1) << (ell - prev)
        if ell and code >> ell:
            raise DegenerateSet("prefix code overflow: lengths violate the Kraft inequality")
        codes.append(code)
        prev = ell
    return codes


def build_tree(sset: SearchSet, code: str = SHANNON_FANO) -> CodeTree:
    """Build the canonical search tree for one set."""
    if code == SHANNON_FANO:
        lengths = shannon_fano_lengths(sset)
    elif code == HUFFMAN:
        lengths = huffman_lengths(sset)
    else:
        raise ValueError(f"unknown code {code!r}")

    items = sset.items
    if len(sset) == 1:
        root = TreeNode(subset=frozenset([int(items[0])]), item=int(items[0]))
        return CodeTree(search_set=sset, lengths=lengths, root=root, code=code)

    order = np.lexsort((items, lengths))  # length ascending, id ascending
    sorted_items = items[order]
    sorted_lengths = lengths[order]
    codes = _canonical_codes(sorted_lengths)

    root = TreeNode(subset=frozenset())
    for item, ell, cw in zip(sorted_items, sorted_lengths, codes):
        node = root
        for level in range(int(ell) - 1, -1, -1):
            bit = (cw >> level) & 1
            if level == 0:
                leaf = TreeNode(subset=frozenset([int(item)]), item=int(item))
                if bit:
                    node.right = leaf
                else:
                    node.left = leaf
            else:
                child = node.right if bit else node.left
                if child is None:
                    child = TreeNode(subset=frozenset())
                    if bit:
                        node.right = child
                    else:
                        node.left = child
                node = child
    _fill_subsets(root)
    return CodeTree(search_set=sset, lengths=lengths, root=root, code=code)


def _fill_subsets(node: TreeNode) -> frozenset[int]:
    if node.is_leaf:
        return node.subset
    members: frozenset[int] = frozenset()
    if node.left is not None:
        members |= _fill_subsets(node.left)
    if node.right is not None:
        members |= _fill_subsets(node.right)
    node.subset = members
    return members


def check_ratio(sset: SearchSet, gamma: float) -> None:
    """Raise RatioViolated unless max p / min p <= gamma (tiny float slack)."""
    pmin = float(np.min(sset.probs))
    pmax = float(np.max(sset.probs))
    if pmin <= 0.0 or pmax / pmin > gamma * (1.0 + 1e-9):
        raise RatioViolated(
            f"probability ratio {pmax / pmin if pmin > 0 else math.inf:.6g} exceeds gamma={gamma}"
        )


def depth_bound(sset: SearchSet, gamma: float) -> float:
    """Depth cap for a bounded-ratio set:

        h(S)/P_S + log2(gamma) + log2(P_S) + 1,  h(S) = -sum p_j log2 p_j

    Every Shannon-Fano length in the set is at most this value.
    """
    check_ratio(sset, gamma)
    total = float(np.sum(sset.probs))
    if not total > 0.0:
        raise DegenerateSet("search set has zero probability mass")
    raw = -np.sum(sset.probs * np.log2(sset.probs))
    return float(raw) / total + math.log2(gamma) + math.log2(total) + 1.0


def set_entropy_bits(sset: SearchSet) -> float:
    """Binary entropy mass of the set's items (sum of h(p_j)), in bits."""
    return float(np.sum(binary_entropy(sset.probs)))


def format_tree(tree: CodeTree) -> str:
    """Indented text dump (debugging aid)."""
    lines: list[str] = []

    def walk(node: Optional[TreeNode], depth: int, tag: str) -> None:
        if node is None:
            return
        ids = ",".join(str(i) for i in sorted(node.subset))
        kind = f"leaf {node.item}" if node.is_leaf else "node"
        lines.append(f"{'  ' * depth}{tag}{kind} {{{ids}}}")
        walk(node.left, depth + 1, "0:")
        walk(node.right, depth + 1, "1:")

    walk(tree.root, 0, "")
    return "\n".join(lines)
